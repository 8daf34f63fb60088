#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "pwcrt/pmf.hpp"

namespace pwcrt {

// One CAN frame (message stream). All times are in bit-times.
struct Frame {
  std::string id;
  int priority = 0;  // unique per set; smaller value wins arbitration
  BitTime C = 1;     // error-free transmission time
  BitTime T = 1;     // period
  BitTime D = 1;     // relative deadline, D <= T
  BitTime E = 0;     // error-signalling overhead added to each retry
  BitTime J = 0;     // release jitter bound; consumed only by the simulator

  // Explicit transmission-time PMF. When set it replaces the Poisson-derived
  // PMF entirely; support must start at C.
  std::optional<Pmf> tx_pmf;
};

struct ErrorModel {
  double lambda = 0.0;  // bit error rate per bit-time
  // Exactly one of the two should be set when lambda > 0 and a frame has no
  // explicit PMF: a fixed retry limit, or a residual threshold from which the
  // per-frame limit is derived.
  std::optional<int> retry_limit;
  std::optional<double> residual_threshold;
};

struct MessageSet {
  double bus_speed_bps = 125000.0;
  ErrorModel error_model;
  std::vector<Frame> frames;  // sorted by ascending priority value

  std::size_t index_of(std::string_view frame_id) const;
  std::size_t lowest_priority_index() const;
  double utilization() const;
};

// P(no error during delta bit-times) = e^(-lambda * delta).
double poisson_ok(double lambda, BitTime delta);
double poisson_errors(double lambda, BitTime delta);

// P(exactly n retries): the first attempt lasts C, every retry C + E.
double retry_probability(int n, double lambda, BitTime C, BitTime E);

// P(more than k retries) in closed form.
double retry_residual(int k, double lambda, BitTime C, BitTime E);

// Smallest k whose residual falls below the threshold.
int choose_retry_limit(double lambda, BitTime C, BitTime E, double residual_threshold);

// Retry limit for one frame under the set's error model.
int resolve_retry_limit(const Frame& frame, const ErrorModel& model);

// Transmission-time PMF: support C + n(C + E) for n = 0..k with masses
// retry_probability(n), truncation mass kept as residual. fold_tail moves the
// residual onto the last support point instead. A frame's explicit PMF, when
// present, is returned as-is.
Pmf transmission_time_pmf(const Frame& frame, const ErrorModel& model, bool fold_tail = false);

// Same distribution minus the final error-free transmission: shifted left by C.
Pmf retrans_pmf(const Frame& frame, const ErrorModel& model, bool fold_tail = false);

// Worst blocking by a lower-priority frame already on the bus: the largest
// C + E among strictly lower-priority frames, 0 when there are none. The
// include_own_level variant also considers the frame's own level (an
// alternative recurrence some analyses use).
BitTime blocking_time(const MessageSet& set, std::size_t i, bool include_own_level = false);

// Throws ValidationError on any broken invariant (duplicate ids/priorities,
// D > T, C < 1, malformed explicit PMFs, ...). Frames must already be sorted.
void validate_message_set(const MessageSet& set);

MessageSet message_set_from_json(const nlohmann::json& j);
nlohmann::json message_set_to_json(const MessageSet& set);
MessageSet load_message_set(const std::string& path);
void save_message_set(const MessageSet& set, const std::string& path);

}  // namespace pwcrt
