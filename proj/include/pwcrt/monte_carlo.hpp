#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "pwcrt/can_model.hpp"
#include "pwcrt/exceedance.hpp"

namespace pwcrt {

enum class BlockingMode {
  worst_case_deterministic,  // bus held for the full blocking time B_i
  sampled,                   // random lower-priority remnant, uniform in [1, C+E]
};

enum class JitterMode { off, uniform };

struct SimConfig {
  std::size_t frame_index = 0;
  std::uint64_t samples = 1'000'000;
  std::uint64_t seed = 1;
  BlockingMode blocking = BlockingMode::worst_case_deterministic;
  JitterMode jitter = JitterMode::off;
  BitTime horizon = BitTime{1} << 24;
};

struct InstanceHistogram {
  int ordinal = 1;
  BitTime release = 0;
  std::uint64_t observed = 0;  // samples in which this instance fell inside the busy period
  std::map<BitTime, std::uint64_t> counts;
};

struct SimReport {
  std::string frame_id;
  std::size_t frame_index = 0;
  std::uint64_t samples = 0;
  std::uint64_t seed = 0;
  std::string rng;  // pinned generator description, part of reproducibility
  std::string blocking;
  std::string jitter;
  std::vector<InstanceHistogram> instances;
  std::map<BitTime, std::uint64_t> worst_counts;  // per-sample max response
};

// Critical-instant discrete-event simulation of the frame's busy period.
// Deterministic for a given (set, config): one mt19937_64 stream seeded via
// splitmix64, transmissions consume draws in simulation order. Retry counts
// are sampled from the same truncated distribution the analysis uses, with
// the truncation residual clamped onto the last support point. With uniform
// jitter each release is delayed by an integer offset drawn from [0, J];
// the blocking remnant still starts at time zero.
SimReport simulate(const MessageSet& set, const SimConfig& config);

// F(t) = max over instances of P(response > t), counting samples where the
// instance fell outside the busy period as not exceeding.
ExceedanceCurve empirical_exceedance(const SimReport& report, double bus_speed_bps);

nlohmann::json sim_report_to_json(const SimReport& report);

}  // namespace pwcrt
