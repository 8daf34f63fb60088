#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "pwcrt/can_model.hpp"

namespace pwcrt {

enum class PriorityAssignment {
  rate_monotonic,    // shorter period = higher priority
  generation_order,  // priorities follow the draw order, independent of period
};

struct GenSpec {
  int n_frames = 10;
  double utilization = 0.5;
  // a set is rejected and redrawn when its realized utilization strays more
  // than this relative fraction from the target
  double util_tolerance = 0.05;
  std::uint64_t seed = 1;
  double t_min_ms = 10.0;
  double t_max_ms = 1000.0;
  BitTime c_min_bits = 55;
  BitTime c_max_bits = 135;
  BitTime e_bits = 13;
  // Per-frame release jitter J is a uniform draw in (0, jitter_frac] times the
  // period. Only the Monte Carlo simulator consumes J; the analyses treat
  // releases as strictly periodic.
  double jitter_frac = 0.1;
  double lambda_per_bit = 1e-5;
  double bus_speed_bps = 125000.0;
  PriorityAssignment priority = PriorityAssignment::rate_monotonic;
  // when lambda > 0 the generated model truncates retries at this residual
  double retry_residual_threshold = 1e-15;
  // restrict periods to these values (bits); handy when a short hyperperiod
  // is needed. The closest choice to each frame's ideal period is used.
  std::optional<std::vector<BitTime>> period_choices;
  int max_attempts = 200;
};

// UUniFast: n utilization shares summing to `total`, unbiased over the simplex.
std::vector<double> uunifast(int n, double total, std::mt19937_64& eng);

// Draws one message set. Deterministic in spec.seed. Throws ConvergenceError
// if no draw lands within the utilization tolerance after max_attempts.
MessageSet generate_set(const GenSpec& spec);

}  // namespace pwcrt
