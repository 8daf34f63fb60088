#include "pwcrt/workload_gen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "pwcrt/errors.hpp"

namespace pwcrt {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double uniform01(std::mt19937_64& eng) {
  return static_cast<double>(eng() >> 11) * 0x1.0p-53;
}

BitTime uniform_int(std::mt19937_64& eng, BitTime lo, BitTime hi) {
  const double u = uniform01(eng);
  const auto span = static_cast<double>(hi - lo + 1);
  return std::min(hi, lo + static_cast<BitTime>(u * span));
}

BitTime closest_choice(const std::vector<BitTime>& choices, double ideal) {
  BitTime best = choices.front();
  double best_dist = std::abs(std::log(static_cast<double>(best)) - std::log(ideal));
  for (BitTime c : choices) {
    const double d = std::abs(std::log(static_cast<double>(c)) - std::log(ideal));
    if (d < best_dist) {
      best = c;
      best_dist = d;
    }
  }
  return best;
}

}  // namespace

std::vector<double> uunifast(int n, double total, std::mt19937_64& eng) {
  if (n < 1) throw ValidationError("uunifast: need at least one share");
  if (total <= 0.0) throw ValidationError("uunifast: total must be positive");
  std::vector<double> shares(static_cast<std::size_t>(n));
  double sum = total;
  for (int i = 1; i < n; ++i) {
    const double next = sum * std::pow(uniform01(eng), 1.0 / static_cast<double>(n - i));
    shares[static_cast<std::size_t>(i) - 1] = sum - next;
    sum = next;
  }
  shares[static_cast<std::size_t>(n) - 1] = sum;
  return shares;
}

MessageSet generate_set(const GenSpec& spec) {
  if (spec.n_frames < 1) throw ValidationError("generate_set: n_frames must be >= 1");
  if (spec.utilization <= 0.0) throw ValidationError("generate_set: utilization must be positive");
  if (spec.c_min_bits < 1 || spec.c_max_bits < spec.c_min_bits) {
    throw ValidationError("generate_set: bad frame size range");
  }
  if (spec.t_min_ms <= 0.0 || spec.t_max_ms < spec.t_min_ms) {
    throw ValidationError("generate_set: bad period range");
  }
  if (spec.period_choices && spec.period_choices->empty()) {
    throw ValidationError("generate_set: period_choices must not be empty");
  }
  if (spec.e_bits < 0 || spec.lambda_per_bit < 0.0) {
    throw ValidationError("generate_set: error model parameters must be non-negative");
  }

  const double bits_per_ms = spec.bus_speed_bps / 1000.0;
  const auto lo_T = static_cast<BitTime>(std::llround(spec.t_min_ms * bits_per_ms));
  const auto hi_T = static_cast<BitTime>(std::llround(spec.t_max_ms * bits_per_ms));

  std::mt19937_64 eng(splitmix64(spec.seed));

  for (int attempt = 0; attempt < spec.max_attempts; ++attempt) {
    const auto n = static_cast<std::size_t>(spec.n_frames);
    const std::vector<double> shares = uunifast(spec.n_frames, spec.utilization, eng);
    std::vector<Frame> frames(n);
    double realized = 0.0;
    for (std::size_t f = 0; f < n; ++f) {
      Frame& fr = frames[f];
      char id[16];
      std::snprintf(id, sizeof(id), "m%02zu", f + 1);
      fr.id = id;
      fr.C = uniform_int(eng, spec.c_min_bits, spec.c_max_bits);
      const double ideal_T = static_cast<double>(fr.C) / shares[f];
      if (spec.period_choices) {
        fr.T = closest_choice(*spec.period_choices, ideal_T);
      } else {
        fr.T = std::clamp(static_cast<BitTime>(std::llround(ideal_T)), lo_T, hi_T);
      }
      fr.D = fr.T;
      fr.E = spec.e_bits;
      realized += static_cast<double>(fr.C) / static_cast<double>(fr.T);
    }
    if (std::abs(realized - spec.utilization) > spec.util_tolerance * spec.utilization) continue;

    // jitter is drawn only for the accepted attempt, after every C and T, so
    // the same seed yields the same timing parameters for any jitter_frac
    if (spec.jitter_frac > 0.0) {
      for (auto& fr : frames) {
        const double frac = uniform01(eng) * spec.jitter_frac;
        fr.J = static_cast<BitTime>(std::llround(frac * static_cast<double>(fr.T)));
      }
    }

    if (spec.priority == PriorityAssignment::rate_monotonic) {
      std::stable_sort(frames.begin(), frames.end(),
                       [](const Frame& a, const Frame& b) { return a.T < b.T; });
    }
    for (std::size_t f = 0; f < n; ++f) frames[f].priority = static_cast<int>(f) + 1;

    MessageSet set;
    set.bus_speed_bps = spec.bus_speed_bps;
    set.error_model.lambda = spec.lambda_per_bit;
    if (spec.lambda_per_bit > 0.0) {
      set.error_model.residual_threshold = spec.retry_residual_threshold;
    }
    set.frames = std::move(frames);
    validate_message_set(set);
    return set;
  }
  throw ConvergenceError("generate_set: no draw met the utilization tolerance");
}

}  // namespace pwcrt
