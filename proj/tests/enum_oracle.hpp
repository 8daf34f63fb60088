#pragma once

// Brute-force response-time oracle for tiny message sets. Instead of PMF
// convolutions it enumerates every combination of per-transmission durations
// (a combination is one deterministic schedule; its probability is the
// product of the chosen masses) and accumulates the resulting response of
// each analysed instance. Durations are drawn from the truncated
// transmission-time support, so accumulated masses line up entry-for-entry
// with the analytic result, which tracks the cut-off tail separately.
//
// The busy-window model assumes that once the window closes before a later
// release, that release starts with a clean bus. A combination can violate
// that physically: work released after the window closed may still occupy
// the bus at the next analysed release. Such carry-over is detected
// conservatively (all post-window bundles at their maximum duration) and
// flagged, so callers can discard sets where the model and a raw timeline
// could disagree.

#include <algorithm>
#include <cstddef>
#include <functional>
#include <map>
#include <stdexcept>
#include <utility>
#include <vector>

#include "pwcrt/can_model.hpp"
#include "pwcrt/pmf.hpp"

namespace oracle {

struct EnumTooDeep : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct EnumResult {
  // per_instance[j] maps response -> probability for the j-th analysed release
  std::vector<std::map<pwcrt::BitTime, double>> per_instance;
  // combined probability of combinations cut off below the pruning threshold;
  // any per-value comparison is exact only up to this much
  std::vector<double> pruned;
  bool straddle = false;  // some combination may carry work across an analysed release
  std::size_t paths = 0;
};

// Enumerates the response distribution of frame `i` at each of the given
// release instants (ascending, first one usually 0). Combinations whose
// probability drops below prune_eps are cut and accounted in `pruned`.
// Throws EnumTooDeep when a single combination needs more than `max_branches`
// duration choices.
inline EnumResult enumerate_responses(const pwcrt::MessageSet& set, std::size_t i,
                                      const std::vector<pwcrt::BitTime>& releases,
                                      int max_branches = 16, double prune_eps = 0.0) {
  const auto& frames = set.frames;

  struct TxTable {
    std::vector<pwcrt::Pmf::Entry> entries;
    pwcrt::BitTime max_dur = 0;
  };
  std::vector<TxTable> tx(i + 1);
  for (std::size_t f = 0; f <= i; ++f) {
    const pwcrt::Pmf p = pwcrt::transmission_time_pmf(frames[f], set.error_model,
                                                      /*fold_tail=*/false);
    tx[f].entries.assign(p.entries().begin(), p.entries().end());
    tx[f].max_dur = p.max_value();
  }
  const pwcrt::BitTime blocking = pwcrt::blocking_time(set, i);
  const pwcrt::BitTime own_c = frames[i].C;

  EnumResult result;
  result.per_instance.resize(releases.size());
  result.pruned.assign(releases.size(), 0.0);

  for (std::size_t j = 0; j < releases.size(); ++j) {
    const pwcrt::BitTime r = releases[j];
    auto& hist = result.per_instance[j];
    double& pruned = result.pruned[j];

    // Bundles that can join the busy window: every release of frames 0..i
    // strictly before r, in (time, priority) order.
    std::vector<std::pair<pwcrt::BitTime, std::size_t>> win;
    for (std::size_t f = 0; f <= i; ++f) {
      for (pwcrt::BitTime s = 0; s < r; s += frames[f].T) win.push_back({s, f});
    }
    std::sort(win.begin(), win.end());

    // First higher-priority release at or after r, as an offset from r.
    std::vector<pwcrt::BitTime> first_d(i, 0);
    for (std::size_t f = 0; f < i; ++f) {
      const pwcrt::BitTime next = ((r + frames[f].T - 1) / frames[f].T) * frames[f].T;
      first_d[f] = next - r;
    }

    // Queueing phase: the instance waits for the backlog plus its own
    // retransmissions plus every higher-priority bundle released while it has
    // not yet started its final attempt. Offsets are consumed in ascending
    // (offset, priority) order; an offset of zero always joins.
    std::function<void(double, pwcrt::BitTime, std::vector<pwcrt::BitTime>, int)> queue_phase =
        [&](double prob, pwcrt::BitTime s_val, std::vector<pwcrt::BitTime> next_d,
            int branches) {
          int pick = -1;
          for (std::size_t f = 0; f < i; ++f) {
            if (pick < 0 || next_d[f] < next_d[pick]) pick = static_cast<int>(f);
          }
          if (pick >= 0 && (next_d[pick] == 0 || next_d[pick] < s_val)) {
            if (branches + 1 > max_branches) {
              throw EnumTooDeep("enumeration oracle: combination too deep");
            }
            const pwcrt::BitTime d = next_d[pick];
            next_d[pick] = d + frames[pick].T;
            for (const auto& e : tx[pick].entries) {
              const double p = prob * e.mass;
              if (p < prune_eps) {
                pruned += p;
                continue;
              }
              queue_phase(p, s_val + e.value, next_d, branches + 1);
            }
            return;
          }
          // all remaining offsets are at or beyond the start of the final
          // attempt, so nothing else can join
          hist[s_val + own_c] += prob;
          result.paths += 1;
        };

    // Window phase: accumulate the busy window over the releases before r.
    // A release joins while the window is still pending at its instant
    // (time 0 always joins). Once the window closes, later bundles are
    // tracked only for the carry-over check, at their maximum duration.
    std::function<void(std::size_t, double, pwcrt::BitTime, bool, pwcrt::BitTime, int)>
        window_phase = [&](std::size_t idx, double prob, pwcrt::BitTime w, bool alive,
                           pwcrt::BitTime level, int branches) {
          if (idx == win.size()) {
            pwcrt::BitTime backlog = 0;
            if (alive) {
              backlog = w > r ? w - r : 0;
            } else if (level > r) {
              result.straddle = true;
            }
            if (branches + 1 > max_branches) {
              throw EnumTooDeep("enumeration oracle: combination too deep");
            }
            for (const auto& e : tx[i].entries) {
              const double p = prob * e.mass;
              if (p < prune_eps) {
                pruned += p;
                continue;
              }
              queue_phase(p, backlog + e.value - own_c, first_d, branches + 1);
            }
            return;
          }
          const auto [s, f] = win[idx];
          if (alive && (s == 0 || w > s)) {
            if (branches + 1 > max_branches) {
              throw EnumTooDeep("enumeration oracle: combination too deep");
            }
            for (const auto& e : tx[f].entries) {
              const double p = prob * e.mass;
              if (p < prune_eps) {
                pruned += p;
                continue;
              }
              window_phase(idx + 1, p, w + e.value, true, level, branches + 1);
            }
          } else {
            const pwcrt::BitTime start = alive ? s : std::max(level, s);
            window_phase(idx + 1, prob, w, false, start + tx[f].max_dur, branches);
          }
        };

    window_phase(0, 1.0, blocking, true, 0, 0);
  }
  return result;
}

}  // namespace oracle
