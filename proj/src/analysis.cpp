#include "pwcrt/analysis.hpp"

#include <algorithm>
#include <limits>

#include "pwcrt/errors.hpp"

namespace pwcrt {

namespace {

// Periodic releases of frames [0, count) merged in (time, priority) order.
// Frames are already priority-sorted, so the index doubles as the tiebreak.
class ReleaseStream {
 public:
  ReleaseStream(const MessageSet& set, std::size_t count, BitTime start_at)
      : next_(count) {
    for (std::size_t f = 0; f < count; ++f) {
      BitTime T = set.frames[f].T;
      BitTime first = start_at <= 0 ? 0 : (start_at + T - 1) / T * T;
      next_[f] = first;
    }
  }

  struct Event {
    BitTime time;
    std::size_t frame;
  };

  Event pop(const MessageSet& set) {
    std::size_t best = 0;
    for (std::size_t f = 1; f < next_.size(); ++f) {
      if (next_[f] < next_[best]) best = f;
    }
    Event ev{next_[best], best};
    next_[best] += set.frames[best].T;
    return ev;
  }

 private:
  std::vector<BitTime> next_;
};

std::vector<Pmf> transmission_pmfs(const MessageSet& set, std::size_t count,
                                   const AnalysisOptions& opts) {
  std::vector<Pmf> pmfs;
  pmfs.reserve(count);
  for (std::size_t f = 0; f < count; ++f) {
    pmfs.push_back(transmission_time_pmf(set.frames[f], set.error_model, opts.fold_tx_tail));
  }
  return pmfs;
}

void check_options(const AnalysisOptions& opts) {
  if (!(opts.epsilon > 0.0) || opts.epsilon >= 1.0) {
    throw ValidationError("epsilon must lie in (0, 1)");
  }
  if (opts.horizon < 1) throw ValidationError("horizon must be positive");
}

// Legacy boundary handling: mass exactly at the release time joins the
// convolution, and the matching stop test counts that mass as still pending.
struct WindowPassResult {
  BitTime stop_time = 0;
  double stop_tail = 0.0;
  Pmf window;
};

WindowPassResult window_pass(const MessageSet& set, std::size_t i, const std::vector<Pmf>& tx,
                             const AnalysisOptions& opts, bool legacy_boundaries,
                             std::vector<std::pair<BitTime, Pmf>>* record) {
  Pmf w;
  BitTime B = blocking_time(set, i, opts.include_own_level_blocking);
  w = Pmf::point_mass(B, 1.0);

  ReleaseStream stream(set, i + 1, 0);
  BitTime last_recorded = -1;
  if (record) record->emplace_back(0, w);
  last_recorded = 0;

  for (;;) {
    auto ev = stream.pop(set);
    if (ev.time > opts.horizon) {
      throw ConvergenceError("busy-window iteration exceeded horizon for " + set.frames[i].id);
    }
    if (record && ev.time != last_recorded) {
      record->emplace_back(ev.time, w);
      last_recorded = ev.time;
    }
    if (ev.time > 0) {
      double tail = legacy_boundaries ? w.support_tail_mass(ev.time - 1) : w.support_tail_mass(ev.time);
      if (tail < opts.epsilon) {
        return {ev.time, tail, std::move(w)};
      }
    }
    // The critical-instant releases at time 0 always convolve: with zero
    // blocking the window starts as {0:1}, which must not be frozen stable.
    auto boundary = (ev.time == 0 || legacy_boundaries) ? SplitBoundary::to_pending
                                                        : SplitBoundary::to_stable;
    auto parts = w.split(ev.time, boundary);
    w = coalesce(parts.stable, convolve(parts.pending, tx[ev.frame]));
  }
}

Pmf collapse_backlog(const Pmf& window, BitTime release) {
  auto parts = window.split(release, SplitBoundary::to_stable);
  double done = parts.stable.total_mass();
  Pmf pending = parts.pending.shifted(-release);
  if (done <= 0.0) return pending;
  return coalesce(Pmf::point_mass(0, done), pending);
}

Pmf queuing_delay_pass(const MessageSet& set, std::size_t i, BitTime release, const Pmf& backlog,
                       const std::vector<Pmf>& tx, const AnalysisOptions& opts,
                       bool legacy_boundaries, double* neglected_tail) {
  Pmf S = convolve(backlog, retrans_pmf(set.frames[i], set.error_model, opts.fold_tx_tail));
  if (neglected_tail) *neglected_tail = 0.0;
  if (i == 0) return S;  // no higher-priority interference

  ReleaseStream stream(set, i, release);
  for (;;) {
    auto ev = stream.pop(set);
    BitTime d = ev.time - release;
    if (d > opts.horizon) {
      throw ConvergenceError("queuing-delay iteration exceeded horizon for " + set.frames[i].id);
    }
    if (d > 0) {
      double tail = legacy_boundaries ? S.support_tail_mass(d - 1) : S.support_tail_mass(d);
      if (tail < opts.epsilon) {
        if (neglected_tail) *neglected_tail = tail;
        return S;
      }
    }
    // An instance released together with the analyzed one wins arbitration,
    // so at offset 0 the whole distribution convolves.
    auto boundary = (d == 0 || legacy_boundaries) ? SplitBoundary::to_pending
                                                  : SplitBoundary::to_stable;
    auto parts = S.split(d, boundary);
    S = coalesce(parts.stable, convolve(parts.pending, tx[ev.frame]));
  }
}

FrameAnalysis finish_analysis(const MessageSet& set, std::size_t i, std::string method,
                              std::vector<InstanceResponse> instances, BitTime stop_time,
                              double stop_tail) {
  FrameAnalysis result;
  result.frame_index = i;
  result.method = std::move(method);
  result.stop_time = stop_time;
  result.stop_tail_budget = stop_tail;
  std::vector<Pmf> responses;
  responses.reserve(instances.size());
  for (auto& inst : instances) {
    result.stop_tail_budget = std::max(result.stop_tail_budget, stop_tail + inst.neglected_tail);
    responses.push_back(inst.response);
  }
  result.curve =
      exceedance_from_pmfs(responses, set.bus_speed_bps, set.frames[i].id, result.method);
  result.deadline_miss_probability = result.curve.value_at_bits(set.frames[i].D);
  result.instances = std::move(instances);
  return result;
}

}  // namespace

const Pmf& BusyWindowSequence::state_at(BitTime release) const {
  for (const auto& [r, w] : states) {
    if (r == release) return w;
  }
  throw ValidationError("no busy-window state recorded at requested release");
}

BusyWindowSequence busy_window_sequence(const MessageSet& set, std::size_t i,
                                        const AnalysisOptions& opts) {
  check_options(opts);
  if (i >= set.frames.size()) throw ValidationError("frame index out of range");
  auto tx = transmission_pmfs(set, i + 1, opts);
  BusyWindowSequence seq;
  auto result = window_pass(set, i, tx, opts, /*legacy_boundaries=*/false, &seq.states);
  seq.stop_time = result.stop_time;
  seq.stop_tail = result.stop_tail;
  return seq;
}

Pmf backlog_at(const BusyWindowSequence& seq, BitTime release) {
  return collapse_backlog(seq.state_at(release), release);
}

Pmf queuing_delay(const MessageSet& set, std::size_t i, BitTime release, const Pmf& backlog,
                  const AnalysisOptions& opts, double* neglected_tail) {
  check_options(opts);
  if (i >= set.frames.size()) throw ValidationError("frame index out of range");
  auto tx = transmission_pmfs(set, i, opts);
  return queuing_delay_pass(set, i, release, backlog, tx, opts, /*legacy_boundaries=*/false,
                            neglected_tail);
}

Pmf response_pmf(const Pmf& queuing_delay, const Frame& frame) {
  return queuing_delay.shifted(frame.C);
}

FrameAnalysis analyze_frame(const MessageSet& set, std::size_t i, const AnalysisOptions& opts) {
  check_options(opts);
  if (i >= set.frames.size()) throw ValidationError("frame index out of range");
  const Frame& fi = set.frames[i];
  auto tx = transmission_pmfs(set, i + 1, opts);

  BusyWindowSequence seq;
  auto window = window_pass(set, i, tx, opts, /*legacy_boundaries=*/false, &seq.states);
  seq.stop_time = window.stop_time;
  seq.stop_tail = window.stop_tail;

  std::vector<InstanceResponse> instances;
  for (int j = 1;; ++j) {
    BitTime r = static_cast<BitTime>(j - 1) * fi.T;
    if (r >= seq.stop_time) break;
    InstanceResponse inst;
    inst.ordinal = j;
    inst.release = r;
    inst.backlog = backlog_at(seq, r);
    inst.queuing_delay = queuing_delay_pass(set, i, r, inst.backlog, tx, opts,
                                            /*legacy_boundaries=*/false, &inst.neglected_tail);
    inst.response = response_pmf(inst.queuing_delay, fi);
    instances.push_back(std::move(inst));
  }
  return finish_analysis(set, i, "improved", std::move(instances), seq.stop_time, seq.stop_tail);
}

FrameAnalysis analyze_frame_legacy(const MessageSet& set, std::size_t i,
                                   const AnalysisOptions& opts) {
  check_options(opts);
  if (i >= set.frames.size()) throw ValidationError("frame index out of range");
  const Frame& fi = set.frames[i];
  auto tx = transmission_pmfs(set, i + 1, opts);

  // Enumeration needs its own full pass: there is no reusable window state.
  auto window = window_pass(set, i, tx, opts, /*legacy_boundaries=*/true, nullptr);

  std::vector<InstanceResponse> instances;
  for (int j = 1;; ++j) {
    BitTime r = static_cast<BitTime>(j - 1) * fi.T;
    if (r >= window.stop_time) break;
    InstanceResponse inst;
    inst.ordinal = j;
    inst.release = r;

    // Rebuild the window prefix from the critical instant for this instance.
    Pmf w = Pmf::point_mass(blocking_time(set, i, opts.include_own_level_blocking), 1.0);
    ReleaseStream stream(set, i + 1, 0);
    for (;;) {
      auto ev = stream.pop(set);
      if (ev.time >= r) break;
      if (ev.time > 0 && w.support_tail_mass(ev.time - 1) < opts.epsilon) break;
      auto parts = w.split(ev.time, SplitBoundary::to_pending);
      w = coalesce(parts.stable, convolve(parts.pending, tx[ev.frame]));
    }
    inst.backlog = collapse_backlog(w, r);
    inst.queuing_delay = queuing_delay_pass(set, i, r, inst.backlog, tx, opts,
                                            /*legacy_boundaries=*/true, &inst.neglected_tail);
    inst.response = response_pmf(inst.queuing_delay, fi);
    instances.push_back(std::move(inst));
  }
  return finish_analysis(set, i, "legacy", std::move(instances), window.stop_time,
                         window.stop_tail);
}

}  // namespace pwcrt
