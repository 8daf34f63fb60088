#pragma once

#include <string>
#include <vector>

#include "pwcrt/can_model.hpp"
#include "pwcrt/exceedance.hpp"
#include "pwcrt/pmf.hpp"

namespace pwcrt {

struct AnalysisOptions {
  // Stop threshold: iteration ends once the probability of reaching the next
  // release falls below epsilon.
  double epsilon = 1e-12;
  BitTime horizon = BitTime{1} << 24;
  // Fold each transmission PMF's truncation mass onto its last support point
  // instead of carrying it as residual.
  bool fold_tx_tail = false;
  // Blocking over priority levels >= own (alternative recurrence).
  bool include_own_level_blocking = false;
};

// Distribution of the level-i busy window length, recorded at every distinct
// release time processed. states[n] holds the window PMF before any instance
// released at that time was convolved, which is exactly the state backlogs
// are derived from.
struct BusyWindowSequence {
  std::vector<std::pair<BitTime, Pmf>> states;
  BitTime stop_time = 0;   // release time at which the stop condition fired
  double stop_tail = 0.0;  // neglected tail mass (< epsilon)

  const Pmf& state_at(BitTime release) const;
};

struct InstanceResponse {
  int ordinal = 1;      // 1-based instance number within the busy window
  BitTime release = 0;  // (ordinal - 1) * T
  Pmf backlog;
  Pmf queuing_delay;  // delay from release until the final transmission starts
  Pmf response;       // queuing delay plus C
  double neglected_tail = 0.0;  // tail dropped by this instance's stop
};

struct FrameAnalysis {
  std::size_t frame_index = 0;
  std::string method;
  std::vector<InstanceResponse> instances;
  ExceedanceCurve curve;
  double deadline_miss_probability = 0.0;
  BitTime stop_time = 0;
  // Conservative bound on probability mass the stop conditions left
  // unprocessed; reported alongside results, never folded into them.
  double stop_tail_budget = 0.0;
};

// Busy-window iteration for frame i: w starts as a point mass at the blocking
// time; each instance of an equal-or-higher-priority frame released at time t
// convolves its transmission PMF into the part of w beyond t. Mass exactly at
// t stays stable: a window that ends exactly when a frame arrives does not
// absorb it. Instances released at time 0 always convolve.
BusyWindowSequence busy_window_sequence(const MessageSet& set, std::size_t i,
                                        const AnalysisOptions& opts = {});

// Unfinished work at a release: window mass at or below r collapses to a
// point at 0, the remainder shifts left by r.
Pmf backlog_at(const BusyWindowSequence& seq, BitTime release);

// Delay from release until the instance's own final (error-free) transmission
// begins: backlog plus own retransmissions, then higher-priority instances at
// offsets d >= 0. Offset-0 instances always convolve (they win arbitration
// against the instance released at the same time); for d > 0 mass exactly at
// d stays stable.
Pmf queuing_delay(const MessageSet& set, std::size_t i, BitTime release, const Pmf& backlog,
                  const AnalysisOptions& opts = {}, double* neglected_tail = nullptr);

// Response distribution: queuing delay shifted by the final transmission C.
Pmf response_pmf(const Pmf& queuing_delay, const Frame& frame);

// Full pipeline for frame i: one busy-window pass, then per enumerated
// instance (every release strictly before the stop time) backlog, queuing
// delay and response. The curve is the pointwise max across instances.
FrameAnalysis analyze_frame(const MessageSet& set, std::size_t i,
                            const AnalysisOptions& opts = {});

// Baseline reconstruction of the older convolution scheme: every instance
// rebuilds its delay from the critical instant with no window reuse, and
// arrivals landing exactly on a window boundary join that arbitration round
// (boundary mass is convolved). Strictly more pessimistic and more work.
FrameAnalysis analyze_frame_legacy(const MessageSet& set, std::size_t i,
                                   const AnalysisOptions& opts = {});

}  // namespace pwcrt
