#pragma once

#include <vector>

#include "pwcrt/can_model.hpp"

namespace pwcrt {

struct DetOptions {
  // Substitute C + k(C + E) for every transmission to bound response times
  // under the retry limit instead of the error-free case.
  bool inflate_with_retries = false;
  // Blocking over priority levels >= own instead of strictly lower ones.
  bool include_own_level_blocking = false;
  BitTime horizon = BitTime{1} << 24;
};

struct DetFrameResult {
  BitTime wcrt = 0;
  BitTime busy_window = 0;  // length of the level-i busy window
  int instances = 0;        // releases of the frame inside the window
  bool schedulable = false;
};

// Worst-case response time of frame i under non-preemptive fixed-priority
// arbitration: busy-window fixed point with blocking, checking every instance
// of the frame inside the window. Interference counts releases strictly
// before a transmission start; an arrival exactly at the instant the bus
// frees does not join that arbitration round.
DetFrameResult det_wcrt(const MessageSet& set, std::size_t i, const DetOptions& opts = {});

std::vector<DetFrameResult> det_wcrt_all(const MessageSet& set, const DetOptions& opts = {});

}  // namespace pwcrt
