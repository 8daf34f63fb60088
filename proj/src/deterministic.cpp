#include "pwcrt/deterministic.hpp"

#include <algorithm>

#include "pwcrt/errors.hpp"

namespace pwcrt {

namespace {

inline BitTime ceil_div(BitTime a, BitTime b) { return (a + b - 1) / b; }

// Number of periodic releases (0, T, 2T, ...) strictly before t.
inline BitTime releases_before(BitTime t, BitTime T) {
  if (t <= 0) return 0;
  return ceil_div(t, T);
}

}  // namespace

DetFrameResult det_wcrt(const MessageSet& set, std::size_t i, const DetOptions& opts) {
  if (i >= set.frames.size()) throw ValidationError("frame index out of range");
  const Frame& fi = set.frames[i];

  auto cost = [&](const Frame& f) -> BitTime {
    if (!opts.inflate_with_retries) return f.C;
    int k = resolve_retry_limit(f, set.error_model);
    return f.C + k * (f.C + f.E);
  };

  BitTime B = blocking_time(set, i, opts.include_own_level_blocking);

  // Level-i busy window: smallest L with L = B + sum of demand released in [0, L).
  BitTime L = B;
  for (std::size_t j = 0; j <= i; ++j) L += cost(set.frames[j]);
  for (;;) {
    BitTime next = B;
    for (std::size_t j = 0; j <= i; ++j) {
      next += releases_before(L, set.frames[j].T) * cost(set.frames[j]);
    }
    if (next == L) break;
    L = next;
    if (L > opts.horizon) throw ConvergenceError("busy window exceeded horizon for " + fi.id);
  }

  DetFrameResult result;
  result.busy_window = L;
  result.instances = static_cast<int>(ceil_div(std::max<BitTime>(L, 1), fi.T));

  for (int q = 0; q < result.instances; ++q) {
    // Start of instance q's transmission: blocking, q earlier own instances,
    // and all higher-priority releases strictly before the start.
    BitTime s = B + q * cost(fi);
    for (std::size_t j = 0; j < i; ++j) s += cost(set.frames[j]);
    for (;;) {
      BitTime next = B + q * cost(fi);
      for (std::size_t j = 0; j < i; ++j) {
        next += releases_before(s, set.frames[j].T) * cost(set.frames[j]);
      }
      if (next == s) break;
      s = next;
      if (s > opts.horizon) throw ConvergenceError("start time exceeded horizon for " + fi.id);
    }
    result.wcrt = std::max(result.wcrt, s + cost(fi) - q * fi.T);
  }
  result.schedulable = result.wcrt <= fi.D;
  return result;
}

std::vector<DetFrameResult> det_wcrt_all(const MessageSet& set, const DetOptions& opts) {
  std::vector<DetFrameResult> out;
  out.reserve(set.frames.size());
  for (std::size_t i = 0; i < set.frames.size(); ++i) out.push_back(det_wcrt(set, i, opts));
  return out;
}

}  // namespace pwcrt
