#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "pwcrt/pmf.hpp"

namespace pwcrt {

// Right-continuous step function F(t) = P(R > t). Between breakpoints the
// value is the one attached to the breakpoint on the left; before the first
// breakpoint it is `initial`.
struct ExceedanceCurve {
  struct Step {
    BitTime t_bits;
    double t_ms;
    double probability;  // F(t) for t in [t_bits, next breakpoint)
  };

  std::string frame_id;
  std::string method;  // improved | legacy | deterministic | monte_carlo
  double bus_speed_bps = 0.0;
  double initial = 1.0;
  std::vector<Step> steps;

  double value_at_ms(double t_ms) const;
  double value_at_bits(double t_bits) const;
};

// Curve over the pointwise maximum of per-instance exceedance: F(t) =
// max_j P(R_j > t). Residuals count toward every tail.
ExceedanceCurve exceedance_from_pmfs(const std::vector<Pmf>& responses, double bus_speed_bps,
                                     std::string frame_id, std::string method);

// Degenerate curve of a deterministic response time: 1 below wcrt, 0 after.
ExceedanceCurve exceedance_step(BitTime wcrt, double bus_speed_bps, std::string frame_id,
                                std::string method);

// CSV with header t_bits,t_ms,probability,method,frame_id.
void write_curve_csv(const ExceedanceCurve& curve, std::ostream& out);
void write_curve_csv(const ExceedanceCurve& curve, const std::string& path);
ExceedanceCurve read_curve_csv(std::istream& in);
ExceedanceCurve read_curve_csv(const std::string& path);

struct CurveComparison {
  double mse = 0.0;
  double max_abs_diff = 0.0;
};

// Both curves evaluated at `points` evenly spaced times over [lo_ms, hi_ms]
// (step-function evaluation). points must be >= 2 and the range non-empty.
CurveComparison compare_curves(const ExceedanceCurve& a, const ExceedanceCurve& b, int points,
                               double lo_ms, double hi_ms);

}  // namespace pwcrt
