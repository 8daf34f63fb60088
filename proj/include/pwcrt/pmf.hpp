#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace pwcrt {

// All times are integer bit-times on the bus.
using BitTime = std::int64_t;

// Which side of a split owns the boundary value itself.
enum class SplitBoundary { to_stable, to_pending };

struct PmfSplit;

// Sparse probability mass function over non-negative integer bit-times.
//
// Entries are kept sorted by value with strictly positive masses. A Pmf may be
// partial (total mass < 1, e.g. one half of a split) or complete (total mass
// plus residual == 1). The residual is mass truncated beyond the largest
// represented value; tail queries count it, so truncation always errs on the
// conservative side for exceedance purposes. Masses below kMassFloor are
// pruned into the residual.
class Pmf {
 public:
  struct Entry {
    BitTime value;
    double mass;
  };

  static constexpr double kMassFloor = 1e-300;

  Pmf() = default;

  // mass must lie in (0, 1], value must be >= 0.
  static Pmf point_mass(BitTime value, double mass = 1.0);

  // Sorts, merges duplicate values, prunes sub-floor masses into the residual.
  static Pmf from_entries(std::vector<Entry> entries, double residual = 0.0);

  const std::vector<Entry>& entries() const { return entries_; }
  double residual() const { return residual_; }
  double total_mass() const { return total_; }
  bool empty() const { return entries_.empty(); }
  std::size_t size() const { return entries_.size(); }
  BitTime min_value() const;
  BitTime max_value() const;

  double mass_at(BitTime value) const;

  // Mass strictly above t, residual included. t may be negative, in which
  // case this is total_mass() + residual().
  double tail_mass(BitTime t) const;

  // Mass strictly above t counting represented entries only. Truncation
  // residual accumulates over long convolution chains, so convergence checks
  // compare this, not tail_mass, against their threshold.
  double support_tail_mass(BitTime t) const;

  // Partition at t. stable gets values < t (plus t itself when the boundary
  // goes to_stable); pending gets the rest and the residual. Coalescing the
  // two parts reconstructs the original exactly.
  PmfSplit split(BitTime t, SplitBoundary boundary) const;

  // Values moved by delta; negative shifts must not push any value below 0.
  Pmf shifted(BitTime delta) const;

  // Residual folded onto the largest value, leaving residual 0.
  Pmf fold_tail_into_last() const;

  std::string to_string() const;

 private:
  static Pmf from_sorted_unchecked(std::vector<Entry> entries, double residual);

  std::vector<Entry> entries_;
  double residual_ = 0.0;
  double total_ = 0.0;
};

struct PmfSplit {
  Pmf stable;   // values on the low side of the boundary
  Pmf pending;  // values on the high side, carries the residual
};

// Pointwise mass addition. The operands must sum (including residuals) to at
// most 1 + 1e-9.
Pmf coalesce(const Pmf& a, const Pmf& b);

// Sum of independent variables: standard discrete convolution. The result's
// residual accounts for both operands' residuals so that mass is conserved.
Pmf convolve(const Pmf& a, const Pmf& b);

}  // namespace pwcrt
