#include "pwcrt/pmf.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "pwcrt/errors.hpp"

namespace pwcrt {

Pmf Pmf::point_mass(BitTime value, double mass) {
  if (value < 0) throw ValidationError("point_mass: negative value");
  if (!(mass > 0.0) || mass > 1.0) throw ValidationError("point_mass: mass outside (0, 1]");
  Pmf p;
  p.entries_ = {{value, mass}};
  p.residual_ = 0.0;
  p.total_ = mass;
  return p;
}

Pmf Pmf::from_entries(std::vector<Entry> entries, double residual) {
  if (residual < 0.0) {
    if (residual < -1e-12) throw ValidationError("from_entries: negative residual");
    residual = 0.0;
  }
  std::stable_sort(entries.begin(), entries.end(),
                   [](const Entry& a, const Entry& b) { return a.value < b.value; });
  std::vector<Entry> merged;
  merged.reserve(entries.size());
  for (const Entry& e : entries) {
    if (e.value < 0) throw ValidationError("from_entries: negative value");
    if (e.mass < 0.0) throw ValidationError("from_entries: negative mass");
    if (e.mass == 0.0) continue;
    if (!merged.empty() && merged.back().value == e.value) {
      merged.back().mass += e.mass;
    } else {
      merged.push_back(e);
    }
  }
  return from_sorted_unchecked(std::move(merged), residual);
}

Pmf Pmf::from_sorted_unchecked(std::vector<Entry> entries, double residual) {
  Pmf p;
  p.entries_.reserve(entries.size());
  double total = 0.0;
  for (const Entry& e : entries) {
    if (e.mass < kMassFloor) {
      residual += e.mass;
      continue;
    }
    p.entries_.push_back(e);
    total += e.mass;
  }
  p.residual_ = residual;
  p.total_ = total;
  return p;
}

BitTime Pmf::min_value() const {
  if (empty()) throw ValidationError("min_value on empty pmf");
  return entries_.front().value;
}

BitTime Pmf::max_value() const {
  if (empty()) throw ValidationError("max_value on empty pmf");
  return entries_.back().value;
}

double Pmf::mass_at(BitTime value) const {
  auto it = std::lower_bound(entries_.begin(), entries_.end(), value,
                             [](const Entry& e, BitTime v) { return e.value < v; });
  if (it != entries_.end() && it->value == value) return it->mass;
  return 0.0;
}

double Pmf::tail_mass(BitTime t) const {
  // Far-tail masses are typically the smallest; summing from the back keeps
  // the accumulation small-to-large.
  return residual_ + support_tail_mass(t);
}

double Pmf::support_tail_mass(BitTime t) const {
  double acc = 0.0;
  for (auto it = entries_.rbegin(); it != entries_.rend() && it->value > t; ++it) {
    acc += it->mass;
  }
  return acc;
}

PmfSplit Pmf::split(BitTime t, SplitBoundary boundary) const {
  auto cut = (boundary == SplitBoundary::to_stable)
                 ? std::upper_bound(entries_.begin(), entries_.end(), t,
                                    [](BitTime v, const Entry& e) { return v < e.value; })
                 : std::lower_bound(entries_.begin(), entries_.end(), t,
                                    [](const Entry& e, BitTime v) { return e.value < v; });
  PmfSplit parts;
  parts.stable = from_sorted_unchecked(std::vector<Entry>(entries_.begin(), cut), 0.0);
  parts.pending = from_sorted_unchecked(std::vector<Entry>(cut, entries_.end()), residual_);
  return parts;
}

Pmf Pmf::shifted(BitTime delta) const {
  if (!empty() && entries_.front().value + delta < 0) {
    throw ValidationError("shifted: shift would produce a negative value");
  }
  std::vector<Entry> moved = entries_;
  for (Entry& e : moved) e.value += delta;
  return from_sorted_unchecked(std::move(moved), residual_);
}

Pmf Pmf::fold_tail_into_last() const {
  if (empty()) {
    if (residual_ > 0.0) throw ValidationError("fold_tail_into_last on empty pmf");
    return *this;
  }
  std::vector<Entry> folded = entries_;
  folded.back().mass += residual_;
  return from_sorted_unchecked(std::move(folded), 0.0);
}

std::string Pmf::to_string() const {
  std::ostringstream os;
  os.precision(12);
  os << "{";
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (i) os << ", ";
    os << entries_[i].value << ":" << entries_[i].mass;
  }
  os << "}";
  if (residual_ > 0.0) os << "+r" << residual_;
  return os.str();
}

Pmf coalesce(const Pmf& a, const Pmf& b) {
  double grand = a.total_mass() + a.residual() + b.total_mass() + b.residual();
  if (grand > 1.0 + 1e-9) throw ValidationError("coalesce: combined mass exceeds 1");
  std::vector<Pmf::Entry> merged;
  merged.reserve(a.size() + b.size());
  auto ia = a.entries().begin(), ea = a.entries().end();
  auto ib = b.entries().begin(), eb = b.entries().end();
  while (ia != ea || ib != eb) {
    if (ib == eb || (ia != ea && ia->value < ib->value)) {
      merged.push_back(*ia++);
    } else if (ia == ea || ib->value < ia->value) {
      merged.push_back(*ib++);
    } else {
      merged.push_back({ia->value, ia->mass + ib->mass});
      ++ia;
      ++ib;
    }
  }
  return Pmf::from_entries(std::move(merged), a.residual() + b.residual());
}

Pmf convolve(const Pmf& a, const Pmf& b) {
  // Residual times anything stays beyond the largest reachable value, so it
  // remains residual; the three cross terms keep total mass conserved.
  double residual = a.residual() * b.total_mass() + b.residual() * a.total_mass() +
                    a.residual() * b.residual();
  std::vector<Pmf::Entry> products;
  products.reserve(a.size() * b.size());
  for (const auto& ea : a.entries()) {
    for (const auto& eb : b.entries()) {
      products.push_back({ea.value + eb.value, ea.mass * eb.mass});
    }
  }
  // from_entries uses a stable sort, so for any given output value the
  // products accumulate in ascending order of a's value.
  return Pmf::from_entries(std::move(products), residual);
}

}  // namespace pwcrt
