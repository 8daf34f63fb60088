#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "pwcrt/errors.hpp"
#include "pwcrt/pmf.hpp"

#include "pmf_props.hpp"

using namespace pwcrt;

namespace {
bool near(double a, double b, double tol = 1e-12) { return std::abs(a - b) <= tol; }
}  // namespace

TEST_CASE("point mass basics") {
  const Pmf p = Pmf::point_mass(5);
  CHECK(p.size() == 1);
  CHECK(p.min_value() == 5);
  CHECK(p.max_value() == 5);
  CHECK(p.total_mass() == 1.0);
  CHECK(p.residual() == 0.0);
  CHECK(p.mass_at(5) == 1.0);
  CHECK(p.mass_at(4) == 0.0);

  const Pmf half = Pmf::point_mass(0, 0.5);
  CHECK(half.total_mass() == 0.5);
}

TEST_CASE("point mass rejects bad arguments") {
  CHECK_THROWS_AS(Pmf::point_mass(-1), ValidationError);
  CHECK_THROWS_AS(Pmf::point_mass(0, 0.0), ValidationError);
  CHECK_THROWS_AS(Pmf::point_mass(0, -0.2), ValidationError);
  CHECK_THROWS_AS(Pmf::point_mass(0, 1.5), ValidationError);
}

TEST_CASE("from_entries sorts, merges duplicates and drops zero masses") {
  const Pmf p = Pmf::from_entries({{3, 0.2}, {1, 0.3}, {3, 0.1}, {7, 0.0}});
  CHECK(p.size() == 2);
  CHECK(p.entries()[0].value == 1);
  CHECK(near(p.entries()[0].mass, 0.3, 0.0));
  CHECK(p.entries()[1].value == 3);
  CHECK(near(p.entries()[1].mass, 0.2 + 0.1, 1e-16));
  CHECK(near(p.total_mass(), 0.6, 1e-15));
}

TEST_CASE("from_entries prunes sub-floor masses into the residual") {
  const Pmf p = Pmf::from_entries({{2, 0.5}, {9, 1e-301}});
  CHECK(p.size() == 1);
  CHECK(p.max_value() == 2);
  CHECK(p.residual() == 1e-301);
}

TEST_CASE("from_entries validates its input") {
  CHECK_THROWS_AS(Pmf::from_entries({{-1, 0.5}}), ValidationError);
  CHECK_THROWS_AS(Pmf::from_entries({{1, -0.5}}), ValidationError);
  CHECK_THROWS_AS(Pmf::from_entries({{1, 0.5}}, -1e-6), ValidationError);
  // tiny negative residuals from float noise are clamped, not rejected
  const Pmf p = Pmf::from_entries({{1, 0.5}}, -1e-13);
  CHECK(p.residual() == 0.0);
}

TEST_CASE("convolve on small fixtures") {
  const Pmf a = Pmf::point_mass(2, 0.5);
  const Pmf b = Pmf::point_mass(3, 0.5);
  const Pmf c = convolve(a, b);
  CHECK(c.size() == 1);
  CHECK(c.min_value() == 5);
  CHECK(near(c.total_mass(), 0.25, 1e-16));

  const Pmf coin = Pmf::from_entries({{0, 0.5}, {1, 0.5}});
  const Pmf two = convolve(coin, coin);
  CHECK(two.size() == 3);
  CHECK(near(two.mass_at(0), 0.25, 1e-16));
  CHECK(near(two.mass_at(1), 0.5, 1e-16));
  CHECK(near(two.mass_at(2), 0.25, 1e-16));
}

TEST_CASE("convolve keeps residual mass conserved") {
  const Pmf a = Pmf::from_entries({{0, 0.9}}, 0.1);
  const Pmf b = Pmf::from_entries({{4, 0.9}}, 0.1);
  const Pmf c = convolve(a, b);
  CHECK(c.size() == 1);
  CHECK(near(c.mass_at(4), 0.81, 1e-15));
  CHECK(near(c.residual(), 0.1 * 0.9 + 0.1 * 0.9 + 0.01, 1e-15));
  CHECK(near(c.total_mass() + c.residual(), 1.0, 1e-15));
}

TEST_CASE("split boundary ownership") {
  const Pmf p = Pmf::from_entries({{1, 0.2}, {4, 0.3}, {8, 0.4}}, 0.1);

  const auto stable_side = p.split(4, SplitBoundary::to_stable);
  CHECK(stable_side.stable.mass_at(4) == doctest::Approx(0.3));
  CHECK(stable_side.pending.mass_at(4) == 0.0);
  CHECK(near(stable_side.stable.total_mass(), 0.5, 1e-15));
  CHECK(stable_side.pending.residual() == 0.1);
  CHECK(stable_side.stable.residual() == 0.0);

  const auto pending_side = p.split(4, SplitBoundary::to_pending);
  CHECK(pending_side.stable.mass_at(4) == 0.0);
  CHECK(pending_side.pending.mass_at(4) == doctest::Approx(0.3));
  CHECK(near(pending_side.stable.total_mass(), 0.2, 1e-15));

  // cuts outside the support leave one side empty
  const auto all_pending = p.split(0, SplitBoundary::to_stable);
  CHECK(all_pending.stable.empty());
  const auto all_stable = p.split(99, SplitBoundary::to_stable);
  CHECK(all_stable.pending.empty());
  CHECK(all_stable.pending.residual() == 0.1);
}

TEST_CASE("split then coalesce reconstructs the original") {
  const Pmf p = Pmf::from_entries({{0, 0.25}, {3, 0.25}, {6, 0.25}}, 0.25);
  const auto parts = p.split(3, SplitBoundary::to_pending);
  const Pmf recon = coalesce(parts.stable, parts.pending);
  CHECK(recon.size() == p.size());
  for (const auto& e : p.entries()) CHECK(recon.mass_at(e.value) == e.mass);
  CHECK(recon.residual() == p.residual());
}

TEST_CASE("coalesce rejects combined mass above one") {
  const Pmf a = Pmf::from_entries({{0, 0.6}});
  const Pmf b = Pmf::from_entries({{1, 0.6}});
  CHECK_THROWS_AS(coalesce(a, b), ValidationError);
}

TEST_CASE("shifted moves values and refuses to go negative") {
  const Pmf p = Pmf::from_entries({{2, 0.5}, {5, 0.5}});
  const Pmf up = p.shifted(3);
  CHECK(up.min_value() == 5);
  CHECK(up.max_value() == 8);
  CHECK(up.mass_at(5) == 0.5);
  const Pmf back = up.shifted(-3);
  CHECK(back.min_value() == 2);
  CHECK_THROWS_AS(p.shifted(-3), ValidationError);
}

TEST_CASE("fold_tail_into_last") {
  const Pmf p = Pmf::from_entries({{1, 0.7}, {4, 0.2}}, 0.1);
  const Pmf folded = p.fold_tail_into_last();
  CHECK(folded.residual() == 0.0);
  CHECK(near(folded.mass_at(4), 0.3, 1e-15));
  CHECK(near(folded.total_mass(), 1.0, 1e-15));

  const Pmf empty_with_residual = Pmf::from_entries({}, 0.3);
  CHECK_THROWS_AS(empty_with_residual.fold_tail_into_last(), ValidationError);
  CHECK(Pmf{}.fold_tail_into_last().empty());
}

TEST_CASE("tail_mass counts the residual, support_tail_mass does not") {
  const Pmf p = Pmf::from_entries({{5, 0.5}}, 0.25);
  CHECK(p.support_tail_mass(5) == 0.0);
  CHECK(near(p.tail_mass(5), 0.25, 0.0));
  CHECK(near(p.support_tail_mass(4), 0.5, 0.0));
  CHECK(near(p.tail_mass(4), 0.75, 1e-16));
  CHECK(near(p.tail_mass(-1), 0.75, 1e-16));
}

TEST_CASE("min/max on an empty pmf throw") {
  const Pmf p;
  CHECK(p.empty());
  CHECK_THROWS_AS(p.min_value(), ValidationError);
  CHECK_THROWS_AS(p.max_value(), ValidationError);
}

TEST_CASE("to_string renders entries and residual") {
  CHECK(Pmf::point_mass(3).to_string() == "{3:1}");
  const Pmf p = Pmf::from_entries({{1, 0.5}}, 0.25);
  CHECK(p.to_string() == "{1:0.5}+r0.25");
}

TEST_CASE("randomized property suite") {
  const auto result = props::run_pmf_property_suite(0x5eed5eed, 12000);
  INFO(result.first_failure);
  CHECK(result.cases >= 10000);
  CHECK(result.failures == 0);
}
