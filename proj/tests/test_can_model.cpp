#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "pwcrt/can_model.hpp"
#include "pwcrt/datasets.hpp"
#include "pwcrt/errors.hpp"

using namespace pwcrt;
using nlohmann::json;

namespace {

// what() of the ValidationError thrown by fn, empty string if none was thrown
template <typename Fn>
std::string thrown_message(Fn&& fn) {
  try {
    fn();
  } catch (const ValidationError& e) {
    return e.what();
  }
  return "";
}

bool contains(const std::string& hay, const std::string& needle) {
  return hay.find(needle) != std::string::npos;
}

}  // namespace

TEST_CASE("poisson error probabilities") {
  CHECK(poisson_ok(1e-5, 62) == doctest::Approx(0.9993801921602848).epsilon(1e-14));
  CHECK(poisson_errors(1e-5, 62) == doctest::Approx(1.0 - 0.9993801921602848).epsilon(1e-10));
  CHECK(poisson_ok(0.0, 1000) == 1.0);
  CHECK(poisson_ok(1e-5, 0) == 1.0);
  CHECK_THROWS_AS(poisson_ok(-1e-5, 10), ValidationError);
  CHECK_THROWS_AS(poisson_ok(1e-5, -1), ValidationError);
}

TEST_CASE("retry probability closed form") {
  const double lambda = 1e-5;
  const BitTime C = 62, E = 13;
  CHECK(retry_probability(0, lambda, C, E) == poisson_ok(lambda, C));
  CHECK(retry_probability(1, lambda, C, E) ==
        doctest::Approx(0.000619343158112755).epsilon(1e-12));
  // n retries: first attempt errors, n-1 retries error, last retry succeeds
  for (int n = 1; n <= 5; ++n) {
    const double expect = poisson_errors(lambda, C) *
                          std::pow(poisson_errors(lambda, C + E), n - 1) *
                          poisson_ok(lambda, C + E);
    CHECK(retry_probability(n, lambda, C, E) == doctest::Approx(expect).epsilon(1e-13));
  }
  CHECK_THROWS_AS(retry_probability(-1, lambda, C, E), ValidationError);
}

TEST_CASE("retry residual matches the partial sums") {
  const double lambda = 1e-5;
  const BitTime C = 62, E = 13;
  const double expected[] = {6.198078397151585e-4, 4.646816024034959e-7, 3.483805427687295e-10,
                             2.6118744953979593e-13, 1.9581714654595437e-16};
  for (int k = 0; k <= 4; ++k) {
    CHECK(retry_residual(k, lambda, C, E) == doctest::Approx(expected[k]).epsilon(1e-12));
  }
  for (int k = 0; k <= 4; ++k) {
    double sum = 0.0;
    for (int n = 0; n <= k; ++n) sum += retry_probability(n, lambda, C, E);
    CHECK(sum + retry_residual(k, lambda, C, E) == doctest::Approx(1.0).epsilon(1e-14));
  }
  CHECK_THROWS_AS(retry_residual(-1, lambda, C, E), ValidationError);
}

TEST_CASE("choose_retry_limit picks the smallest sufficient k") {
  CHECK(choose_retry_limit(1e-5, 62, 13, 2.7e-15) == 4);
  CHECK(choose_retry_limit(1e-5, 62, 13, 0.1) == 0);
  CHECK(choose_retry_limit(0.0, 62, 13, 0.5) == 0);
  CHECK_THROWS_AS(choose_retry_limit(1e-5, 62, 13, 0.0), ValidationError);
  CHECK_THROWS_AS(choose_retry_limit(1e-5, 62, 13, 1.0), ValidationError);
}

TEST_CASE("resolve_retry_limit") {
  Frame f;
  f.C = 62;
  f.E = 13;
  ErrorModel m;
  m.lambda = 1e-5;
  m.retry_limit = 3;
  CHECK(resolve_retry_limit(f, m) == 3);

  m.retry_limit.reset();
  m.residual_threshold = 2.7e-15;
  CHECK(resolve_retry_limit(f, m) == 4);

  m.retry_limit = 3;  // both set
  CHECK_THROWS_AS(resolve_retry_limit(f, m), ValidationError);

  m.retry_limit = -1;
  m.residual_threshold.reset();
  CHECK_THROWS_AS(resolve_retry_limit(f, m), ValidationError);

  m.retry_limit.reset();
  CHECK_THROWS_AS(resolve_retry_limit(f, m), ValidationError);  // lambda > 0, nothing set
  m.lambda = 0.0;
  CHECK(resolve_retry_limit(f, m) == 0);
}

TEST_CASE("transmission pmf support and masses") {
  Frame f;
  f.id = "x";
  f.C = 62;
  f.E = 13;
  ErrorModel m;
  m.lambda = 1e-5;
  m.retry_limit = 3;

  const Pmf tx = transmission_time_pmf(f, m);
  REQUIRE(tx.size() == 4);
  for (int n = 0; n <= 3; ++n) {
    CHECK(tx.entries()[static_cast<std::size_t>(n)].value == 62 + n * 75);
    CHECK(tx.entries()[static_cast<std::size_t>(n)].mass ==
          doctest::Approx(retry_probability(n, m.lambda, f.C, f.E)).epsilon(1e-14));
  }
  CHECK(tx.residual() == doctest::Approx(retry_residual(3, m.lambda, f.C, f.E)).epsilon(1e-14));
  CHECK(tx.total_mass() + tx.residual() == doctest::Approx(1.0).epsilon(1e-14));

  const Pmf folded = transmission_time_pmf(f, m, /*fold_tail=*/true);
  CHECK(folded.residual() == 0.0);
  CHECK(folded.total_mass() == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(folded.mass_at(287) ==
        doctest::Approx(retry_probability(3, m.lambda, f.C, f.E) +
                        retry_residual(3, m.lambda, f.C, f.E))
            .epsilon(1e-14));

  m.lambda = 0.0;
  const Pmf clean = transmission_time_pmf(f, m);
  CHECK(clean.size() == 1);
  CHECK(clean.mass_at(62) == 1.0);
  CHECK(clean.residual() == 0.0);
}

TEST_CASE("explicit pmfs pass through untouched") {
  Frame f;
  f.id = "x";
  f.C = 2;
  f.tx_pmf = Pmf::from_entries({{2, 0.9}, {4, 0.1}});
  ErrorModel m;
  m.lambda = 1e-3;
  m.retry_limit = 5;
  const Pmf tx = transmission_time_pmf(f, m);
  CHECK(tx.size() == 2);
  CHECK(tx.mass_at(2) == doctest::Approx(0.9));
  CHECK(tx.mass_at(4) == doctest::Approx(0.1));
  // fold_tail has nothing to fold here
  CHECK(transmission_time_pmf(f, m, true).mass_at(4) == doctest::Approx(0.1));
}

TEST_CASE("retrans pmf is the transmission pmf shifted by C") {
  Frame f;
  f.C = 62;
  f.E = 13;
  ErrorModel m;
  m.lambda = 1e-5;
  m.retry_limit = 3;
  const Pmf tx = transmission_time_pmf(f, m);
  const Pmf re = retrans_pmf(f, m);
  REQUIRE(re.size() == tx.size());
  for (std::size_t k = 0; k < tx.size(); ++k) {
    CHECK(re.entries()[k].value == tx.entries()[k].value - 62);
    CHECK(re.entries()[k].mass == tx.entries()[k].mass);
  }
  CHECK(re.min_value() == 0);
}

TEST_CASE("blocking time scans strictly lower priorities") {
  const MessageSet sae = builtin_message_set("sae");
  CHECK(blocking_time(sae, 0) == 125);  // the 112-bit frame plus its error overhead
  CHECK(blocking_time(sae, sae.lowest_priority_index()) == 0);
  CHECK(blocking_time(sae, sae.lowest_priority_index(), /*include_own_level=*/true) == 75);
  CHECK_THROWS_AS(blocking_time(sae, 99), ValidationError);
}

TEST_CASE("sae benchmark shape") {
  const MessageSet sae = builtin_message_set("sae");
  REQUIRE(sae.frames.size() == 17);
  CHECK(sae.bus_speed_bps == 125000.0);
  CHECK(sae.error_model.lambda == 1e-5);
  REQUIRE(sae.error_model.residual_threshold.has_value());
  CHECK(*sae.error_model.residual_threshold == 2.7e-15);
  CHECK_FALSE(sae.error_model.retry_limit.has_value());

  BitTime total_c = 0;
  for (std::size_t i = 0; i < sae.frames.size(); ++i) {
    const Frame& f = sae.frames[i];
    total_c += f.C;
    CHECK(f.priority == static_cast<int>(i) + 1);
    CHECK(f.E == 13);
    CHECK(f.D <= f.T);
    CHECK_FALSE(f.tx_pmf.has_value());
  }
  CHECK(total_c == 1204);
  CHECK(sae.utilization() == doctest::Approx(0.822784).epsilon(1e-9));
  CHECK(sae.index_of("p07") == 6);
  CHECK(sae.frames[6].C == 112);
  CHECK(sae.lowest_priority_index() == 16);
}

TEST_CASE("example3 shape") {
  const MessageSet ex = builtin_message_set("example3");
  REQUIRE(ex.frames.size() == 3);
  CHECK(ex.bus_speed_bps == 1000.0);
  CHECK(ex.error_model.lambda == doctest::Approx(std::log(10.0 / 9.0)).epsilon(1e-15));
  REQUIRE(ex.error_model.retry_limit.has_value());
  CHECK(*ex.error_model.retry_limit == 2);
  for (const Frame& f : ex.frames) {
    REQUIRE(f.tx_pmf.has_value());
    CHECK(f.tx_pmf->min_value() == f.C);
    CHECK(f.tx_pmf->total_mass() == doctest::Approx(1.0).epsilon(1e-12));
  }
  CHECK(ex.frames[2].tx_pmf->size() == 1);
  CHECK(blocking_time(ex, 1) == 2);
}

TEST_CASE("builtin set registry") {
  const auto names = builtin_set_names();
  REQUIRE(names.size() == 2);
  CHECK(names[0] == "sae");
  CHECK(names[1] == "example3");
  CHECK_THROWS_AS(builtin_message_set("nope"), ValidationError);
}

TEST_CASE("index_of rejects unknown frames") {
  const MessageSet ex = builtin_message_set("example3");
  CHECK_THROWS_AS(ex.index_of("tau9"), ValidationError);
}

TEST_CASE("validation names the offending frame") {
  const MessageSet base = builtin_message_set("example3");

  {
    MessageSet s = base;
    s.frames[1].D = s.frames[1].T + 1;
    CHECK(contains(thrown_message([&] { validate_message_set(s); }), "tau1"));
  }
  {
    MessageSet s = base;
    s.frames[2].C = 0;
    CHECK(contains(thrown_message([&] { validate_message_set(s); }), "tau2"));
  }
  {
    MessageSet s = base;
    s.frames[1].priority = s.frames[0].priority;
    CHECK(contains(thrown_message([&] { validate_message_set(s); }), "duplicate priority"));
  }
  {
    MessageSet s = base;
    s.frames[1].id = "tau0";
    CHECK(contains(thrown_message([&] { validate_message_set(s); }), "duplicate frame id"));
  }
  {
    MessageSet s = base;
    std::swap(s.frames[0].priority, s.frames[2].priority);
    CHECK(contains(thrown_message([&] { validate_message_set(s); }), "not sorted"));
  }
  {
    MessageSet s = base;
    s.frames[0].tx_pmf = Pmf::from_entries({{2, 1.0}});  // C is 1
    CHECK(contains(thrown_message([&] { validate_message_set(s); }), "must start at C"));
  }
  {
    MessageSet s = base;
    s.frames[0].tx_pmf = Pmf::from_entries({{1, 0.5}});
    CHECK(contains(thrown_message([&] { validate_message_set(s); }), "mass is not 1"));
  }
  {
    MessageSet s = base;
    s.frames.clear();
    CHECK_THROWS_AS(validate_message_set(s), ValidationError);
  }
  {
    MessageSet s = base;
    s.error_model.lambda = -1.0;
    CHECK_THROWS_AS(validate_message_set(s), ValidationError);
  }
  {
    MessageSet s = base;
    s.error_model.residual_threshold = 1e-12;  // retry_limit is already set
    CHECK_THROWS_AS(validate_message_set(s), ValidationError);
  }
}

TEST_CASE("json round trip preserves every field") {
  for (const auto& name : builtin_set_names()) {
    const MessageSet a = builtin_message_set(name);
    const MessageSet b = message_set_from_json(json::parse(message_set_to_json(a).dump()));
    CHECK(b.bus_speed_bps == a.bus_speed_bps);
    CHECK(b.error_model.lambda == a.error_model.lambda);
    CHECK(b.error_model.retry_limit == a.error_model.retry_limit);
    CHECK(b.error_model.residual_threshold == a.error_model.residual_threshold);
    REQUIRE(b.frames.size() == a.frames.size());
    for (std::size_t i = 0; i < a.frames.size(); ++i) {
      CHECK(b.frames[i].id == a.frames[i].id);
      CHECK(b.frames[i].priority == a.frames[i].priority);
      CHECK(b.frames[i].C == a.frames[i].C);
      CHECK(b.frames[i].T == a.frames[i].T);
      CHECK(b.frames[i].D == a.frames[i].D);
      CHECK(b.frames[i].E == a.frames[i].E);
      CHECK(b.frames[i].J == a.frames[i].J);
      CHECK(b.frames[i].tx_pmf.has_value() == a.frames[i].tx_pmf.has_value());
      if (a.frames[i].tx_pmf) {
        REQUIRE(b.frames[i].tx_pmf->size() == a.frames[i].tx_pmf->size());
        for (std::size_t k = 0; k < a.frames[i].tx_pmf->size(); ++k) {
          CHECK(b.frames[i].tx_pmf->entries()[k].value == a.frames[i].tx_pmf->entries()[k].value);
          CHECK(b.frames[i].tx_pmf->entries()[k].mass == a.frames[i].tx_pmf->entries()[k].mass);
        }
      }
    }
  }
}

TEST_CASE("json loader accepts millisecond times and sorts by priority") {
  json j;
  j["bus_speed_bps"] = 125000.0;
  j["lambda_per_bit"] = 0.0;
  j["frames"] = json::array();
  j["frames"].push_back({{"id", "b"}, {"priority", 2}, {"C_bits", 62}, {"T_ms", 10.0}});
  j["frames"].push_back({{"id", "a"}, {"priority", 1}, {"C_bits", 72}, {"T_ms", 5.0}, {"D_ms", 4.0}});
  const MessageSet s = message_set_from_json(j);
  REQUIRE(s.frames.size() == 2);
  CHECK(s.frames[0].id == "a");
  CHECK(s.frames[0].T == 625);
  CHECK(s.frames[0].D == 500);
  CHECK(s.frames[1].T == 1250);
  CHECK(s.frames[1].D == 1250);  // deadline defaults to the period

  // 0.3 ms at 125 kbit/s is 37.5 bits: not a whole bit-time
  j["frames"][0]["T_ms"] = 0.3;
  CHECK_THROWS_AS(message_set_from_json(j), ValidationError);
  j["frames"][0].erase("T_ms");
  CHECK_THROWS_AS(message_set_from_json(j), ValidationError);  // no T at all
}

TEST_CASE("save and load round trip through a file") {
  namespace fs = std::filesystem;
  const fs::path path = fs::temp_directory_path() / "pwcrt_test_set.json";
  const MessageSet a = builtin_message_set("example3");
  save_message_set(a, path.string());
  const MessageSet b = load_message_set(path.string());
  CHECK(b.frames.size() == a.frames.size());
  CHECK(b.frames[1].T == a.frames[1].T);
  fs::remove(path);

  CHECK_THROWS_AS(load_message_set("/nonexistent/dir/set.json"), ValidationError);
}
