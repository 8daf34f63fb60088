#include "pwcrt/datasets.hpp"

#include <cmath>
#include <cstdio>

#include "pwcrt/errors.hpp"
#include "pwcrt/pmf.hpp"

namespace pwcrt {
namespace {

MessageSet sae_set() {
  // 17 periodic frames from the classic SAE benchmark signal set, bit counts
  // on the wire including stuffing, 125 kbit/s bus (125 bits per ms)
  static constexpr BitTime kC[17] = {62, 72, 62, 72, 62, 72, 112, 62, 72,
                                     72, 62, 92, 62, 62, 82,  62, 62};
  static constexpr BitTime kTms[17] = {1000, 5,  5,   5,   5,   5,   10,  10, 10,
                                       10,   100, 100, 100, 100, 1000, 1000, 1000};
  static constexpr BitTime kDms[17] = {5,   5,   5,   5,   5,   5,   10,  10, 10,
                                       10,  100, 100, 100, 100, 1000, 1000, 1000};
  MessageSet set;
  set.bus_speed_bps = 125000.0;
  set.error_model.lambda = 1e-5;
  set.error_model.residual_threshold = 2.7e-15;
  set.frames.resize(17);
  for (int i = 0; i < 17; ++i) {
    Frame& f = set.frames[static_cast<std::size_t>(i)];
    char id[8];
    std::snprintf(id, sizeof(id), "p%02d", i + 1);
    f.id = id;
    f.priority = i + 1;
    f.C = kC[i];
    f.T = kTms[i] * 125;
    f.D = kDms[i] * 125;
    f.E = 13;
  }
  validate_message_set(set);
  return set;
}

MessageSet example3_set() {
  // Slow 1 kbit/s bus so one bit is one millisecond; the transmission-time
  // pmfs are given explicitly rather than derived from the error rate.
  MessageSet set;
  set.bus_speed_bps = 1000.0;
  set.error_model.lambda = std::log(10.0 / 9.0);  // per-bit error probability 0.1
  set.error_model.retry_limit = 2;
  set.frames.resize(3);

  Frame& t0 = set.frames[0];
  t0.id = "tau0";
  t0.priority = 1;
  t0.C = 1;
  t0.T = 6;
  t0.D = 6;
  t0.E = 1;
  t0.tx_pmf = Pmf::from_entries({{1, 0.9}, {3, 0.09}, {5, 0.01}});

  Frame& t1 = set.frames[1];
  t1.id = "tau1";
  t1.priority = 2;
  t1.C = 1;
  t1.T = 12;
  t1.D = 12;
  t1.E = 0;
  t1.tx_pmf = Pmf::from_entries({{1, 0.9}, {2, 0.09}, {3, 0.01}});

  Frame& t2 = set.frames[2];
  t2.id = "tau2";
  t2.priority = 3;
  t2.C = 2;
  t2.T = 20;
  t2.D = 20;
  t2.E = 0;
  t2.tx_pmf = Pmf::from_entries({{2, 1.0}});

  validate_message_set(set);
  return set;
}

}  // namespace

std::vector<std::string> builtin_set_names() { return {"sae", "example3"}; }

MessageSet builtin_message_set(const std::string& name) {
  if (name == "sae") return sae_set();
  if (name == "example3") return example3_set();
  throw ValidationError("unknown built-in message set '" + name + "'");
}

}  // namespace pwcrt
