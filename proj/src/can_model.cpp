#include "pwcrt/can_model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

#include "pwcrt/errors.hpp"

namespace pwcrt {

namespace {

constexpr int kRetryLimitCap = 1 << 20;

}  // namespace

std::size_t MessageSet::index_of(std::string_view frame_id) const {
  for (std::size_t i = 0; i < frames.size(); ++i) {
    if (frames[i].id == frame_id) return i;
  }
  throw ValidationError("unknown frame id: " + std::string(frame_id));
}

std::size_t MessageSet::lowest_priority_index() const {
  if (frames.empty()) throw ValidationError("empty message set");
  return frames.size() - 1;
}

double MessageSet::utilization() const {
  double u = 0.0;
  for (const Frame& f : frames) u += static_cast<double>(f.C) / static_cast<double>(f.T);
  return u;
}

double poisson_ok(double lambda, BitTime delta) {
  if (lambda < 0.0) throw ValidationError("negative lambda");
  if (delta < 0) throw ValidationError("negative interval");
  return std::exp(-lambda * static_cast<double>(delta));
}

double poisson_errors(double lambda, BitTime delta) {
  return 1.0 - poisson_ok(lambda, delta);
}

double retry_probability(int n, double lambda, BitTime C, BitTime E) {
  if (n < 0) throw ValidationError("negative retry count");
  if (n == 0) return poisson_ok(lambda, C);
  double p = poisson_errors(lambda, C) * poisson_ok(lambda, C + E);
  for (int m = 1; m < n; ++m) p *= poisson_errors(lambda, C + E);
  return p;
}

double retry_residual(int k, double lambda, BitTime C, BitTime E) {
  // First attempt errors, then k consecutive retries all error.
  if (k < 0) throw ValidationError("negative retry limit");
  return poisson_errors(lambda, C) * std::pow(poisson_errors(lambda, C + E), k);
}

int choose_retry_limit(double lambda, BitTime C, BitTime E, double residual_threshold) {
  if (!(residual_threshold > 0.0) || residual_threshold >= 1.0) {
    throw ValidationError("residual threshold must lie in (0, 1)");
  }
  for (int k = 0; k <= kRetryLimitCap; ++k) {
    if (retry_residual(k, lambda, C, E) < residual_threshold) return k;
  }
  throw ConvergenceError("retry limit did not converge; lambda too large for threshold");
}

int resolve_retry_limit(const Frame& frame, const ErrorModel& model) {
  if (model.retry_limit && model.residual_threshold) {
    throw ValidationError("error model: retry_limit and residual_threshold are exclusive");
  }
  if (model.retry_limit) {
    if (*model.retry_limit < 0) throw ValidationError("negative retry limit");
    return *model.retry_limit;
  }
  if (model.residual_threshold) {
    return choose_retry_limit(model.lambda, frame.C, frame.E, *model.residual_threshold);
  }
  if (model.lambda == 0.0) return 0;
  throw ValidationError("error model needs retry_limit or residual_threshold when lambda > 0");
}

Pmf transmission_time_pmf(const Frame& frame, const ErrorModel& model, bool fold_tail) {
  if (frame.tx_pmf) return *frame.tx_pmf;
  int k = resolve_retry_limit(frame, model);
  std::vector<Pmf::Entry> entries;
  entries.reserve(static_cast<std::size_t>(k) + 1);
  for (int n = 0; n <= k; ++n) {
    double p = retry_probability(n, model.lambda, frame.C, frame.E);
    if (p > 0.0) entries.push_back({frame.C + n * (frame.C + frame.E), p});
  }
  Pmf pmf = Pmf::from_entries(std::move(entries),
                              retry_residual(k, model.lambda, frame.C, frame.E));
  return fold_tail ? pmf.fold_tail_into_last() : pmf;
}

Pmf retrans_pmf(const Frame& frame, const ErrorModel& model, bool fold_tail) {
  return transmission_time_pmf(frame, model, fold_tail).shifted(-frame.C);
}

BitTime blocking_time(const MessageSet& set, std::size_t i, bool include_own_level) {
  if (i >= set.frames.size()) throw ValidationError("frame index out of range");
  int p = set.frames[i].priority;
  BitTime b = 0;
  for (const Frame& f : set.frames) {
    bool lower = include_own_level ? f.priority >= p : f.priority > p;
    if (lower) b = std::max(b, f.C + f.E);
  }
  return b;
}

void validate_message_set(const MessageSet& set) {
  if (set.frames.empty()) throw ValidationError("message set has no frames");
  if (!(set.bus_speed_bps > 0.0)) throw ValidationError("bus speed must be positive");
  if (set.error_model.lambda < 0.0) throw ValidationError("negative lambda");
  if (set.error_model.retry_limit && set.error_model.residual_threshold) {
    throw ValidationError("error model: retry_limit and residual_threshold are exclusive");
  }
  std::set<int> priorities;
  std::set<std::string> ids;
  int last_priority = 0;
  for (std::size_t i = 0; i < set.frames.size(); ++i) {
    const Frame& f = set.frames[i];
    if (f.id.empty()) throw ValidationError("frame with empty id");
    if (!ids.insert(f.id).second) throw ValidationError("duplicate frame id: " + f.id);
    if (!priorities.insert(f.priority).second) {
      throw ValidationError("duplicate priority in frame: " + f.id);
    }
    if (i > 0 && f.priority < last_priority) {
      throw ValidationError("frames not sorted by priority");
    }
    last_priority = f.priority;
    if (f.C < 1) throw ValidationError(f.id + ": C must be >= 1");
    if (f.T < 1) throw ValidationError(f.id + ": T must be >= 1");
    if (f.D < 1) throw ValidationError(f.id + ": D must be >= 1");
    if (f.D > f.T) throw ValidationError(f.id + ": deadline exceeds period");
    if (f.E < 0) throw ValidationError(f.id + ": negative E");
    if (f.J < 0) throw ValidationError(f.id + ": negative J");
    if (f.tx_pmf) {
      const Pmf& p = *f.tx_pmf;
      if (p.empty()) throw ValidationError(f.id + ": empty explicit PMF");
      if (p.min_value() != f.C) {
        throw ValidationError(f.id + ": explicit PMF must start at C");
      }
      double sum = p.total_mass() + p.residual();
      if (std::abs(sum - 1.0) > 1e-9) {
        throw ValidationError(f.id + ": explicit PMF mass is not 1");
      }
    }
  }
}

namespace {

// Times may be given directly in bits or in milliseconds; ms values must
// convert to a whole number of bit-times at the set's bus speed.
BitTime read_bit_time(const nlohmann::json& frame, const std::string& key, double bus_speed_bps,
                      std::optional<BitTime> fallback = std::nullopt) {
  std::string bits_key = key + "_bits";
  std::string ms_key = key + "_ms";
  if (frame.contains(bits_key)) return frame.at(bits_key).get<BitTime>();
  if (frame.contains(ms_key)) {
    double ms = frame.at(ms_key).get<double>();
    double bits = ms * bus_speed_bps / 1000.0;
    double rounded = std::round(bits);
    if (std::abs(bits - rounded) > 1e-6) {
      throw ValidationError(key + "_ms does not convert to integer bit-times: " +
                            std::to_string(ms));
    }
    return static_cast<BitTime>(rounded);
  }
  if (fallback) return *fallback;
  throw ValidationError("frame is missing " + bits_key + " / " + ms_key);
}

}  // namespace

MessageSet message_set_from_json(const nlohmann::json& j) {
  MessageSet set;
  set.bus_speed_bps = j.at("bus_speed_bps").get<double>();
  set.error_model.lambda = j.value("lambda_per_bit", 0.0);
  if (j.contains("retry_limit")) set.error_model.retry_limit = j.at("retry_limit").get<int>();
  if (j.contains("retry_residual_threshold")) {
    set.error_model.residual_threshold = j.at("retry_residual_threshold").get<double>();
  }
  if (!j.contains("frames") || !j.at("frames").is_array()) {
    throw ValidationError("message set JSON needs a frames array");
  }
  for (const auto& jf : j.at("frames")) {
    Frame f;
    f.id = jf.at("id").get<std::string>();
    f.priority = jf.at("priority").get<int>();
    f.C = jf.at("C_bits").get<BitTime>();
    f.T = read_bit_time(jf, "T", set.bus_speed_bps);
    f.D = read_bit_time(jf, "D", set.bus_speed_bps, f.T);
    f.E = jf.value("E_bits", BitTime{0});
    f.J = read_bit_time(jf, "J", set.bus_speed_bps, BitTime{0});
    if (jf.contains("tx_pmf")) {
      std::vector<Pmf::Entry> entries;
      for (const auto& pair : jf.at("tx_pmf")) {
        entries.push_back({pair.at(0).get<BitTime>(), pair.at(1).get<double>()});
      }
      f.tx_pmf = Pmf::from_entries(std::move(entries));
    }
    set.frames.push_back(std::move(f));
  }
  std::stable_sort(set.frames.begin(), set.frames.end(),
                   [](const Frame& a, const Frame& b) { return a.priority < b.priority; });
  validate_message_set(set);
  return set;
}

nlohmann::json message_set_to_json(const MessageSet& set) {
  nlohmann::json j;
  j["bus_speed_bps"] = set.bus_speed_bps;
  j["lambda_per_bit"] = set.error_model.lambda;
  if (set.error_model.retry_limit) j["retry_limit"] = *set.error_model.retry_limit;
  if (set.error_model.residual_threshold) {
    j["retry_residual_threshold"] = *set.error_model.residual_threshold;
  }
  j["frames"] = nlohmann::json::array();
  for (const Frame& f : set.frames) {
    nlohmann::json jf;
    jf["id"] = f.id;
    jf["priority"] = f.priority;
    jf["C_bits"] = f.C;
    jf["T_bits"] = f.T;
    jf["D_bits"] = f.D;
    jf["E_bits"] = f.E;
    jf["J_bits"] = f.J;
    if (f.tx_pmf) {
      nlohmann::json pmf = nlohmann::json::array();
      for (const auto& e : f.tx_pmf->entries()) pmf.push_back({e.value, e.mass});
      jf["tx_pmf"] = std::move(pmf);
    }
    j["frames"].push_back(std::move(jf));
  }
  return j;
}

MessageSet load_message_set(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open message set file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("malformed JSON in " + path + ": " + e.what());
  }
  try {
    return message_set_from_json(j);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("invalid message set in " + path + ": " + e.what());
  }
}

void save_message_set(const MessageSet& set, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write message set file: " + path);
  out << message_set_to_json(set).dump(2) << "\n";
}

}  // namespace pwcrt
