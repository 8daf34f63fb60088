#include "pwcrt/exceedance.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "pwcrt/errors.hpp"

namespace pwcrt {

namespace {

double ms_from_bits(BitTime bits, double bus_speed_bps) {
  return static_cast<double>(bits) * 1000.0 / bus_speed_bps;
}

}  // namespace

double ExceedanceCurve::value_at_ms(double t_ms) const {
  if (steps.empty()) throw ValidationError("exceedance curve has no points");
  auto it = std::upper_bound(steps.begin(), steps.end(), t_ms,
                             [](double t, const Step& s) { return t < s.t_ms; });
  if (it == steps.begin()) return initial;
  return std::prev(it)->probability;
}

double ExceedanceCurve::value_at_bits(double t_bits) const {
  if (steps.empty()) throw ValidationError("exceedance curve has no points");
  auto it = std::upper_bound(steps.begin(), steps.end(), t_bits,
                             [](double t, const Step& s) { return t < static_cast<double>(s.t_bits); });
  if (it == steps.begin()) return initial;
  return std::prev(it)->probability;
}

ExceedanceCurve exceedance_from_pmfs(const std::vector<Pmf>& responses, double bus_speed_bps,
                                     std::string frame_id, std::string method) {
  if (responses.empty()) throw ValidationError("no response distributions");
  ExceedanceCurve curve;
  curve.frame_id = std::move(frame_id);
  curve.method = std::move(method);
  curve.bus_speed_bps = bus_speed_bps;

  std::set<BitTime> values;
  values.insert(0);
  double initial = 0.0;
  for (const Pmf& r : responses) {
    initial = std::max(initial, r.tail_mass(-1));
    for (const auto& e : r.entries()) values.insert(e.value);
  }
  curve.initial = initial;
  for (BitTime v : values) {
    double f = 0.0;
    for (const Pmf& r : responses) f = std::max(f, r.tail_mass(v));
    curve.steps.push_back({v, ms_from_bits(v, bus_speed_bps), f});
  }
  return curve;
}

ExceedanceCurve exceedance_step(BitTime wcrt, double bus_speed_bps, std::string frame_id,
                                std::string method) {
  ExceedanceCurve curve;
  curve.frame_id = std::move(frame_id);
  curve.method = std::move(method);
  curve.bus_speed_bps = bus_speed_bps;
  curve.initial = 1.0;
  if (wcrt > 0) curve.steps.push_back({0, 0.0, 1.0});
  curve.steps.push_back({wcrt, ms_from_bits(wcrt, bus_speed_bps), 0.0});
  return curve;
}

void write_curve_csv(const ExceedanceCurve& curve, std::ostream& out) {
  out << "t_bits,t_ms,probability,method,frame_id\n";
  out.precision(17);
  for (const auto& s : curve.steps) {
    out << s.t_bits << ',' << s.t_ms << ',' << s.probability << ',' << curve.method << ','
        << curve.frame_id << '\n';
  }
}

void write_curve_csv(const ExceedanceCurve& curve, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write curve file: " + path);
  write_curve_csv(curve, out);
}

ExceedanceCurve read_curve_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("empty curve file");
  if (line.rfind("t_bits,t_ms,probability", 0) != 0) {
    throw ValidationError("curve file has incompatible columns: " + line);
  }
  ExceedanceCurve curve;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string field;
    ExceedanceCurve::Step step{};
    try {
      std::getline(row, field, ',');
      step.t_bits = std::stoll(field);
      std::getline(row, field, ',');
      step.t_ms = std::stod(field);
      std::getline(row, field, ',');
      step.probability = std::stod(field);
    } catch (const std::exception&) {
      throw ValidationError("malformed curve row: " + line);
    }
    std::getline(row, curve.method, ',');
    std::getline(row, curve.frame_id, ',');
    curve.steps.push_back(step);
  }
  if (curve.steps.empty()) throw ValidationError("curve file has no data rows");
  std::sort(curve.steps.begin(), curve.steps.end(),
            [](const auto& a, const auto& b) { return a.t_bits < b.t_bits; });
  curve.initial = curve.steps.front().probability;
  // recover the time base: curves usually open with a step at zero, so take the
  // first row where both columns are positive
  for (const auto& s : curve.steps) {
    if (s.t_bits > 0 && s.t_ms > 0.0) {
      curve.bus_speed_bps = static_cast<double>(s.t_bits) / s.t_ms * 1000.0;
      break;
    }
  }
  return curve;
}

ExceedanceCurve read_curve_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open curve file: " + path);
  return read_curve_csv(in);
}

CurveComparison compare_curves(const ExceedanceCurve& a, const ExceedanceCurve& b, int points,
                               double lo_ms, double hi_ms) {
  if (points < 2) throw ValidationError("curve comparison needs at least 2 points");
  if (!(hi_ms > lo_ms)) throw ValidationError("curve comparison range is empty");
  CurveComparison cmp;
  double sum_sq = 0.0;
  for (int m = 0; m < points; ++m) {
    double t = lo_ms + (hi_ms - lo_ms) * static_cast<double>(m) / (points - 1);
    double d = a.value_at_ms(t) - b.value_at_ms(t);
    sum_sq += d * d;
    cmp.max_abs_diff = std::max(cmp.max_abs_diff, std::abs(d));
  }
  cmp.mse = sum_sq / points;
  return cmp;
}

}  // namespace pwcrt
