#include <atomic>
#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "pwcrt/analysis.hpp"
#include "pwcrt/can_model.hpp"
#include "pwcrt/datasets.hpp"
#include "pwcrt/deterministic.hpp"
#include "pwcrt/errors.hpp"
#include "pwcrt/exceedance.hpp"
#include "pwcrt/monte_carlo.hpp"
#include "pwcrt/workload_gen.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace pwcrt;

namespace {

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[19];
  std::snprintf(buf, sizeof(buf), "0x%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write '" + path.string() + "'");
  out << text;
}

double ms_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

struct LoadedSet {
  MessageSet set;
  std::string source;
  std::uint64_t digest = 0;
};

LoadedSet resolve_set(const std::string& arg) {
  LoadedSet r;
  for (const auto& name : builtin_set_names()) {
    if (arg == name) {
      r.set = builtin_message_set(name);
      r.source = "builtin:" + name;
      r.digest = fnv1a64(message_set_to_json(r.set).dump());
      return r;
    }
  }
  const std::string bytes = read_file(arg);
  try {
    r.set = message_set_from_json(json::parse(bytes));
  } catch (const json::exception& e) {
    throw ValidationError("bad message set '" + arg + "': " + e.what());
  }
  r.source = arg;
  r.digest = fnv1a64(bytes);
  return r;
}

struct ModelOverrides {
  std::optional<double> lambda;
  std::optional<int> retry_limit;
  std::optional<double> retry_threshold;
};

void apply_overrides(MessageSet& set, const ModelOverrides& ov) {
  if (ov.lambda) set.error_model.lambda = *ov.lambda;
  if (ov.retry_limit && ov.retry_threshold) {
    throw ValidationError("use either --retry-limit or --retry-threshold, not both");
  }
  if (ov.retry_limit) {
    set.error_model.retry_limit = *ov.retry_limit;
    set.error_model.residual_threshold.reset();
  }
  if (ov.retry_threshold) {
    set.error_model.residual_threshold = *ov.retry_threshold;
    set.error_model.retry_limit.reset();
  }
}

std::size_t resolve_frame(const MessageSet& set, const std::string& frame_id, int frame_index,
                          bool lowest_priority) {
  const int picked = (!frame_id.empty() ? 1 : 0) + (frame_index >= 0 ? 1 : 0) + (lowest_priority ? 1 : 0);
  if (picked > 1) {
    throw ValidationError("pick one of --frame, --frame-index, --lowest-priority");
  }
  if (!frame_id.empty()) return set.index_of(frame_id);
  if (frame_index >= 0) {
    if (static_cast<std::size_t>(frame_index) >= set.frames.size()) {
      throw ValidationError("--frame-index out of range");
    }
    return static_cast<std::size_t>(frame_index);
  }
  return set.lowest_priority_index();
}

std::pair<double, double> parse_range(const std::string& text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) throw ValidationError("range must look like LO:HI");
  try {
    const double lo = std::stod(text.substr(0, colon));
    const double hi = std::stod(text.substr(colon + 1));
    return {lo, hi};
  } catch (const std::exception&) {
    throw ValidationError("range must look like LO:HI with numeric bounds");
  }
}

constexpr const char* kToolVersion = "0.1.0";

// --out-dir falls back to $PWCRT_OUT_DIR, then to the working directory
fs::path resolve_out_dir(const std::string& opt) {
  if (!opt.empty()) return opt;
  if (const char* env = std::getenv("PWCRT_OUT_DIR")) return env;
  return ".";
}

json manifest_base(const std::string& command) {
  json m;
  m["tool"] = "pwcrt";
  m["tool_version"] = kToolVersion;
  m["command"] = command;
  std::time_t now = std::time(nullptr);
  char ts[32];
  std::strftime(ts, sizeof(ts), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  m["created_utc"] = ts;
  m["inputs"] = json::array();
  m["outputs"] = json::array();
  return m;
}

void add_output(json& manifest, const fs::path& path, const std::string& bytes) {
  write_text(path, bytes);
  manifest["outputs"].push_back({{"path", path.string()}, {"fnv1a64", hex64(fnv1a64(bytes))}});
}

std::string curve_to_csv_text(const ExceedanceCurve& curve) {
  std::ostringstream ss;
  write_curve_csv(curve, ss);
  return ss.str();
}

json analysis_summary(const MessageSet& set, const FrameAnalysis& fa) {
  const Frame& fr = set.frames[fa.frame_index];
  json s;
  s["frame_id"] = fr.id;
  s["method"] = fa.method;
  s["deadline_bits"] = fr.D;
  s["deadline_ms"] = static_cast<double>(fr.D) * 1000.0 / set.bus_speed_bps;
  s["deadline_miss_probability"] = fa.deadline_miss_probability;
  s["busy_window_stop_bits"] = fa.stop_time;
  s["neglected_tail_budget"] = fa.stop_tail_budget;
  s["instances"] = json::array();
  for (const auto& inst : fa.instances) {
    json ji;
    ji["ordinal"] = inst.ordinal;
    ji["release_bits"] = inst.release;
    ji["response_min_bits"] = inst.response.empty() ? 0 : inst.response.min_value();
    ji["response_max_bits"] = inst.response.empty() ? 0 : inst.response.max_value();
    ji["exceeds_deadline"] = inst.response.tail_mass(fr.D);
    s["instances"].push_back(std::move(ji));
  }
  return s;
}

// ---------------------------------------------------------------- analyze --

struct AnalyzeOpts {
  std::string set_arg;
  std::string frame_id;
  int frame_index = -1;
  bool lowest_priority = false;
  std::string method = "improved";
  double epsilon = 1e-12;
  bool fold_tx_tail = false;
  bool inflate_retries = false;
  ModelOverrides overrides;
  std::string out_dir;
  std::string curve_csv;    // override default name
  std::string summary_json; // override default name
};

void run_analyze(const AnalyzeOpts& o) {
  const auto t0 = std::chrono::steady_clock::now();
  LoadedSet loaded = resolve_set(o.set_arg);
  apply_overrides(loaded.set, o.overrides);
  validate_message_set(loaded.set);
  const std::size_t idx = resolve_frame(loaded.set, o.frame_id, o.frame_index, o.lowest_priority);
  const Frame& fr = loaded.set.frames[idx];

  json manifest = manifest_base("analyze");
  manifest["inputs"].push_back({{"source", loaded.source}, {"fnv1a64", hex64(loaded.digest)}});
  manifest["params"] = {{"set", o.set_arg},         {"frame", fr.id},
                        {"method", o.method},       {"epsilon", o.epsilon},
                        {"fold_tx_tail", o.fold_tx_tail}, {"inflate_retries", o.inflate_retries}};

  const std::string stem = fr.id + "_" + o.method;
  const fs::path out_dir = resolve_out_dir(o.out_dir);
  const fs::path curve_path = o.curve_csv.empty() ? out_dir / (stem + "_curve.csv") : fs::path(o.curve_csv);
  const fs::path summary_path =
      o.summary_json.empty() ? out_dir / (stem + "_summary.json") : fs::path(o.summary_json);

  ExceedanceCurve curve;
  json summary;
  const auto t_an = std::chrono::steady_clock::now();
  if (o.method == "deterministic") {
    DetOptions dopts;
    dopts.inflate_with_retries = o.inflate_retries;
    const DetFrameResult det = det_wcrt(loaded.set, idx, dopts);
    curve = exceedance_step(det.wcrt, loaded.set.bus_speed_bps, fr.id, "deterministic");
    summary["frame_id"] = fr.id;
    summary["method"] = "deterministic";
    summary["wcrt_bits"] = det.wcrt;
    summary["wcrt_ms"] = static_cast<double>(det.wcrt) * 1000.0 / loaded.set.bus_speed_bps;
    summary["busy_window_bits"] = det.busy_window;
    summary["instances"] = det.instances;
    summary["schedulable"] = det.schedulable;
    summary["deadline_miss_probability"] = det.wcrt > fr.D ? 1.0 : 0.0;
  } else {
    AnalysisOptions opts;
    opts.epsilon = o.epsilon;
    opts.fold_tx_tail = o.fold_tx_tail;
    FrameAnalysis fa;
    if (o.method == "improved") {
      fa = analyze_frame(loaded.set, idx, opts);
    } else if (o.method == "legacy") {
      fa = analyze_frame_legacy(loaded.set, idx, opts);
    } else {
      throw ValidationError("unknown --method '" + o.method + "'");
    }
    curve = fa.curve;
    summary = analysis_summary(loaded.set, fa);
  }
  const double analysis_ms = ms_since(t_an);

  add_output(manifest, curve_path, curve_to_csv_text(curve));
  summary["analysis_ms"] = analysis_ms;
  add_output(manifest, summary_path, summary.dump(2) + "\n");
  manifest["timings_ms"] = {{"analysis", analysis_ms}, {"total", ms_since(t0)}};
  write_text(out_dir / (stem + "_manifest.json"), manifest.dump(2) + "\n");

  std::cout << "frame " << fr.id << " method " << o.method;
  if (summary.contains("wcrt_bits")) {
    std::cout << " wcrt_bits " << summary["wcrt_bits"].get<BitTime>();
  }
  std::cout << " dmp " << summary["deadline_miss_probability"].get<double>() << "\n"
            << "curve: " << curve_path.string() << "\n";
}

// --------------------------------------------------------------- simulate --

struct SimulateOpts {
  std::string set_arg;
  std::string frame_id;
  int frame_index = -1;
  bool lowest_priority = false;
  std::uint64_t samples = 1'000'000;
  std::uint64_t seed = 1;
  std::string blocking = "worst";
  std::string jitter = "off";
  ModelOverrides overrides;
  std::string out_dir;
};

void run_simulate(const SimulateOpts& o) {
  const auto t0 = std::chrono::steady_clock::now();
  LoadedSet loaded = resolve_set(o.set_arg);
  apply_overrides(loaded.set, o.overrides);
  validate_message_set(loaded.set);
  const std::size_t idx = resolve_frame(loaded.set, o.frame_id, o.frame_index, o.lowest_priority);
  const Frame& fr = loaded.set.frames[idx];

  SimConfig cfg;
  cfg.frame_index = idx;
  cfg.samples = o.samples;
  cfg.seed = o.seed;
  if (o.blocking == "worst") {
    cfg.blocking = BlockingMode::worst_case_deterministic;
  } else if (o.blocking == "sampled") {
    cfg.blocking = BlockingMode::sampled;
  } else {
    throw ValidationError("--blocking must be 'worst' or 'sampled'");
  }
  if (o.jitter == "off") {
    cfg.jitter = JitterMode::off;
  } else if (o.jitter == "uniform") {
    cfg.jitter = JitterMode::uniform;
  } else {
    throw ValidationError("--jitter must be 'off' or 'uniform'");
  }

  const auto t_sim = std::chrono::steady_clock::now();
  const SimReport report = simulate(loaded.set, cfg);
  const double sim_ms = ms_since(t_sim);
  const ExceedanceCurve curve = empirical_exceedance(report, loaded.set.bus_speed_bps);

  json manifest = manifest_base("simulate");
  manifest["inputs"].push_back({{"source", loaded.source}, {"fnv1a64", hex64(loaded.digest)}});
  manifest["params"] = {{"set", o.set_arg},   {"frame", fr.id},        {"samples", o.samples},
                        {"seed", o.seed},     {"blocking", o.blocking},
                        {"jitter", o.jitter}};

  const std::string stem = fr.id + "_mc";
  const fs::path out_dir = resolve_out_dir(o.out_dir);
  add_output(manifest, out_dir / (stem + "_curve.csv"), curve_to_csv_text(curve));
  add_output(manifest, out_dir / (stem + "_report.json"), sim_report_to_json(report).dump(2) + "\n");
  manifest["timings_ms"] = {{"simulation", sim_ms}, {"total", ms_since(t0)}};
  write_text(out_dir / (stem + "_manifest.json"), manifest.dump(2) + "\n");

  BitTime worst = 0;
  if (!report.worst_counts.empty()) worst = report.worst_counts.rbegin()->first;
  std::cout << "frame " << fr.id << " samples " << report.samples << " instances "
            << report.instances.size() << " max_response_bits " << worst << "\n"
            << "curve: " << (out_dir / (stem + "_curve.csv")).string() << "\n";
}

// ---------------------------------------------------------------- compare --

struct CompareOpts {
  std::vector<std::string> curves;
  std::string curve_a;
  std::string curve_b;
  int points = 1000;
  std::string range = "0:60";
  std::string out_json;
};

void run_compare(const CompareOpts& o) {
  std::vector<std::string> paths = o.curves;
  if (!o.curve_a.empty()) paths.insert(paths.begin(), o.curve_a);
  if (!o.curve_b.empty()) paths.insert(paths.begin() + (o.curve_a.empty() ? 0 : 1), o.curve_b);
  if (paths.size() < 2) throw ValidationError("compare needs at least two curves");

  json manifest = manifest_base("compare");
  std::vector<ExceedanceCurve> curves;
  curves.reserve(paths.size());
  for (const auto& p : paths) {
    const std::string bytes = read_file(p);
    std::istringstream ss(bytes);
    curves.push_back(read_curve_csv(ss));
    manifest["inputs"].push_back({{"source", p}, {"fnv1a64", hex64(fnv1a64(bytes))}});
  }
  for (std::size_t k = 1; k < curves.size(); ++k) {
    const double a = curves[0].bus_speed_bps, b = curves[k].bus_speed_bps;
    if (a > 0.0 && b > 0.0 && std::abs(a - b) > 1e-3 * a) {
      throw ValidationError("curves '" + paths[0] + "' and '" + paths[k] +
                            "' use different time bases");
    }
  }

  const auto [lo, hi] = parse_range(o.range);
  json pairs = json::array();
  for (std::size_t x = 0; x < curves.size(); ++x) {
    for (std::size_t y = x + 1; y < curves.size(); ++y) {
      const CurveComparison cmp = compare_curves(curves[x], curves[y], static_cast<std::size_t>(o.points), lo, hi);
      pairs.push_back({{"curve_a", paths[x]},
                       {"curve_b", paths[y]},
                       {"mse", cmp.mse},
                       {"max_abs_diff", cmp.max_abs_diff}});
      std::cout << paths[x] << " vs " << paths[y] << ": mse " << cmp.mse << " max_abs_diff "
                << cmp.max_abs_diff << "\n";
    }
  }
  json out;
  out["points"] = o.points;
  out["range_ms"] = {lo, hi};
  out["pairs"] = pairs;
  if (!o.out_json.empty()) {
    manifest["params"] = {{"points", o.points}, {"range", o.range}};
    add_output(manifest, o.out_json, out.dump(2) + "\n");
    const fs::path mpath = fs::path(o.out_json).replace_extension(".manifest.json");
    write_text(mpath, manifest.dump(2) + "\n");
  }
}

// --------------------------------------------------------------- generate --

struct GenerateOpts {
  int sets = 1;
  GenSpec spec;
  std::string t_range = "10:1000";
  std::string c_range = "55:135";
  std::string priority = "rate_monotonic";
  std::string out_dir;
};

GenSpec spec_from_opts(const GenerateOpts& o) {
  GenSpec spec = o.spec;
  const auto [tlo, thi] = parse_range(o.t_range);
  spec.t_min_ms = tlo;
  spec.t_max_ms = thi;
  const auto [clo, chi] = parse_range(o.c_range);
  spec.c_min_bits = static_cast<BitTime>(clo);
  spec.c_max_bits = static_cast<BitTime>(chi);
  if (o.priority == "rate_monotonic") {
    spec.priority = PriorityAssignment::rate_monotonic;
  } else if (o.priority == "generation_order") {
    spec.priority = PriorityAssignment::generation_order;
  } else {
    throw ValidationError("--priority-assignment must be 'rate_monotonic' or 'generation_order'");
  }
  return spec;
}

void run_generate(const GenerateOpts& o) {
  if (o.sets < 1) throw ValidationError("--sets must be >= 1");
  GenSpec spec = spec_from_opts(o);
  json manifest = manifest_base("generate");
  manifest["params"] = {{"sets", o.sets},
                        {"n_frames", spec.n_frames},
                        {"utilization", spec.utilization},
                        {"seed", spec.seed},
                        {"t_range_ms", o.t_range},
                        {"c_range_bits", o.c_range},
                        {"e_bits", spec.e_bits},
                        {"lambda_per_bit", spec.lambda_per_bit},
                        {"priority_assignment", o.priority}};
  const fs::path out_dir = resolve_out_dir(o.out_dir);
  // draw every set before writing anything, so a seed that exhausts its
  // attempts cannot leave a partial batch behind for --set-dir consumers
  std::vector<std::pair<fs::path, std::string>> outputs;
  for (int k = 0; k < o.sets; ++k) {
    GenSpec one = spec;
    one.seed = spec.seed + static_cast<std::uint64_t>(k);
    const MessageSet set = generate_set(one);
    char name[32];
    std::snprintf(name, sizeof(name), "set_%04llu.json", static_cast<unsigned long long>(one.seed));
    outputs.emplace_back(out_dir / name, message_set_to_json(set).dump(2) + "\n");
  }
  for (const auto& [path, bytes] : outputs) add_output(manifest, path, bytes);
  write_text(out_dir / "generate_manifest.json", manifest.dump(2) + "\n");
  std::cout << "wrote " << o.sets << " sets to " << out_dir.string() << "\n";
}

// ------------------------------------------------------------------ bench --

struct BenchOpts {
  GenerateOpts gen;
  std::string utilization = "0.5";  // single value or LO:HI[:STEP] sweep
  std::string set_dir;
  int repeats = 3;
  int jobs = 1;
  double epsilon = 1e-12;
  std::string out_dir;
};

std::vector<double> parse_levels(const std::string& text) {
  if (text.find(':') == std::string::npos) {
    try {
      return {std::stod(text)};
    } catch (const std::exception&) {
      throw ValidationError("--utilization must be a number or LO:HI[:STEP]");
    }
  }
  std::istringstream ss(text);
  std::string part;
  std::vector<double> nums;
  while (std::getline(ss, part, ':')) {
    try {
      nums.push_back(std::stod(part));
    } catch (const std::exception&) {
      throw ValidationError("--utilization must be a number or LO:HI[:STEP]");
    }
  }
  if (nums.size() < 2 || nums.size() > 3) throw ValidationError("--utilization sweep is LO:HI[:STEP]");
  const double lo = nums[0], hi = nums[1];
  const double step = nums.size() == 3 ? nums[2] : 0.1;
  if (step <= 0.0 || hi < lo) throw ValidationError("--utilization sweep needs LO <= HI and STEP > 0");
  std::vector<double> levels;
  for (double u = lo; u <= hi + 1e-9; u += step) levels.push_back(u);
  return levels;
}

struct BenchRow {
  std::string label;
  double utilization = 0.0;
  double improved_ms = 0.0;
  double legacy_ms = 0.0;
  double dmp_improved = 0.0;
  double dmp_legacy = 0.0;
};

BenchRow bench_one(const MessageSet& set, const std::string& label, int repeats, double epsilon) {
  AnalysisOptions opts;
  opts.epsilon = epsilon;
  const std::size_t idx = set.lowest_priority_index();
  BenchRow row;
  row.label = label;
  row.utilization = set.utilization();
  FrameAnalysis improved, legacy;
  for (int rep = 0; rep < repeats; ++rep) {
    auto t1 = std::chrono::steady_clock::now();
    improved = analyze_frame(set, idx, opts);
    const double d_imp = ms_since(t1);
    t1 = std::chrono::steady_clock::now();
    legacy = analyze_frame_legacy(set, idx, opts);
    const double d_leg = ms_since(t1);
    if (rep == 0 || d_imp < row.improved_ms) row.improved_ms = d_imp;
    if (rep == 0 || d_leg < row.legacy_ms) row.legacy_ms = d_leg;
  }
  row.dmp_improved = improved.deadline_miss_probability;
  row.dmp_legacy = legacy.deadline_miss_probability;
  return row;
}

void run_bench(const BenchOpts& o) {
  if (o.gen.sets < 1 || o.repeats < 1 || o.jobs < 1) {
    throw ValidationError("--sets, --repeats and --jobs must be >= 1");
  }

  // work items: either every set file in --set-dir, or generated sets at each
  // utilization level
  struct Item {
    std::string label;
    MessageSet set;
  };
  std::vector<Item> items;
  std::vector<double> levels;
  if (!o.set_dir.empty()) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(o.set_dir)) {
      if (entry.path().extension() == ".json" &&
          entry.path().filename().string().rfind("set_", 0) == 0) {
        files.push_back(entry.path());
      }
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) throw ValidationError("no set_*.json files in '" + o.set_dir + "'");
    for (const auto& f : files) items.push_back({f.filename().string(), resolve_set(f.string()).set});
  } else {
    levels = parse_levels(o.utilization);
    GenSpec spec = spec_from_opts(o.gen);
    for (double u : levels) {
      for (int k = 0; k < o.gen.sets; ++k) {
        GenSpec one = spec;
        one.utilization = u;
        one.seed = spec.seed + static_cast<std::uint64_t>(k);
        char label[64];
        std::snprintf(label, sizeof(label), "u%.3f_s%04llu", u,
                      static_cast<unsigned long long>(one.seed));
        items.push_back({label, generate_set(one)});
      }
    }
  }

  // --jobs parallelizes across sets; each per-set analysis stays sequential and
  // deterministic, row order is fixed by the item list
  std::vector<BenchRow> rows(items.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next.fetch_add(1); i < items.size(); i = next.fetch_add(1)) {
      rows[i] = bench_one(items[i].set, items[i].label, o.repeats, o.epsilon);
    }
  };
  if (o.jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < o.jobs; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  json jrows = json::array();
  for (const auto& r : rows) {
    jrows.push_back({{"set", r.label},
                     {"utilization", r.utilization},
                     {"improved_ms", r.improved_ms},
                     {"legacy_ms", r.legacy_ms},
                     {"dmp_improved", r.dmp_improved},
                     {"dmp_legacy", r.dmp_legacy}});
  }

  // aggregate per utilization level (or one aggregate for a set directory)
  json aggregates = json::array();
  const std::size_t groups = levels.empty() ? 1 : levels.size();
  const std::size_t per_group = rows.size() / groups;
  for (std::size_t g = 0; g < groups; ++g) {
    double sum_imp = 0.0, sum_leg = 0.0, max_imp = 0.0, max_leg = 0.0;
    for (std::size_t k = 0; k < per_group; ++k) {
      const BenchRow& r = rows[g * per_group + k];
      sum_imp += r.improved_ms;
      sum_leg += r.legacy_ms;
      max_imp = std::max(max_imp, r.improved_ms);
      max_leg = std::max(max_leg, r.legacy_ms);
    }
    json agg;
    if (!levels.empty()) agg["utilization"] = levels[g];
    agg["sets"] = per_group;
    agg["mean_improved_ms"] = sum_imp / static_cast<double>(per_group);
    agg["mean_legacy_ms"] = sum_leg / static_cast<double>(per_group);
    agg["max_improved_ms"] = max_imp;
    agg["max_legacy_ms"] = max_leg;
    aggregates.push_back(agg);
    std::cout << (levels.empty() ? std::string("all") : "u=" + std::to_string(levels[g])) << " sets "
              << per_group << " mean_improved_ms " << sum_imp / static_cast<double>(per_group)
              << " mean_legacy_ms " << sum_leg / static_cast<double>(per_group) << " max_improved_ms "
              << max_imp << " max_legacy_ms " << max_leg << "\n";
  }

  json out;
  out["rows"] = jrows;
  out["aggregates"] = aggregates;

  json manifest = manifest_base("bench");
  manifest["params"] = {{"sets", o.gen.sets},   {"repeats", o.repeats},
                        {"jobs", o.jobs},       {"epsilon", o.epsilon},
                        {"n_frames", o.gen.spec.n_frames}, {"utilization", o.utilization},
                        {"seed", o.gen.spec.seed},         {"set_dir", o.set_dir},
                        {"priority_assignment", o.gen.priority}};
  const fs::path out_dir = resolve_out_dir(o.out_dir);
  add_output(manifest, out_dir / "bench.json", out.dump(2) + "\n");
  write_text(out_dir / "bench_manifest.json", manifest.dump(2) + "\n");
}

void add_model_override_flags(CLI::App* sub, ModelOverrides& ov) {
  sub->add_option("--lambda", ov.lambda, "override the per-bit error rate");
  sub->add_option("--retry-limit", ov.retry_limit, "truncate retries at a fixed count");
  sub->add_option("--retry-threshold", ov.retry_threshold,
                  "truncate retries once the residual drops below this");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"probabilistic worst-case response-time analysis for CAN frames"};
  app.require_subcommand(1);

  AnalyzeOpts an;
  CLI::App* analyze = app.add_subcommand("analyze", "response-time distribution of one frame");
  analyze->add_option("--set", an.set_arg, "message set JSON path or built-in name")->required();
  analyze->add_option("--frame", an.frame_id, "frame id (default: lowest priority)");
  analyze->add_option("--frame-index", an.frame_index, "frame index, 0 = highest priority");
  analyze->add_flag("--lowest-priority", an.lowest_priority, "analyze the lowest-priority frame");
  analyze->add_option("--method", an.method, "improved | legacy | deterministic");
  analyze->add_option("--epsilon", an.epsilon, "busy-window truncation threshold");
  analyze->add_flag("--fold-tx-tail", an.fold_tx_tail, "fold the retry residual onto the last support point");
  analyze->add_flag("--inflate-retries", an.inflate_retries,
                    "deterministic method: charge every transmission its truncated retry maximum");
  add_model_override_flags(analyze, an.overrides);
  analyze->add_option("--out-dir", an.out_dir, "output directory");
  analyze->add_option("--curve-csv", an.curve_csv, "explicit curve output path");
  analyze->add_option("--summary-json", an.summary_json, "explicit summary output path");
  analyze->callback([&an] { run_analyze(an); });

  SimulateOpts sim;
  CLI::App* simulate = app.add_subcommand("simulate", "Monte Carlo busy-period simulation of one frame");
  simulate->add_option("--set", sim.set_arg, "message set JSON path or built-in name")->required();
  simulate->add_option("--frame", sim.frame_id, "frame id (default: lowest priority)");
  simulate->add_option("--frame-index", sim.frame_index, "frame index, 0 = highest priority");
  simulate->add_flag("--lowest-priority", sim.lowest_priority, "simulate the lowest-priority frame");
  simulate->add_option("--samples", sim.samples, "number of busy-period samples");
  simulate->add_option("--seed", sim.seed, "RNG seed");
  simulate->add_option("--blocking", sim.blocking, "worst | sampled");
  simulate->add_option("--jitter", sim.jitter, "off | uniform (uses each frame's J)");
  add_model_override_flags(simulate, sim.overrides);
  simulate->add_option("--out-dir", sim.out_dir, "output directory");
  simulate->callback([&sim] { run_simulate(sim); });

  CompareOpts cmp;
  CLI::App* compare = app.add_subcommand("compare", "grid comparison of exceedance curves");
  compare->add_option("--curve-a", cmp.curve_a, "first curve CSV");
  compare->add_option("--curve-b", cmp.curve_b, "second curve CSV");
  compare->add_option("--curve", cmp.curves, "additional curve CSVs (all pairs are compared)");
  compare->add_option("--points", cmp.points, "grid points");
  compare->add_option("--range", cmp.range, "grid range in ms, LO:HI");
  compare->add_option("--out", cmp.out_json, "write the comparison as JSON");
  compare->callback([&cmp] { run_compare(cmp); });

  GenerateOpts gen;
  CLI::App* generate = app.add_subcommand("generate", "draw random message sets");
  generate->add_option("--sets", gen.sets, "number of sets");
  generate->add_option("--n-frames", gen.spec.n_frames, "frames per set");
  generate->add_option("--utilization", gen.spec.utilization, "target bus utilization");
  generate->add_option("--util-tolerance", gen.spec.util_tolerance, "relative tolerance on realized utilization");
  generate->add_option("--seed", gen.spec.seed, "seed of the first set; set k uses seed+k");
  generate->add_option("--t-range", gen.t_range, "period range in ms, LO:HI");
  generate->add_option("--c-range", gen.c_range, "frame size range in bits, LO:HI");
  generate->add_option("--e-bits", gen.spec.e_bits, "error-frame overhead in bits");
  generate->add_option("--jitter-frac", gen.spec.jitter_frac, "upper bound of the per-frame uniform jitter fraction");
  generate->add_option("--lambda", gen.spec.lambda_per_bit, "per-bit error rate");
  generate->add_option("--bus", gen.spec.bus_speed_bps, "bus speed in bit/s");
  generate->add_option("--retry-threshold", gen.spec.retry_residual_threshold,
                       "retry truncation residual for generated models");
  generate->add_option("--priority-assignment", gen.priority, "rate_monotonic | generation_order");
  generate->add_option("--out-dir", gen.out_dir, "output directory");
  generate->callback([&gen] { run_generate(gen); });

  BenchOpts bench;
  // defaults tuned for the runtime experiment: priorities independent of the
  // period and a period band narrow enough that low-priority busy windows
  // span several instances
  bench.gen.t_range = "5:50";
  bench.gen.priority = "generation_order";
  bench.gen.sets = 20;
  CLI::App* bench_cmd = app.add_subcommand("bench", "runtime comparison of the two analyses on random sets");
  bench_cmd->add_option("--sets", bench.gen.sets, "number of generated sets per utilization level");
  bench_cmd->add_option("--set-dir", bench.set_dir, "benchmark every set_*.json in this directory instead");
  bench_cmd->add_option("--repeats", bench.repeats, "timing repeats per set (best is kept)");
  bench_cmd->add_option("--jobs", bench.jobs, "worker threads across sets");
  bench_cmd->add_option("--epsilon", bench.epsilon, "busy-window truncation threshold");
  bench_cmd->add_option("--n-frames", bench.gen.spec.n_frames, "frames per set");
  bench_cmd->add_option("--utilization", bench.utilization, "target utilization, or LO:HI[:STEP] sweep");
  bench_cmd->add_option("--seed", bench.gen.spec.seed, "seed of the first set");
  bench_cmd->add_option("--t-range", bench.gen.t_range, "period range in ms, LO:HI");
  bench_cmd->add_option("--c-range", bench.gen.c_range, "frame size range in bits, LO:HI");
  bench_cmd->add_option("--lambda", bench.gen.spec.lambda_per_bit, "per-bit error rate");
  bench_cmd->add_option("--priority-assignment", bench.gen.priority, "rate_monotonic | generation_order");
  bench_cmd->add_option("--out-dir", bench.out_dir, "output directory");
  bench_cmd->callback([&bench] {
    bench.gen.out_dir = bench.out_dir;
    run_bench(bench);
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const ConvergenceError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
