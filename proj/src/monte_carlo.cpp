#include "pwcrt/monte_carlo.hpp"

#include <algorithm>
#include <deque>
#include <random>

#include <nlohmann/json.hpp>

#include "pwcrt/errors.hpp"
#include "pwcrt/pmf.hpp"

namespace pwcrt {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// 53-bit uniform in [0, 1). Hand-rolled so runs reproduce across standard
// libraries (std::uniform_real_distribution is not pinned by the standard).
double uniform01(std::mt19937_64& eng) {
  return static_cast<double>(eng() >> 11) * 0x1.0p-53;
}

struct DurationSampler {
  // cumulative mass -> transmission duration, last entry absorbs the
  // truncation residual so every draw lands on a support point
  std::vector<std::pair<double, BitTime>> table;

  BitTime draw(std::mt19937_64& eng) const {
    const double u = uniform01(eng);
    for (const auto& [cum, dur] : table) {
      if (u < cum) return dur;
    }
    return table.back().second;
  }
};

DurationSampler make_sampler(const Frame& frame, const ErrorModel& model) {
  Pmf tx = transmission_time_pmf(frame, model, /*fold_tail=*/true);
  if (tx.empty()) throw ValidationError("transmission pmf for '" + frame.id + "' is empty");
  DurationSampler s;
  double cum = 0.0;
  for (const auto& e : tx.entries()) {
    cum += e.mass;
    s.table.push_back({cum, e.value});
  }
  s.table.back().first = 1.0;  // guard against rounding in the cumulative sum
  return s;
}

}  // namespace

SimReport simulate(const MessageSet& set, const SimConfig& config) {
  validate_message_set(set);
  if (config.frame_index >= set.frames.size()) {
    throw ValidationError("simulate: frame index out of range");
  }
  if (config.samples == 0) throw ValidationError("simulate: need at least one sample");

  const std::size_t i = config.frame_index;
  const auto& frames = set.frames;

  std::vector<DurationSampler> samplers;
  samplers.reserve(i + 1);
  for (std::size_t f = 0; f <= i; ++f) samplers.push_back(make_sampler(frames[f], set.error_model));

  const BitTime blocking = blocking_time(set, i);
  const bool jitter_on = config.jitter == JitterMode::uniform;
  if (jitter_on) {
    for (std::size_t f = 0; f <= i; ++f) {
      if (frames[f].J >= frames[f].T) {
        throw ValidationError("simulate: jitter must stay below the period for '" +
                              frames[f].id + "'");
      }
    }
  }

  SimReport report;
  report.frame_id = frames[i].id;
  report.frame_index = i;
  report.samples = config.samples;
  report.seed = config.seed;
  report.rng = "mt19937_64(splitmix64(seed)), 53-bit uniforms";
  report.blocking =
      config.blocking == BlockingMode::worst_case_deterministic ? "worst_case_deterministic" : "sampled";
  report.jitter = config.jitter == JitterMode::off ? "off" : "uniform";

  std::mt19937_64 eng(splitmix64(config.seed));

  // next_base holds the nominal periodic release; pending adds the per-instance
  // jitter offset (uniform in [0, J], drawn as each instance is scheduled, so
  // runs stay reproducible). With jitter off no extra draws are consumed.
  std::vector<BitTime> next_base(i + 1);
  std::vector<BitTime> pending(i + 1);
  std::vector<std::deque<BitTime>> queued(i + 1);
  std::vector<BitTime> responses;  // responses of the analysed frame, by ordinal

  auto jitter_offset = [&](std::size_t f) -> BitTime {
    const BitTime J = frames[f].J;
    if (!jitter_on || J <= 0) return 0;
    return std::min<BitTime>(J, static_cast<BitTime>(uniform01(eng) *
                                                     static_cast<double>(J + 1)));
  };

  for (std::uint64_t s = 0; s < config.samples; ++s) {
    for (std::size_t f = 0; f <= i; ++f) {
      next_base[f] = 0;
      pending[f] = jitter_offset(f);
    }
    for (auto& q : queued) q.clear();
    responses.clear();

    BitTime bus_free = 0;
    if (blocking > 0) {
      if (config.blocking == BlockingMode::worst_case_deterministic) {
        bus_free = blocking;
      } else {
        const double u = uniform01(eng);
        bus_free = std::min<BitTime>(blocking, 1 + static_cast<BitTime>(u * static_cast<double>(blocking)));
      }
    }

    // One busy period per sample, started at the critical instant: everything
    // queued at time zero contends immediately. Afterwards a frame released at
    // the exact instant the bus frees does not grab it; the earlier-queued
    // frame transmits first and the newcomer waits for the next idle point.
    //
    // Retries of the analysed frame do not hold the bus through to success:
    // the failed attempts and error flags (duration - C) occupy the bus, then
    // the instance re-enters arbitration, so higher-priority frames released
    // in the meantime transmit ahead of the final attempt. Higher-priority
    // frames keep their retry bundle atomic; only frames above them could
    // interleave, and that reordering cannot change when the analysed frame
    // completes.
    bool own_retries_done = false;
    while (true) {
      const BitTime t = bus_free;
      if (t > config.horizon) throw ConvergenceError("simulate: busy period exceeded horizon");
      for (std::size_t f = 0; f <= i; ++f) {
        while (pending[f] <= t) {
          queued[f].push_back(pending[f]);
          next_base[f] += frames[f].T;
          pending[f] = next_base[f] + jitter_offset(f);
        }
      }
      int pick = -1;
      for (std::size_t f = 0; f <= i; ++f) {
        if (queued[f].empty()) continue;
        if (queued[f].front() < t || t == 0) {
          pick = static_cast<int>(f);
          break;
        }
      }
      if (pick < 0) break;  // bus idle with nothing eligible: busy period over

      const BitTime release = queued[pick].front();
      if (static_cast<std::size_t>(pick) == i) {
        if (!own_retries_done) {
          const BitTime extra = samplers[pick].draw(eng) - frames[i].C;
          if (extra > 0) {
            bus_free = t + extra;
            own_retries_done = true;  // instance stays queued for the final attempt
            continue;
          }
        }
        queued[pick].pop_front();
        own_retries_done = false;
        bus_free = t + frames[i].C;
        responses.push_back(bus_free - release);
      } else {
        queued[pick].pop_front();
        bus_free = t + samplers[pick].draw(eng);
      }
    }

    BitTime worst = 0;
    for (std::size_t j = 0; j < responses.size(); ++j) {
      if (report.instances.size() <= j) {
        InstanceHistogram h;
        h.ordinal = static_cast<int>(j) + 1;
        h.release = static_cast<BitTime>(j) * frames[i].T;
        report.instances.push_back(std::move(h));
      }
      auto& hist = report.instances[j];
      hist.observed += 1;
      hist.counts[responses[j]] += 1;
      worst = std::max(worst, responses[j]);
    }
    report.worst_counts[worst] += 1;
  }
  return report;
}

ExceedanceCurve empirical_exceedance(const SimReport& report, double bus_speed_bps) {
  if (report.samples == 0) throw ValidationError("empirical_exceedance: empty report");
  std::vector<Pmf> pmfs;
  pmfs.reserve(report.instances.size());
  const double n = static_cast<double>(report.samples);
  for (const auto& inst : report.instances) {
    std::vector<Pmf::Entry> entries;
    entries.reserve(inst.counts.size());
    for (const auto& [value, count] : inst.counts) {
      entries.push_back({value, static_cast<double>(count) / n});
    }
    // instances that fall outside a sample's busy period count as not
    // exceeding, so the per-instance mass may total less than one
    pmfs.push_back(Pmf::from_entries(entries));
  }
  return exceedance_from_pmfs(pmfs, bus_speed_bps, report.frame_id, "monte_carlo");
}

nlohmann::json sim_report_to_json(const SimReport& report) {
  nlohmann::json j;
  j["frame_id"] = report.frame_id;
  j["frame_index"] = report.frame_index;
  j["samples"] = report.samples;
  j["seed"] = report.seed;
  j["rng"] = report.rng;
  j["blocking"] = report.blocking;
  j["jitter"] = report.jitter;
  j["instances"] = nlohmann::json::array();
  for (const auto& inst : report.instances) {
    nlohmann::json ji;
    ji["ordinal"] = inst.ordinal;
    ji["release_bits"] = inst.release;
    ji["observed"] = inst.observed;
    auto counts = nlohmann::json::array();
    for (const auto& [value, count] : inst.counts) counts.push_back({value, count});
    ji["counts"] = std::move(counts);
    j["instances"].push_back(std::move(ji));
  }
  auto worst = nlohmann::json::array();
  for (const auto& [value, count] : report.worst_counts) worst.push_back({value, count});
  j["worst_counts"] = std::move(worst);
  return j;
}

}  // namespace pwcrt
