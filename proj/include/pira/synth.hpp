#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "pira/trace.hpp"
#include "pira/types.hpp"

namespace pira {

/// Engine-output-only RNG wrapper: mt19937_64's stream is pinned by the
/// standard, and the transforms here avoid libstdc++/libc++ distribution
/// differences, so identical seeds give identical draws everywhere.
class rng64 {
 public:
  explicit rng64(std::uint64_t seed) : eng_(seed) {}

  double uniform01() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }  // [0, 1)
  double uniform(double a, double b) { return a + (b - a) * uniform01(); }
  bool bernoulli(double p) { return uniform01() < p; }

  int uniform_int(int n) {  // [0, n)
    if (n < 1) throw invalid_input_error("uniform_int needs n >= 1");
    const int k = static_cast<int>(uniform01() * n);
    return k < n ? k : n - 1;
  }

  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = 1.0 - uniform01();  // (0, 1]
    const double u2 = uniform01();
    const double mag = std::sqrt(-2.0 * std::log(u1));
    constexpr double two_pi = 6.283185307179586476925286766559;
    spare_ = mag * std::sin(two_pi * u2);
    have_spare_ = true;
    return mag * std::cos(two_pi * u2);
  }

 private:
  std::mt19937_64 eng_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

/// splitmix64-style mixing so nearby (seed, stream) pairs land far apart.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

enum class period_kind { off_peak, peak, evening_peak };

inline const std::vector<period_kind>& all_periods() {
  static const std::vector<period_kind> p = {period_kind::off_peak, period_kind::peak,
                                             period_kind::evening_peak};
  return p;
}

inline std::string to_string(period_kind p) {
  switch (p) {
    case period_kind::off_peak: return "off-peak";
    case period_kind::peak: return "peak";
    case period_kind::evening_peak: return "evening-peak";
  }
  throw invalid_input_error("unknown period");
}

inline period_kind parse_period(const std::string& s) {
  for (period_kind p : all_periods())
    if (to_string(p) == s) return p;
  throw invalid_input_error("unknown period '" + s + "' (off-peak, peak, evening-peak)");
}

struct synth_config {
  std::vector<int> cdn_ids = {1, 2, 3, 4};
  std::vector<double> mean_mbps = {25.0, 22.0, 18.0, 14.0};
  std::map<period_kind, std::vector<double>> period_mult = {
      {period_kind::off_peak, {1.0, 1.02, 1.05, 0.90}},
      {period_kind::peak, {1.0, 1.0, 1.0, 1.0}},
      {period_kind::evening_peak, {1.0, 0.92, 0.72, 1.25}},
  };
  double sigma = 0.35;  // lognormal scale of the multiplicative noise
  double ar = 0.9;      // temporal correlation, fluctuations on the tens-of-seconds scale
  double duration_s = 1200.0;
};

inline void validate(const synth_config& cfg) {
  if (cfg.cdn_ids.empty()) throw invalid_input_error("no pan-CDN ids configured");
  if (cfg.mean_mbps.size() != cfg.cdn_ids.size())
    throw invalid_input_error("mean_mbps must match cdn_ids in length");
  for (double m : cfg.mean_mbps)
    if (m <= 0) throw invalid_input_error("trace means must be positive");
  for (const auto& [p, mult] : cfg.period_mult) {
    if (mult.size() != cfg.cdn_ids.size())
      throw invalid_input_error("period multipliers for " + to_string(p) +
                                " must match cdn_ids in length");
    for (double m : mult)
      if (m <= 0) throw invalid_input_error("period multipliers must be positive");
  }
  if (cfg.sigma < 0) throw invalid_input_error("sigma must be nonnegative");
  if (cfg.ar < 0 || cfg.ar >= 1) throw invalid_input_error("AR coefficient must lie in [0,1)");
  if (cfg.duration_s < 1) throw invalid_input_error("trace duration must be at least 1 s");
}

/// Seeded diurnal traces: per-class mean, period multiplier, and stationary
/// AR(1) lognormal noise normalized so the long-run mean hits the target.
inline trace_set synthesize_traces(const synth_config& cfg, period_kind period,
                                   std::uint64_t seed) {
  validate(cfg);
  auto it = cfg.period_mult.find(period);
  if (it == cfg.period_mult.end())
    throw invalid_input_error("no multipliers configured for period " + to_string(period));

  trace_set out;
  out.id = "synth-" + to_string(period) + "-seed" + std::to_string(seed);
  out.period = to_string(period);
  const int bins = static_cast<int>(cfg.duration_s);

  for (std::size_t k = 0; k < cfg.cdn_ids.size(); ++k) {
    rng64 rng(mix_seed(seed, 0x7261636Bu + k));
    const double mean = cfg.mean_mbps[k] * it->second[k];
    const double norm = std::exp(0.5 * cfg.sigma * cfg.sigma);
    const double innovation = cfg.sigma * std::sqrt(1.0 - cfg.ar * cfg.ar);

    throughput_trace tr;
    tr.pan_cdn_id = cfg.cdn_ids[k];
    tr.mbps.reserve(bins);
    double x = cfg.sigma * rng.normal();  // stationary start
    for (int t = 0; t < bins; ++t) {
      tr.mbps.push_back(mean * std::exp(x) / norm);
      x = cfg.ar * x + innovation * rng.normal();
    }
    out.traces.push_back(std::move(tr));
  }
  return out;
}

struct workload_config {
  int videos = 14;
  double short_fraction = 0.73;
  double short_min_s = 5.0, short_max_s = 30.0;
  double long_min_s = 30.0, long_max_s = 120.0;
  std::vector<double> bitrates_mbps = {4.0, 8.0, 16.0};
  double watch_min_s = 3.0, watch_max_s = 25.0;  // swipe model; capped by duration
  std::vector<int> cdn_ids = {1, 2, 3, 4};
  std::vector<double> cache_prob = {1.0, 1.0, 1.0, 1.0};
  double chunk_s = 4.0;
};

inline void validate(const workload_config& cfg) {
  if (cfg.videos < 1) throw invalid_input_error("workload needs at least one video");
  if (cfg.short_fraction < 0 || cfg.short_fraction > 1)
    throw invalid_input_error("short_fraction must lie in [0,1]");
  if (cfg.short_min_s <= 0 || cfg.short_max_s < cfg.short_min_s)
    throw invalid_input_error("short-duration bounds invalid");
  if (cfg.long_min_s <= 0 || cfg.long_max_s < cfg.long_min_s)
    throw invalid_input_error("long-duration bounds invalid");
  if (cfg.bitrates_mbps.empty()) throw invalid_input_error("no bitrates configured");
  for (double b : cfg.bitrates_mbps)
    if (b <= 0) throw invalid_input_error("bitrates must be positive");
  if (cfg.watch_min_s <= 0 || cfg.watch_max_s < cfg.watch_min_s)
    throw invalid_input_error("watch-duration bounds invalid");
  if (cfg.cdn_ids.empty()) throw invalid_input_error("no pan-CDN ids configured");
  if (cfg.cache_prob.size() != cfg.cdn_ids.size())
    throw invalid_input_error("cache_prob must match cdn_ids in length");
  for (double p : cfg.cache_prob)
    if (p < 0 || p > 1) throw invalid_input_error("cache probabilities must lie in [0,1]");
  if (cfg.chunk_s <= 0) throw invalid_input_error("chunk length must be positive");
}

/// Seeded media list: short/long duration mixture, uniform bitrate pick,
/// duration-capped watch time, per-class cache coverage (never empty).
inline media_list generate_workload(const workload_config& cfg, std::uint64_t seed) {
  validate(cfg);
  rng64 rng(mix_seed(seed, 0x776F726Bu));
  media_list m;
  m.videos.reserve(cfg.videos);

  for (int i = 0; i < cfg.videos; ++i) {
    video_spec v;
    char buf[16];
    std::snprintf(buf, sizeof(buf), "v%04d", i + 1);
    v.id = buf;
    v.duration_s = rng.bernoulli(cfg.short_fraction)
                       ? rng.uniform(cfg.short_min_s, cfg.short_max_s)
                       : rng.uniform(cfg.long_min_s, cfg.long_max_s);
    v.bitrate_mbps = cfg.bitrates_mbps[rng.uniform_int(static_cast<int>(cfg.bitrates_mbps.size()))];
    v.chunk_s = cfg.chunk_s;
    v.watch_s = std::min(v.duration_s, rng.uniform(cfg.watch_min_s, cfg.watch_max_s));
    for (std::size_t k = 0; k < cfg.cdn_ids.size(); ++k)
      if (rng.bernoulli(cfg.cache_prob[k])) v.cached_on.push_back(cfg.cdn_ids[k]);
    if (v.cached_on.empty()) {
      // Degenerate coverage draw: pin the class with the highest configured probability.
      std::size_t best = 0;
      for (std::size_t k = 1; k < cfg.cache_prob.size(); ++k)
        if (cfg.cache_prob[k] > cfg.cache_prob[best]) best = k;
      v.cached_on.push_back(cfg.cdn_ids[best]);
    }
    m.videos.push_back(std::move(v));
  }
  validate(m);
  return m;
}

}  // namespace pira
