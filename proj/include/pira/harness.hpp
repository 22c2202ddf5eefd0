#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "json.hpp"
#include "pira/config.hpp"
#include "pira/simulator.hpp"
#include "pira/strategy.hpp"
#include "pira/synth.hpp"
#include "pira/types.hpp"

namespace pira {

using ordered_json = nlohmann::ordered_json;

inline bool strategy_needs_link(const std::string& name) { return name == "oracle"; }

inline std::unique_ptr<strategy> make_strategy(const std::string& name,
                                               const experiment_config& cfg, link_model* link) {
  if (name == "pira")
    return std::make_unique<pira_strategy>(cfg.classes, cfg.session, cfg.planner, cfg.predictor,
                                           cfg.prior_mbps, cfg.pira_probes);
  if (name == "production")
    return std::make_unique<production_strategy>(cfg.classes, cfg.session, cfg.predictor,
                                                 cfg.prior_mbps, cfg.production_margin,
                                                 cfg.production_recovery_s,
                                                 cfg.production_emergency_cdn);
  if (name == "oracle") {
    if (!link) throw invalid_input_error("oracle strategy needs a bound link model");
    return std::make_unique<oracle_strategy>(cfg.classes, cfg.session, cfg.planner, link);
  }
  if (name.rfind("pure", 0) == 0 && name.size() > 4) {
    const int id = detail::cfg_int("strategy", name.substr(4));
    find_class(cfg.classes, id);
    return std::make_unique<pure_strategy>(id);
  }
  throw invalid_input_error("unknown strategy '" + name +
                            "' (pira, production, oracle, pure<id>)");
}

/// Scalars the comparison tables are built from, one row per episode.
struct episode_stats {
  std::string strategy;
  std::string period;
  std::uint64_t seed = 0;
  int replication = 0;
  int videos = 0;
  int decisions = 0;
  int probes = 0;
  int fallbacks = 0;
  double rebuffer_s = 0.0;
  double startup_s = 0.0;
  double watch_s = 0.0;
  double rebuffer_ratio = 0.0;
  double qoe = 0.0;
  double cost = 0.0;
  double utility = 0.0;
  double megabits = 0.0;
  std::map<int, double> megabits_by_cdn;
  std::uint64_t sequences_scored = 0;
  double wall_clock_end_s = 0.0;
};

inline episode_stats summarize_episode(const std::string& strategy_name,
                                       const std::string& period, std::uint64_t seed,
                                       int replication, const episode_result& ep,
                                       const media_list& media) {
  episode_stats st;
  st.strategy = strategy_name;
  st.period = period;
  st.seed = seed;
  st.replication = replication;
  st.videos = static_cast<int>(media.videos.size());
  st.decisions = static_cast<int>(ep.decisions.size());
  st.probes = ep.probe_count;
  st.fallbacks = ep.fallback_count;
  for (std::size_t i = 0; i < media.videos.size(); ++i) {
    st.rebuffer_s += ep.metrics.per_video[i].rebuffer_s;
    st.startup_s += ep.metrics.per_video[i].startup_s;
    st.watch_s += media.videos[i].watch_s;
  }
  st.rebuffer_ratio = st.watch_s > 0 ? st.rebuffer_s / st.watch_s : 0.0;
  st.qoe = ep.metrics.qoe_total;
  st.cost = ep.metrics.total_cost;
  st.utility = ep.metrics.utility;
  for (const auto& [cdn, mbit] : ep.metrics.megabits_by_cdn) {
    st.megabits += mbit;
    st.megabits_by_cdn[cdn] = mbit;
  }
  st.sequences_scored = ep.sequences_scored;
  st.wall_clock_end_s = ep.wall_clock_end_s;
  return st;
}

struct suite_episode {
  episode_stats stats;
  episode_result result;
  media_list media;
};

/// One fully seeded episode: synthesize the period's traces and the media list,
/// bind a fresh strategy, run. Pure function of (cfg, strategy, period, rep).
inline suite_episode run_suite_episode(const experiment_config& cfg,
                                       const std::string& strategy_name, period_kind period,
                                       int replication) {
  const std::uint64_t seed = cfg.base_seed + static_cast<std::uint64_t>(replication);
  suite_episode out;
  const trace_set traces = synthesize_traces(cfg.traces, period, seed);
  link_model link(&traces, cfg.link);
  out.media = generate_workload(cfg.workload, seed);
  auto strat = make_strategy(strategy_name, cfg, &link);
  sim_config sim{cfg.session, true, cfg.probe_cost_free};
  out.result = run_episode(out.media, cfg.classes, link, *strat, sim);
  out.stats =
      summarize_episode(strategy_name, to_string(period), seed, replication, out.result, out.media);
  return out;
}

/// Strategy-major, then period, then replication; fan out across worker threads
/// into fixed slots so the merged order never depends on scheduling.
inline std::vector<suite_episode> run_suite(const experiment_config& cfg,
                                            const std::vector<std::string>& strategies) {
  cfg.validate_all();
  struct task {
    std::string strategy;
    period_kind period;
    int replication;
  };
  std::vector<task> tasks;
  for (const auto& s : strategies)
    for (period_kind p : cfg.periods)
      for (int r = 0; r < cfg.replications; ++r) tasks.push_back({s, p, r});

  std::vector<suite_episode> results(tasks.size());
  unsigned workers = cfg.threads > 0 ? static_cast<unsigned>(cfg.threads)
                                     : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min<unsigned>(workers, tasks.size());

  if (workers <= 1) {
    for (std::size_t i = 0; i < tasks.size(); ++i)
      results[i] = run_suite_episode(cfg, tasks[i].strategy, tasks[i].period,
                                     tasks[i].replication);
    return results;
  }

  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = next.fetch_add(1); i < tasks.size(); i = next.fetch_add(1))
          results[i] = run_suite_episode(cfg, tasks[i].strategy, tasks[i].period,
                                         tasks[i].replication);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return results;
}

struct ci95 {
  double mean = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  double stddev = 0.0;
  int n = 0;
};

/// Two-sided 97.5% Student-t quantile: exact table through df 30, interpolated
/// through df 120, asymptotic beyond.
inline double t975(int df) {
  static const double exact[31] = {0,     12.706, 4.303, 3.182, 2.776, 2.571, 2.447, 2.365,
                                   2.306, 2.262,  2.228, 2.201, 2.179, 2.160, 2.145, 2.131,
                                   2.120, 2.110,  2.101, 2.093, 2.086, 2.080, 2.074, 2.069,
                                   2.064, 2.060,  2.056, 2.052, 2.048, 2.045, 2.042};
  if (df < 1) throw invalid_input_error("t quantile needs df >= 1");
  if (df <= 30) return exact[df];
  static const std::pair<int, double> marks[] = {
      {30, 2.042}, {40, 2.021}, {50, 2.009}, {60, 2.000}, {80, 1.990}, {100, 1.984}, {120, 1.980}};
  for (std::size_t i = 1; i < std::size(marks); ++i) {
    if (df <= marks[i].first) {
      const auto [d0, t0] = marks[i - 1];
      const auto [d1, t1] = marks[i];
      return t0 + (t1 - t0) * (df - d0) / static_cast<double>(d1 - d0);
    }
  }
  return 1.960;
}

inline ci95 student_ci95(const std::vector<double>& xs) {
  ci95 out;
  out.n = static_cast<int>(xs.size());
  if (xs.empty()) return out;
  double sum = 0.0;
  for (double x : xs) sum += x;
  out.mean = sum / out.n;
  if (out.n < 2) {
    out.lo = out.hi = out.mean;
    return out;
  }
  double ss = 0.0;
  for (double x : xs) ss += (x - out.mean) * (x - out.mean);
  out.stddev = std::sqrt(ss / (out.n - 1));
  const double half = t975(out.n - 1) * out.stddev / std::sqrt(static_cast<double>(out.n));
  out.lo = out.mean - half;
  out.hi = out.mean + half;
  return out;
}

namespace detail {

inline ordered_json ci_json(const ci95& c) {
  ordered_json j;
  j["mean"] = c.mean;
  j["ci95_lo"] = c.lo;
  j["ci95_hi"] = c.hi;
  j["stddev"] = c.stddev;
  j["n"] = c.n;
  return j;
}

inline ordered_json config_json(const experiment_config& cfg) {
  ordered_json j;
  for (const auto& [k, v] : cfg.resolved()) j[k] = v;
  return j;
}

template <class Get>
inline std::vector<double> pluck(const std::vector<const episode_stats*>& rows, Get get) {
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto* r : rows) out.push_back(get(*r));
  return out;
}

}  // namespace detail

/// Per-episode rows as delimiter-separated text, canonical order.
inline std::string episodes_csv(const std::vector<suite_episode>& episodes,
                                const std::vector<pan_cdn_class>& classes) {
  using detail::fmt_double;
  std::string out =
      "strategy,period,seed,replication,videos,decisions,probes,fallbacks,rebuffer_s,"
      "startup_s,watch_s,rebuffer_ratio,qoe,cost,utility,megabits,sequences_scored,"
      "wall_clock_end_s";
  for (const auto& c : classes) out += ",megabits_cdn" + std::to_string(c.id);
  out += "\n";
  for (const auto& ep : episodes) {
    const auto& st = ep.stats;
    out += st.strategy + "," + st.period + "," + std::to_string(st.seed) + "," +
           std::to_string(st.replication) + "," + std::to_string(st.videos) + "," +
           std::to_string(st.decisions) + "," + std::to_string(st.probes) + "," +
           std::to_string(st.fallbacks) + "," + fmt_double(st.rebuffer_s) + "," +
           fmt_double(st.startup_s) + "," + fmt_double(st.watch_s) + "," +
           fmt_double(st.rebuffer_ratio) + "," + fmt_double(st.qoe) + "," + fmt_double(st.cost) +
           "," + fmt_double(st.utility) + "," + fmt_double(st.megabits) + "," +
           std::to_string(st.sequences_scored) + "," + fmt_double(st.wall_clock_end_s);
    for (const auto& c : classes) {
      const auto it = st.megabits_by_cdn.find(c.id);
      out += "," + fmt_double(it == st.megabits_by_cdn.end() ? 0.0 : it->second);
    }
    out += "\n";
  }
  return out;
}

/// Period x strategy aggregation with 95% CIs; cost additionally normalized so
/// the most expensive strategy within each period reads 1.0.
inline ordered_json build_compare_report(const experiment_config& cfg,
                                         const std::vector<std::string>& strategies,
                                         const std::vector<suite_episode>& episodes) {
  ordered_json report;
  report["kind"] = "compare";
  report["config"] = detail::config_json(cfg);
  {
    ordered_json names = ordered_json::array();
    for (const auto& s : strategies) names.push_back(s);
    report["strategies"] = names;
  }
  {
    ordered_json ps = ordered_json::array();
    for (period_kind p : cfg.periods) ps.push_back(to_string(p));
    report["periods"] = ps;
  }

  ordered_json aggregates = ordered_json::array();
  for (period_kind p : cfg.periods) {
    const std::string period = to_string(p);

    std::map<std::string, double> cost_mean;
    double max_cost = 0.0;
    for (const auto& s : strategies) {
      std::vector<const episode_stats*> rows;
      for (const auto& ep : episodes)
        if (ep.stats.strategy == s && ep.stats.period == period) rows.push_back(&ep.stats);
      const auto costs = detail::pluck(rows, [](const episode_stats& r) { return r.cost; });
      const double m = student_ci95(costs).mean;
      cost_mean[s] = m;
      max_cost = std::max(max_cost, m);
    }

    for (const auto& s : strategies) {
      std::vector<const episode_stats*> rows;
      for (const auto& ep : episodes)
        if (ep.stats.strategy == s && ep.stats.period == period) rows.push_back(&ep.stats);

      ordered_json row;
      row["strategy"] = s;
      row["period"] = period;
      row["episodes"] = rows.size();
      row["rebuffer_ratio"] = detail::ci_json(
          student_ci95(detail::pluck(rows, [](const episode_stats& r) { return r.rebuffer_ratio; })));
      row["startup_s"] = detail::ci_json(
          student_ci95(detail::pluck(rows, [](const episode_stats& r) { return r.startup_s; })));
      row["cost"] = detail::ci_json(
          student_ci95(detail::pluck(rows, [](const episode_stats& r) { return r.cost; })));
      row["normalized_cost"] = max_cost > 0 ? cost_mean[s] / max_cost : 0.0;
      row["qoe"] = detail::ci_json(
          student_ci95(detail::pluck(rows, [](const episode_stats& r) { return r.qoe; })));
      row["utility"] = detail::ci_json(
          student_ci95(detail::pluck(rows, [](const episode_stats& r) { return r.utility; })));
      row["sequences_scored_mean"] = student_ci95(detail::pluck(rows, [](const episode_stats& r) {
                                       return static_cast<double>(r.sequences_scored);
                                     })).mean;
      row["probes_mean"] = student_ci95(detail::pluck(rows, [](const episode_stats& r) {
                             return static_cast<double>(r.probes);
                           })).mean;
      int fallbacks = 0;
      for (const auto* r : rows) fallbacks += r->fallbacks;
      row["fallbacks_total"] = fallbacks;
      aggregates.push_back(std::move(row));
    }
  }
  report["aggregates"] = std::move(aggregates);
  return report;
}

/// Wall-clock decision-latency percentiles; kept out of the canonical report so
/// identical inputs keep producing identical summary bytes.
inline ordered_json build_timing_report(const std::vector<std::string>& strategies,
                                        const std::vector<suite_episode>& episodes) {
  ordered_json report;
  report["kind"] = "timing";
  report["note"] = "wall-clock measurements; varies run to run";
  ordered_json rows = ordered_json::array();
  for (const auto& s : strategies) {
    std::vector<double> lat;
    for (const auto& ep : episodes)
      if (ep.stats.strategy == s)
        lat.insert(lat.end(), ep.result.plan_latencies_s.begin(),
                   ep.result.plan_latencies_s.end());
    if (lat.empty()) continue;
    std::sort(lat.begin(), lat.end());
    double sum = 0.0;
    for (double x : lat) sum += x;
    auto pct = [&](double q) {
      const std::size_t idx = std::min(lat.size() - 1,
                                       static_cast<std::size_t>(q * (lat.size() - 1) + 0.5));
      return lat[idx];
    };
    ordered_json row;
    row["strategy"] = s;
    row["decisions"] = lat.size();
    row["mean_ms"] = 1e3 * sum / lat.size();
    row["p50_ms"] = 1e3 * pct(0.50);
    row["p99_ms"] = 1e3 * pct(0.99);
    row["max_ms"] = 1e3 * lat.back();
    rows.push_back(std::move(row));
  }
  report["latency"] = std::move(rows);
  return report;
}

}  // namespace pira
