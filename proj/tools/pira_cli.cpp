// Experiment harness for the pan-CDN range-selection simulator: runs single
// episodes or seeded suites, compares strategies, sweeps knobs, and generates
// synthetic traces and workloads.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "pira/pira.hpp"

namespace {

namespace fs = std::filesystem;

struct common_flags {
  std::string config_path;
  std::vector<std::string> sets;
  std::string pruning;
  std::string period;
  std::uint64_t seed = 0;
  bool seed_given = false;
  int replications = 0;
  int horizon = 0;
  double gamma = -1.0;
  bool gamma_given = false;
  int threads = -1;
};

void add_common(CLI::App* sub, common_flags& f) {
  sub->add_option("--config", f.config_path, "configuration file (key=value lines)");
  sub->add_option("--set", f.sets, "override a single config key (key=value), repeatable");
  sub->add_option("--pruning", f.pruning, "candidate pruning mode")
      ->check(CLI::IsMember({"on", "off", "i-only", "ii-only"}));
  sub->add_option("--period", f.period, "restrict to one diurnal period")
      ->check(CLI::IsMember({"off-peak", "peak", "evening-peak"}));
  sub->add_option("--seed", f.seed, "base seed for trace/workload generation")
      ->trigger_on_parse()
      ->each([&f](const std::string&) { f.seed_given = true; });
  sub->add_option("--replications", f.replications, "seeded replications per period");
  sub->add_option("--horizon", f.horizon, "planning horizon (ranges ahead)");
  sub->add_option("--gamma", f.gamma, "cost weight in the utility")
      ->trigger_on_parse()
      ->each([&f](const std::string&) { f.gamma_given = true; });
  sub->add_option("--threads", f.threads, "worker threads (0 = hardware)");
}

pira::experiment_config build_config(const common_flags& f) {
  pira::experiment_config cfg;
  if (!f.config_path.empty()) cfg.apply_file(f.config_path);
  for (const auto& kv : f.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos)
      throw pira::invalid_input_error("--set expects key=value, got '" + kv + "'");
    cfg.apply(kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (f.seed_given) cfg.base_seed = f.seed;
  if (f.replications > 0) cfg.replications = f.replications;
  if (!f.period.empty()) cfg.periods = {pira::parse_period(f.period)};
  if (f.horizon > 0) cfg.planner.horizon = f.horizon;
  if (f.gamma_given) cfg.session.qoe.gamma = f.gamma;
  if (f.threads >= 0) cfg.threads = f.threads;
  if (f.pruning == "on") {
    cfg.planner.pruning_i = cfg.planner.pruning_ii = true;
  } else if (f.pruning == "off") {
    cfg.planner.pruning_i = cfg.planner.pruning_ii = false;
  } else if (f.pruning == "i-only") {
    cfg.planner.pruning_i = true;
    cfg.planner.pruning_ii = false;
  } else if (f.pruning == "ii-only") {
    cfg.planner.pruning_i = false;
    cfg.planner.pruning_ii = true;
  }
  cfg.validate_all();
  return cfg;
}

void write_file(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw pira::invalid_input_error("cannot write " + path.string());
  out << content;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw pira::not_found_error("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

const char* event_name(pira::event_kind k) {
  switch (k) {
    case pira::event_kind::range_complete: return "range-complete";
    case pira::event_kind::probe_complete: return "probe-complete";
    case pira::event_kind::startup_complete: return "startup-complete";
    case pira::event_kind::rebuffer_end: return "rebuffer-end";
    case pira::event_kind::swipe: return "swipe";
    case pira::event_kind::rebuffer_start: return "rebuffer-start";
  }
  return "?";
}

std::string decisions_csv(const pira::episode_result& ep) {
  using pira::detail::fmt_double;
  std::string out =
      "seq,t_s,probe,probe_free,video_id,video,viewing,cdn,range_s,megabits,download_s,"
      "setup_s,avg_mbps,pooled,wait_s,viewing_buffer_before,startup_pending_before,"
      "startup_charged_before,rebuffer_s,startup_s,fallback,sequences_scored\n";
  for (const auto& r : ep.decisions) {
    out += std::to_string(r.seq) + "," + fmt_double(r.t_s) + "," + (r.probe ? "1" : "0") + "," +
           (r.probe_free ? "1" : "0") + "," + r.video_id + "," + std::to_string(r.video) + "," +
           std::to_string(r.viewing) + "," + std::to_string(r.cdn) + "," + fmt_double(r.range_s) +
           "," + fmt_double(r.megabits) + "," + fmt_double(r.download_s) + "," +
           fmt_double(r.setup_s) + "," + fmt_double(r.avg_mbps) + "," + (r.pooled ? "1" : "0") +
           "," + fmt_double(r.wait_s) + "," + fmt_double(r.viewing_buffer_before) + "," +
           (r.startup_pending_before ? "1" : "0") + "," + (r.startup_charged_before ? "1" : "0") +
           "," + fmt_double(r.rebuffer_s) + "," + fmt_double(r.startup_s) + "," +
           (r.fallback ? "1" : "0") + "," + std::to_string(r.sequences_scored) + "\n";
  }
  return out;
}

std::string events_csv(const pira::episode_result& ep) {
  std::string out = "t_s,kind,video\n";
  for (const auto& e : ep.events)
    out += pira::detail::fmt_double(e.t_s) + "," + event_name(e.kind) + "," +
           std::to_string(e.video) + "\n";
  return out;
}

void verify_replayable(const std::vector<pira::suite_episode>& episodes,
                       const pira::experiment_config& cfg) {
  for (const auto& ep : episodes) {
    std::string why;
    if (!pira::replay_check(ep.result, ep.media, cfg.classes, cfg.session, &why))
      throw pira::error("internal consistency failure: episode (" + ep.stats.strategy + ", " +
                        ep.stats.period + ", seed " + std::to_string(ep.stats.seed) +
                        ") failed replay: " + why);
  }
}

void print_aggregate_table(const pira::ordered_json& report) {
  std::printf("%-12s %-13s %10s %12s %10s %10s\n", "strategy", "period", "rebuf", "cost(norm)",
              "qoe", "utility");
  for (const auto& row : report.at("aggregates")) {
    std::printf("%-12s %-13s %10.4f %6.3f(%4.2f) %10.3f %10.3f\n",
                row.at("strategy").get<std::string>().c_str(),
                row.at("period").get<std::string>().c_str(),
                row.at("rebuffer_ratio").at("mean").get<double>(),
                row.at("cost").at("mean").get<double>(),
                row.at("normalized_cost").get<double>(), row.at("qoe").at("mean").get<double>(),
                row.at("utility").at("mean").get<double>());
  }
}

int cmd_simulate(const common_flags& flags, const std::string& strategy,
                 const std::string& traces_path, const std::string& workload_path,
                 const std::string& out_dir) {
  pira::experiment_config cfg = build_config(flags);
  std::vector<pira::suite_episode> episodes;

  if (!traces_path.empty() || !workload_path.empty()) {
    if (traces_path.empty() || workload_path.empty())
      throw pira::invalid_input_error("--traces and --workload must be given together");
    const pira::trace_set traces = pira::parse_trace_set(read_file(traces_path));
    const pira::media_list media = pira::parse_workload(read_file(workload_path));
    pira::link_model link(&traces, cfg.link);
    auto strat = pira::make_strategy(strategy, cfg, &link);
    pira::sim_config sim{cfg.session, true, cfg.probe_cost_free};
    pira::suite_episode ep;
    ep.media = media;
    ep.result = pira::run_episode(media, cfg.classes, link, *strat, sim);
    ep.stats = pira::summarize_episode(strategy, traces.period, 0, 0, ep.result, media);
    episodes.push_back(std::move(ep));
  } else {
    episodes = pira::run_suite(cfg, {strategy});
  }
  verify_replayable(episodes, cfg);

  pira::ordered_json report;
  if (traces_path.empty()) {
    report = pira::build_compare_report(cfg, {strategy}, episodes);
    report["kind"] = "simulate";
  } else {
    report["kind"] = "simulate";
    report["config"] = pira::detail::config_json(cfg);
    report["traces"] = traces_path;
    report["workload"] = workload_path;
    pira::ordered_json row;
    const auto& st = episodes[0].stats;
    row["strategy"] = st.strategy;
    row["period"] = st.period;
    row["rebuffer_ratio"] = st.rebuffer_ratio;
    row["rebuffer_s"] = st.rebuffer_s;
    row["startup_s"] = st.startup_s;
    row["watch_s"] = st.watch_s;
    row["qoe"] = st.qoe;
    row["cost"] = st.cost;
    row["utility"] = st.utility;
    row["megabits"] = st.megabits;
    row["decisions"] = st.decisions;
    row["probes"] = st.probes;
    row["sequences_scored"] = st.sequences_scored;
    report["episode"] = std::move(row);
  }

  write_file(fs::path(out_dir) / "summary.json", report.dump(2) + "\n");
  write_file(fs::path(out_dir) / "episodes.csv", pira::episodes_csv(episodes, cfg.classes));
  write_file(fs::path(out_dir) / "timing.json",
             pira::build_timing_report({strategy}, episodes).dump(2) + "\n");
  if (episodes.size() == 1) {
    write_file(fs::path(out_dir) / "decisions.csv", decisions_csv(episodes[0].result));
    write_file(fs::path(out_dir) / "events.csv", events_csv(episodes[0].result));
  }

  if (report.contains("aggregates")) {
    print_aggregate_table(report);
  } else {
    const auto& st = episodes[0].stats;
    std::printf("%s on %s: rebuffer_ratio=%.4f startup=%.3fs cost=%.4f qoe=%.3f utility=%.3f\n",
                st.strategy.c_str(), st.period.c_str(), st.rebuffer_ratio, st.startup_s, st.cost,
                st.qoe, st.utility);
  }
  std::printf("wrote %s\n", (fs::path(out_dir) / "summary.json").string().c_str());
  return 0;
}

int cmd_compare(const common_flags& flags, const std::string& strategies_csv,
                const std::string& out_dir) {
  pira::experiment_config cfg = build_config(flags);
  std::vector<std::string> strategies;
  if (strategies_csv.empty()) {
    strategies = {"pira", "production", "oracle"};
    for (const auto& c : cfg.classes) strategies.push_back("pure" + std::to_string(c.id));
  } else {
    for (const auto& s : pira::detail::split(strategies_csv, ','))
      strategies.push_back(pira::detail::trim(s));
  }

  const auto episodes = pira::run_suite(cfg, strategies);
  verify_replayable(episodes, cfg);
  const auto report = pira::build_compare_report(cfg, strategies, episodes);

  write_file(fs::path(out_dir) / "summary.json", report.dump(2) + "\n");
  write_file(fs::path(out_dir) / "episodes.csv", pira::episodes_csv(episodes, cfg.classes));
  write_file(fs::path(out_dir) / "timing.json",
             pira::build_timing_report(strategies, episodes).dump(2) + "\n");

  print_aggregate_table(report);
  std::printf("wrote %s\n", (fs::path(out_dir) / "summary.json").string().c_str());
  return 0;
}

int cmd_sweep(const common_flags& flags, const std::string& axis, const std::string& values_csv,
              const std::string& strategy, const std::string& out_dir) {
  if (axis != "gamma" && axis != "horizon")
    throw pira::invalid_input_error("sweep axis must be gamma or horizon");
  if (values_csv.empty()) throw pira::invalid_input_error("sweep needs --values");

  std::string csv =
      "axis,value,utility_mean,utility_ci95_lo,utility_ci95_hi,normalized_performance,"
      "rebuffer_ratio_mean,cost_mean,sequences_scored_total\n";
  std::vector<double> util_means;
  std::vector<pira::ordered_json> rows;
  pira::ordered_json timing = pira::ordered_json::array();

  for (const auto& raw : pira::detail::split(values_csv, ',')) {
    const std::string vs = pira::detail::trim(raw);
    pira::experiment_config cfg = build_config(flags);
    if (axis == "gamma")
      cfg.session.qoe.gamma = pira::detail::cfg_double("gamma", vs);
    else
      cfg.planner.horizon = pira::detail::cfg_int("horizon", vs);
    cfg.validate_all();

    const auto episodes = pira::run_suite(cfg, {strategy});
    verify_replayable(episodes, cfg);

    std::vector<double> utils, rebufs, costs;
    std::uint64_t scored = 0;
    for (const auto& ep : episodes) {
      utils.push_back(ep.stats.utility);
      rebufs.push_back(ep.stats.rebuffer_ratio);
      costs.push_back(ep.stats.cost);
      scored += ep.stats.sequences_scored;
    }
    const auto u = pira::student_ci95(utils);
    util_means.push_back(u.mean);

    pira::ordered_json row;
    row["axis"] = axis;
    row["value"] = vs;
    row["episodes"] = episodes.size();
    row["utility"] = pira::detail::ci_json(u);
    row["rebuffer_ratio_mean"] = pira::student_ci95(rebufs).mean;
    row["cost_mean"] = pira::student_ci95(costs).mean;
    row["sequences_scored_total"] = scored;
    rows.push_back(std::move(row));
    timing.push_back(pira::build_timing_report({strategy}, episodes));
  }

  double best = 0.0;
  for (double m : util_means) best = std::max(best, std::abs(m));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const double norm = best > 0 ? util_means[i] / best : 0.0;
    rows[i]["normalized_performance"] = norm;
    const auto& u = rows[i]["utility"];
    csv += axis + "," + rows[i]["value"].get<std::string>() + "," +
           pira::detail::fmt_double(u["mean"].get<double>()) + "," +
           pira::detail::fmt_double(u["ci95_lo"].get<double>()) + "," +
           pira::detail::fmt_double(u["ci95_hi"].get<double>()) + "," +
           pira::detail::fmt_double(norm) + "," +
           pira::detail::fmt_double(rows[i]["rebuffer_ratio_mean"].get<double>()) + "," +
           pira::detail::fmt_double(rows[i]["cost_mean"].get<double>()) + "," +
           std::to_string(rows[i]["sequences_scored_total"].get<std::uint64_t>()) + "\n";
  }

  pira::experiment_config base_cfg = build_config(flags);
  pira::ordered_json report;
  report["kind"] = "sweep";
  report["axis"] = axis;
  report["strategy"] = strategy;
  report["config"] = pira::detail::config_json(base_cfg);
  report["rows"] = pira::ordered_json::array();
  for (auto& r : rows) report["rows"].push_back(std::move(r));

  write_file(fs::path(out_dir) / "sweep.json", report.dump(2) + "\n");
  write_file(fs::path(out_dir) / "sweep.csv", csv);
  pira::ordered_json tj;
  tj["kind"] = "timing";
  tj["per_value"] = std::move(timing);
  write_file(fs::path(out_dir) / "timing.json", tj.dump(2) + "\n");

  for (const auto& r : report["rows"])
    std::printf("%s=%-8s utility=%8.3f norm=%6.3f scored=%llu\n", axis.c_str(),
                r["value"].get<std::string>().c_str(), r["utility"]["mean"].get<double>(),
                r["normalized_performance"].get<double>(),
                static_cast<unsigned long long>(r["sequences_scored_total"].get<std::uint64_t>()));
  std::printf("wrote %s\n", (fs::path(out_dir) / "sweep.json").string().c_str());
  return 0;
}

int cmd_gen_traces(const common_flags& flags, const std::string& out_path) {
  pira::experiment_config cfg = build_config(flags);
  for (pira::period_kind p : cfg.periods) {
    const auto ts = pira::synthesize_traces(cfg.traces, p, cfg.base_seed);
    fs::path path = out_path;
    if (cfg.periods.size() > 1)
      path = fs::path(out_path) / ("traces-" + pira::to_string(p) + ".csv");
    write_file(path, pira::serialize(ts));
    std::printf("wrote %s\n", path.string().c_str());
  }
  return 0;
}

int cmd_gen_workload(const common_flags& flags, const std::string& out_path) {
  pira::experiment_config cfg = build_config(flags);
  const auto media = pira::generate_workload(cfg.workload, cfg.base_seed);
  write_file(out_path, pira::serialize(media));
  std::printf("wrote %s\n", out_path.c_str());
  return 0;
}

int cmd_validate(const common_flags& flags, const std::string& traces_path,
                 const std::string& workload_path) {
  pira::experiment_config cfg = build_config(flags);  // applies + validates config/sets
  (void)cfg;
  if (!flags.config_path.empty()) std::printf("config %s: ok\n", flags.config_path.c_str());
  if (!traces_path.empty()) {
    const auto ts = pira::parse_trace_set(read_file(traces_path));
    const double dur = ts.traces.empty() ? 0.0 : ts.traces[0].duration_s();
    std::printf("traces %s: ok (%zu classes, %s s, period %s)\n", traces_path.c_str(),
                ts.traces.size(), pira::detail::fmt_double(dur).c_str(), ts.period.c_str());
  }
  if (!workload_path.empty()) {
    const auto media = pira::parse_workload(read_file(workload_path));
    std::printf("workload %s: ok (%zu videos)\n", workload_path.c_str(), media.videos.size());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pan-CDN range-selection simulator and strategy benchmark"};
  app.require_subcommand(1);

  common_flags flags;
  std::string strategy = "pira";
  std::string strategies_csv;
  std::string traces_path, workload_path;
  std::string out_dir;
  std::string axis, values_csv;
  std::string out_path;

  auto* simulate = app.add_subcommand("simulate", "run one strategy over a seeded suite or files");
  add_common(simulate, flags);
  simulate->add_option("--strategy", strategy, "pira, production, oracle, or pure<id>");
  simulate->add_option("--traces", traces_path, "trace file (single-episode mode)");
  simulate->add_option("--workload", workload_path, "workload file (single-episode mode)");
  simulate->add_option("--out", out_dir, "output directory")->default_val("out-simulate");

  auto* compare = app.add_subcommand("compare", "benchmark strategies with confidence intervals");
  add_common(compare, flags);
  compare->add_option("--strategies", strategies_csv,
                      "comma-separated list (default: pira,production,oracle,pure<each class>)");
  compare->add_option("--out", out_dir, "output directory")->default_val("out-compare");

  auto* sweep = app.add_subcommand("sweep", "vary gamma or horizon and track performance");
  add_common(sweep, flags);
  sweep->add_option("--axis", axis, "gamma or horizon")->required();
  sweep->add_option("--values", values_csv, "comma-separated values")->required();
  sweep->add_option("--strategy", strategy, "strategy to sweep");
  sweep->add_option("--out", out_dir, "output directory")->default_val("out-sweep");

  auto* gen_traces = app.add_subcommand("gen-traces", "write synthetic diurnal traces");
  add_common(gen_traces, flags);
  gen_traces->add_option("--out", out_path, "output file (or directory for multiple periods)")
      ->required();

  auto* gen_workload = app.add_subcommand("gen-workload", "write a synthetic media list");
  add_common(gen_workload, flags);
  gen_workload->add_option("--out", out_path, "output file")->required();

  auto* validate = app.add_subcommand("validate", "check config/trace/workload files");
  add_common(validate, flags);
  validate->add_option("--traces", traces_path, "trace file to check");
  validate->add_option("--workload", workload_path, "workload file to check");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (simulate->parsed())
      return cmd_simulate(flags, strategy, traces_path, workload_path, out_dir);
    if (compare->parsed()) return cmd_compare(flags, strategies_csv, out_dir);
    if (sweep->parsed()) return cmd_sweep(flags, axis, values_csv, strategy, out_dir);
    if (gen_traces->parsed()) return cmd_gen_traces(flags, out_path);
    if (gen_workload->parsed()) return cmd_gen_workload(flags, out_path);
    if (validate->parsed()) return cmd_validate(flags, traces_path, workload_path);
  } catch (const pira::infeasible_strategy_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 1;
}
