#pragma once

#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "pira/planner.hpp"
#include "pira/predictor.hpp"
#include "pira/session.hpp"
#include "pira/synth.hpp"
#include "pira/trace.hpp"
#include "pira/types.hpp"

namespace pira {

namespace detail {

inline std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

inline double cfg_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw invalid_input_error("key '" + key + "': '" + v + "' is not a number");
  }
}

inline int cfg_int(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const long n = std::stol(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return static_cast<int>(n);
  } catch (const std::exception&) {
    throw invalid_input_error("key '" + key + "': '" + v + "' is not an integer");
  }
}

inline std::uint64_t cfg_u64(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const unsigned long long n = std::stoull(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return n;
  } catch (const std::exception&) {
    throw invalid_input_error("key '" + key + "': '" + v + "' is not a nonnegative integer");
  }
}

inline bool cfg_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "on" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "off" || v == "0" || v == "no") return false;
  throw invalid_input_error("key '" + key + "': '" + v + "' is not a boolean");
}

inline std::vector<double> cfg_doubles(const std::string& key, const std::string& v) {
  std::vector<double> out;
  for (const auto& part : split(v, ',')) out.push_back(cfg_double(key, trim(part)));
  if (out.empty()) throw invalid_input_error("key '" + key + "': empty list");
  return out;
}

inline std::vector<int> cfg_ints(const std::string& key, const std::string& v) {
  std::vector<int> out;
  for (const auto& part : split(v, ',')) out.push_back(cfg_int(key, trim(part)));
  if (out.empty()) throw invalid_input_error("key '" + key + "': empty list");
  return out;
}

inline std::string fmt_doubles(const std::vector<double>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ",";
    out += fmt_double(xs[i]);
  }
  return out;
}

inline std::string fmt_ints(const std::vector<int>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(xs[i]);
  }
  return out;
}

}  // namespace detail

inline std::vector<pan_cdn_class> default_classes() {
  return {{1, "pan-CDN1", 0.09}, {2, "pan-CDN2", 0.048}, {3, "pan-CDN3", 0.038},
          {4, "pan-CDN4", 0.028}};
}

/// Whole-experiment configuration: flat dotted keys, layered defaults <- file
/// <- command-line overrides. Unknown keys are hard errors.
struct experiment_config {
  std::vector<pan_cdn_class> classes = default_classes();
  session_params session;
  planning_config planner;
  predictor_config predictor;
  link_config link;
  synth_config traces;
  workload_config workload;

  // Cold-start predictions per class (the measured long-run means); a single
  // value broadcasts to every class.
  std::vector<double> prior_mbps = {25.0, 22.0, 18.0, 14.0};
  bool pira_probes = true;
  double production_margin = 1.1;
  double production_recovery_s = 5.0;
  int production_emergency_cdn = 1;

  int replications = 50;
  std::uint64_t base_seed = 1;
  std::vector<period_kind> periods = all_periods();
  int threads = 1;
  bool probe_cost_free = false;

  void apply(const std::string& key, const std::string& value);
  void apply_line(const std::string& line, std::size_t line_no);
  void apply_text(const std::string& text);
  void apply_file(const std::string& path);
  void validate_all() const;
  std::vector<std::pair<std::string, std::string>> resolved() const;
};

inline void experiment_config::apply(const std::string& key, const std::string& value) {
  using namespace detail;
  const std::string v = trim(value);

  if (key == "classes.ids") {
    const auto ids = cfg_ints(key, v);
    std::vector<pan_cdn_class> next;
    for (std::size_t i = 0; i < ids.size(); ++i) {
      const double cost = i < classes.size() ? classes[i].cost_per_mb : 0.01;
      next.push_back({ids[i], "pan-CDN" + std::to_string(ids[i]), cost});
    }
    classes = next;
    traces.cdn_ids = ids;
    workload.cdn_ids = ids;
  } else if (key == "classes.cost_per_mb") {
    const auto costs = cfg_doubles(key, v);
    if (costs.size() != classes.size())
      throw invalid_input_error("key '" + key + "': expected " + std::to_string(classes.size()) +
                                " values");
    for (std::size_t i = 0; i < costs.size(); ++i) classes[i].cost_per_mb = costs[i];
  } else if (key == "qoe.mu1") {
    session.qoe.mu1 = cfg_double(key, v);
  } else if (key == "qoe.mu2") {
    session.qoe.mu2 = cfg_double(key, v);
  } else if (key == "qoe.tau_st_s") {
    session.qoe.tau_st_s = cfg_double(key, v);
  } else if (key == "qoe.player_cap_s") {
    session.qoe.player_cap_s = cfg_double(key, v);
  } else if (key == "qoe.gamma") {
    session.qoe.gamma = cfg_double(key, v);
  } else if (key == "session.startup_charge") {
    if (v == "once")
      session.startup_charge = startup_charge_mode::once;
    else if (v == "cumulative")
      session.startup_charge = startup_charge_mode::cumulative;
    else
      throw invalid_input_error("key '" + key + "': expected once or cumulative");
  } else if (key == "planner.horizon") {
    planner.horizon = cfg_int(key, v);
  } else if (key == "planner.ranges_s") {
    planner.candidate_ranges_s = cfg_doubles(key, v);
  } else if (key == "planner.pruning_i") {
    planner.pruning_i = cfg_bool(key, v);
  } else if (key == "planner.pruning_ii") {
    planner.pruning_ii = cfg_bool(key, v);
  } else if (key == "planner.range_steps") {
    std::vector<std::pair<double, double>> steps;
    for (const auto& part : split(v, ',')) {
      const auto kv = split(trim(part), ':');
      if (kv.size() != 2)
        throw invalid_input_error("key '" + key + "': expected ratio:range pairs");
      steps.emplace_back(cfg_double(key, trim(kv[0])), cfg_double(key, trim(kv[1])));
    }
    planner.range_steps = steps;
  } else if (key == "predictor.window") {
    predictor.window = cfg_int(key, v);
  } else if (key == "predictor.degradation_alpha") {
    predictor.degradation_alpha = cfg_double(key, v);
    link.degradation_alpha = predictor.degradation_alpha;
  } else if (key == "predictor.setup_rtt_mult") {
    predictor.setup_rtt_mult = cfg_double(key, v);
    link.setup_rtt_mult = predictor.setup_rtt_mult;
  } else if (key == "predictor.rtt_s") {
    predictor.rtt_s = cfg_double(key, v);
    link.rtt_s = predictor.rtt_s;
  } else if (key == "predictor.probe_interval_s") {
    predictor.probe_interval_s = cfg_double(key, v);
  } else if (key == "predictor.probe_size_s") {
    predictor.probe_size_s = cfg_double(key, v);
  } else if (key == "link.pool_idle_timeout_s") {
    link.pool_idle_timeout_s = cfg_double(key, v);
  } else if (key == "pira.prior_mbps") {
    prior_mbps = cfg_doubles(key, v);
  } else if (key == "pira.probes") {
    pira_probes = cfg_bool(key, v);
  } else if (key == "production.margin") {
    production_margin = cfg_double(key, v);
  } else if (key == "production.recovery_buffer_s") {
    production_recovery_s = cfg_double(key, v);
  } else if (key == "production.emergency_cdn") {
    production_emergency_cdn = cfg_int(key, v);
  } else if (key == "traces.mean_mbps") {
    traces.mean_mbps = cfg_doubles(key, v);
  } else if (key == "traces.sigma") {
    traces.sigma = cfg_double(key, v);
  } else if (key == "traces.ar") {
    traces.ar = cfg_double(key, v);
  } else if (key == "traces.duration_s") {
    traces.duration_s = cfg_double(key, v);
  } else if (key == "traces.mult.off-peak") {
    traces.period_mult[period_kind::off_peak] = cfg_doubles(key, v);
  } else if (key == "traces.mult.peak") {
    traces.period_mult[period_kind::peak] = cfg_doubles(key, v);
  } else if (key == "traces.mult.evening-peak") {
    traces.period_mult[period_kind::evening_peak] = cfg_doubles(key, v);
  } else if (key == "workload.videos") {
    workload.videos = cfg_int(key, v);
  } else if (key == "workload.short_fraction") {
    workload.short_fraction = cfg_double(key, v);
  } else if (key == "workload.short_min_s") {
    workload.short_min_s = cfg_double(key, v);
  } else if (key == "workload.short_max_s") {
    workload.short_max_s = cfg_double(key, v);
  } else if (key == "workload.long_min_s") {
    workload.long_min_s = cfg_double(key, v);
  } else if (key == "workload.long_max_s") {
    workload.long_max_s = cfg_double(key, v);
  } else if (key == "workload.bitrates_mbps") {
    workload.bitrates_mbps = cfg_doubles(key, v);
  } else if (key == "workload.watch_min_s") {
    workload.watch_min_s = cfg_double(key, v);
  } else if (key == "workload.watch_max_s") {
    workload.watch_max_s = cfg_double(key, v);
  } else if (key == "workload.cache_prob") {
    workload.cache_prob = cfg_doubles(key, v);
  } else if (key == "workload.chunk_s") {
    workload.chunk_s = cfg_double(key, v);
  } else if (key == "suite.replications") {
    replications = cfg_int(key, v);
  } else if (key == "suite.base_seed") {
    base_seed = cfg_u64(key, v);
  } else if (key == "suite.periods") {
    std::vector<period_kind> ps;
    for (const auto& part : split(v, ',')) ps.push_back(parse_period(trim(part)));
    periods = ps;
  } else if (key == "suite.threads") {
    threads = cfg_int(key, v);
  } else if (key == "sim.probe_cost_free") {
    probe_cost_free = cfg_bool(key, v);
  } else {
    throw invalid_input_error("unknown config key '" + key + "'");
  }
}

inline void experiment_config::apply_line(const std::string& raw, std::size_t line_no) {
  std::string line = raw;
  const auto hash = line.find('#');
  if (hash != std::string::npos) line.resize(hash);
  line = detail::trim(line);
  if (line.empty()) return;
  const auto eq = line.find('=');
  if (eq == std::string::npos) throw parse_error(line_no, "expected key=value, got '" + line + "'");
  const std::string key = detail::trim(line.substr(0, eq));
  const std::string value = detail::trim(line.substr(eq + 1));
  if (key.empty()) throw parse_error(line_no, "empty key");
  try {
    apply(key, value);
  } catch (const invalid_input_error& e) {
    throw parse_error(line_no, e.what());
  }
}

inline void experiment_config::apply_text(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) apply_line(line, ++line_no);
}

inline void experiment_config::apply_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw not_found_error("cannot open config file " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  apply_text(buf.str());
}

inline void experiment_config::validate_all() const {
  if (classes.empty()) throw invalid_input_error("no pan-CDN classes configured");
  for (const auto& c : classes)
    if (c.cost_per_mb < 0) throw invalid_input_error("class costs must be nonnegative");
  validate(session.qoe);
  validate(planner);
  validate(traces);
  validate(workload);
  if (traces.cdn_ids.size() != classes.size() || workload.cdn_ids.size() != classes.size())
    throw invalid_input_error("trace/workload class lists must match classes.ids");
  if (predictor.window < 1) throw invalid_input_error("predictor window must be >= 1");
  if (predictor.rtt_s < 0 || predictor.setup_rtt_mult < 0)
    throw invalid_input_error("setup latency must be nonnegative");
  if (predictor.degradation_alpha <= 0 || predictor.degradation_alpha > 1)
    throw invalid_input_error("degradation alpha must lie in (0,1]");
  if (predictor.probe_interval_s <= 0 || predictor.probe_size_s <= 0)
    throw invalid_input_error("probe interval and size must be positive");
  if (prior_mbps.empty() || (prior_mbps.size() != 1 && prior_mbps.size() != classes.size()))
    throw invalid_input_error("pira.prior_mbps needs one value or one per class");
  for (double p : prior_mbps)
    if (p <= 0) throw invalid_input_error("pira.prior_mbps must be positive");
  if (production_margin <= 0) throw invalid_input_error("production.margin must be positive");
  if (production_recovery_s < 0)
    throw invalid_input_error("production.recovery_buffer_s must be nonnegative");
  bool emergency_known = false;
  for (const auto& c : classes) emergency_known |= (c.id == production_emergency_cdn);
  if (!emergency_known)
    throw invalid_input_error("production.emergency_cdn is not a configured class");
  if (replications < 1) throw invalid_input_error("suite.replications must be >= 1");
  if (periods.empty()) throw invalid_input_error("suite.periods must not be empty");
  if (threads < 0) throw invalid_input_error("suite.threads must be >= 0");
  if (link.pool_idle_timeout_s <= 0)
    throw invalid_input_error("link.pool_idle_timeout_s must be positive");
}

inline std::vector<std::pair<std::string, std::string>> experiment_config::resolved() const {
  using namespace detail;
  std::vector<std::pair<std::string, std::string>> out;
  auto put = [&](const std::string& k, const std::string& v) { out.emplace_back(k, v); };

  std::vector<int> ids;
  std::vector<double> costs;
  for (const auto& c : classes) {
    ids.push_back(c.id);
    costs.push_back(c.cost_per_mb);
  }
  put("classes.ids", fmt_ints(ids));
  put("classes.cost_per_mb", fmt_doubles(costs));
  put("qoe.mu1", fmt_double(session.qoe.mu1));
  put("qoe.mu2", fmt_double(session.qoe.mu2));
  put("qoe.tau_st_s", fmt_double(session.qoe.tau_st_s));
  put("qoe.player_cap_s", fmt_double(session.qoe.player_cap_s));
  put("qoe.gamma", fmt_double(session.qoe.gamma));
  put("session.startup_charge",
      session.startup_charge == startup_charge_mode::once ? "once" : "cumulative");
  put("planner.horizon", std::to_string(planner.horizon));
  put("planner.ranges_s", fmt_doubles(planner.candidate_ranges_s));
  put("planner.pruning_i", planner.pruning_i ? "true" : "false");
  put("planner.pruning_ii", planner.pruning_ii ? "true" : "false");
  {
    std::string steps;
    for (std::size_t i = 0; i < planner.range_steps.size(); ++i) {
      if (i) steps += ",";
      steps += fmt_double(planner.range_steps[i].first) + ":" +
               fmt_double(planner.range_steps[i].second);
    }
    put("planner.range_steps", steps);
  }
  put("predictor.window", std::to_string(predictor.window));
  put("predictor.degradation_alpha", fmt_double(predictor.degradation_alpha));
  put("predictor.setup_rtt_mult", fmt_double(predictor.setup_rtt_mult));
  put("predictor.rtt_s", fmt_double(predictor.rtt_s));
  put("predictor.probe_interval_s", fmt_double(predictor.probe_interval_s));
  put("predictor.probe_size_s", fmt_double(predictor.probe_size_s));
  put("link.pool_idle_timeout_s", fmt_double(link.pool_idle_timeout_s));
  put("pira.prior_mbps", fmt_doubles(prior_mbps));
  put("pira.probes", pira_probes ? "true" : "false");
  put("production.margin", fmt_double(production_margin));
  put("production.recovery_buffer_s", fmt_double(production_recovery_s));
  put("production.emergency_cdn", std::to_string(production_emergency_cdn));
  put("traces.mean_mbps", fmt_doubles(traces.mean_mbps));
  put("traces.sigma", fmt_double(traces.sigma));
  put("traces.ar", fmt_double(traces.ar));
  put("traces.duration_s", fmt_double(traces.duration_s));
  for (period_kind p : all_periods()) {
    auto it = traces.period_mult.find(p);
    if (it != traces.period_mult.end())
      put("traces.mult." + to_string(p), fmt_doubles(it->second));
  }
  put("workload.videos", std::to_string(workload.videos));
  put("workload.short_fraction", fmt_double(workload.short_fraction));
  put("workload.short_min_s", fmt_double(workload.short_min_s));
  put("workload.short_max_s", fmt_double(workload.short_max_s));
  put("workload.long_min_s", fmt_double(workload.long_min_s));
  put("workload.long_max_s", fmt_double(workload.long_max_s));
  put("workload.bitrates_mbps", fmt_doubles(workload.bitrates_mbps));
  put("workload.watch_min_s", fmt_double(workload.watch_min_s));
  put("workload.watch_max_s", fmt_double(workload.watch_max_s));
  put("workload.cache_prob", fmt_doubles(workload.cache_prob));
  put("workload.chunk_s", fmt_double(workload.chunk_s));
  put("suite.replications", std::to_string(replications));
  put("suite.base_seed", std::to_string(base_seed));
  {
    std::string ps;
    for (std::size_t i = 0; i < periods.size(); ++i) {
      if (i) ps += ",";
      ps += to_string(periods[i]);
    }
    put("suite.periods", ps);
  }
  put("suite.threads", std::to_string(threads));
  put("sim.probe_cost_free", probe_cost_free ? "true" : "false");
  return out;
}

}  // namespace pira
