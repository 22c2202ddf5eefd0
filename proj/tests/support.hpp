#pragma once

// Shared test helpers: tiny builders, a scripted/random strategy, and an
// independent step-by-step evaluator of the buffer/QoE equations used to
// cross-check the engine's session accounting.

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "pira/pira.hpp"

namespace testsup {

inline pira::video_spec vid(const std::string& id, double duration_s, double bitrate_mbps,
                            double watch_s, std::vector<int> cached = {1, 2, 3, 4},
                            double chunk_s = 4.0) {
  pira::video_spec v;
  v.id = id;
  v.duration_s = duration_s;
  v.bitrate_mbps = bitrate_mbps;
  v.chunk_s = chunk_s;
  v.watch_s = watch_s;
  v.cached_on = std::move(cached);
  return v;
}

inline pira::trace_set const_traces(const std::vector<std::pair<int, double>>& class_mbps,
                                    double duration_s, const std::string& period = "peak") {
  pira::trace_set ts;
  ts.id = "test";
  ts.period = period;
  for (const auto& [cdn, mbps] : class_mbps) {
    pira::throughput_trace tr;
    tr.pan_cdn_id = cdn;
    tr.mbps.assign(static_cast<std::size_t>(duration_s), mbps);
    ts.traces.push_back(std::move(tr));
  }
  return ts;
}

/// Uniformly random feasible decisions; drives micro-episodes where the
/// interesting part is the accounting, not the policy.
class random_strategy final : public pira::strategy {
 public:
  random_strategy(std::uint64_t seed, std::vector<double> ranges = {0.5, 1.0, 2.0, 3.0, 4.0})
      : rng_(seed), ranges_(std::move(ranges)) {}

  pira::strategy_action decide(const pira::strategy_context& ctx) override {
    const int head = pira::sequence_head(ctx.state, ctx.media);
    const auto& v = ctx.media.videos[head];
    pira::strategy_action act;
    act.decision.video_id = v.id;
    act.decision.pan_cdn_id =
        v.cached_on[rng_.uniform_int(static_cast<int>(v.cached_on.size()))];
    act.decision.range_s = ranges_[rng_.uniform_int(static_cast<int>(ranges_.size()))];
    return act;
  }
  std::string name() const override { return "random"; }

 private:
  pira::rng64 rng_;
  std::vector<double> ranges_;
};

/// Plays back a fixed list of (cdn, range) pairs against the download sequence.
class scripted_strategy final : public pira::strategy {
 public:
  explicit scripted_strategy(std::vector<std::pair<int, double>> script)
      : script_(std::move(script)) {}

  pira::strategy_action decide(const pira::strategy_context& ctx) override {
    const int head = pira::sequence_head(ctx.state, ctx.media);
    if (next_ >= script_.size()) throw pira::invalid_input_error("script exhausted");
    pira::strategy_action act;
    act.decision.video_id = ctx.media.videos[head].id;
    act.decision.pan_cdn_id = script_[next_].first;
    act.decision.range_s = script_[next_].second;
    ++next_;
    return act;
  }
  std::string name() const override { return "scripted"; }

 private:
  std::vector<std::pair<int, double>> script_;
  std::size_t next_ = 0;
};

struct micro_metrics {
  std::map<std::string, double> rebuffer_s;
  std::map<std::string, int> rebuffer_events;
  std::map<std::string, double> startup_s;
  std::map<int, double> megabits;
  double cost = 0.0;
  double qoe = 0.0;
  double utility = 0.0;
  double wall_end_s = 0.0;
};

/// Independent evaluation of the buffer/wait/stall/startup/cost/QoE equations
/// over a logged decision sequence. Maps keyed by id, every sum recomputed per
/// step; shares no state-advancing code with the engine.
inline micro_metrics micro_eval(const pira::media_list& m,
                                const std::vector<pira::decision_row>& rows,
                                const std::vector<pira::pan_cdn_class>& classes,
                                const pira::session_params& prm) {
  const double cap = prm.qoe.player_cap_s;
  const double tau = prm.qoe.tau_st_s;
  const double eps = 1e-9;
  const int n = static_cast<int>(m.videos.size());
  auto pos = [](double x) { return x > 0.0 ? x : 0.0; };

  std::map<std::string, double> buf, downloaded;
  for (const auto& v : m.videos) buf[v.id] = downloaded[v.id] = 0.0;

  micro_metrics out;
  int viewing = 0;
  double watch_left = m.videos[0].watch_s;
  auto threshold = [&](int i) { return std::min(tau, m.videos[i].duration_s); };
  auto complete = [&](int i) {
    return downloaded[m.videos[i].id] >= m.videos[i].duration_s - eps;
  };
  bool pending = !complete(0) && buf[m.videos[0].id] < threshold(0) - eps;
  bool charged = false;
  double clock = 0.0;

  auto play_through = [&](double play) {
    while (play > eps && viewing < n) {
      const double take = std::min(play, watch_left);
      watch_left -= take;
      play -= take;
      if (watch_left > eps) break;
      buf[m.videos[viewing].id] = 0.0;
      ++viewing;
      charged = false;
      if (viewing < n) {
        watch_left = m.videos[viewing].watch_s;
        pending = !complete(viewing) && buf[m.videos[viewing].id] < threshold(viewing) - eps;
        if (pending) break;
      } else {
        watch_left = 0.0;
      }
    }
  };

  for (const auto& row : rows) {
    const double T = row.download_s;
    if (row.probe) {
      if (!row.probe_free) out.megabits[row.cdn] += row.megabits;
      play_through(pending ? 0.0 : T);
      clock += T;
      continue;
    }

    const std::string& id = m.videos[row.video].id;
    const std::string& view_id = m.videos[viewing].id;
    const double r = row.range_s;
    const bool current = (row.video == viewing);
    const bool pending_before = pending;
    const double view_buf_before = buf[view_id];

    if (current && pending) {
      if (prm.startup_charge == pira::startup_charge_mode::cumulative || !charged)
        out.startup_s[view_id] += T;
      charged = true;
    } else if (current) {
      const double reb = pos(T - view_buf_before);
      if (reb > 0) {
        out.rebuffer_s[view_id] += reb;
        out.rebuffer_events[view_id] += 1;
      }
    }

    double wait = 0.0;
    if (current) {
      double others = 0.0;
      for (const auto& [vid_id, b] : buf)
        if (vid_id != id) others += b;
      const double inner = pos(buf[id] - T);
      wait = pos(inner + others + r - cap);
      buf[id] = pos(inner + r - wait);
    } else {
      double rest = 0.0;
      for (const auto& [vid_id, b] : buf)
        if (vid_id != id && vid_id != view_id) rest += b;
      const double view_after = pos(buf[view_id] - T);
      wait = pos(buf[id] + r + view_after + rest - cap);
      buf[view_id] = view_after;
      buf[id] = pos(buf[id] + r - wait);
    }

    downloaded[id] += r;
    if (m.videos[row.video].duration_s - downloaded[id] <= eps)
      downloaded[id] = m.videos[row.video].duration_s;
    out.megabits[row.cdn] += row.megabits;

    bool started_now = false;
    if (current && pending &&
        (buf[id] >= threshold(row.video) - eps || complete(row.video))) {
      pending = false;
      started_now = true;
    }

    double play;
    if (pending_before)
      play = started_now ? wait : 0.0;
    else if (current)
      play = std::min(view_buf_before, T) + wait;
    else
      play = T + wait;
    play_through(play);
    clock += T + wait;
  }

  while (viewing < n) {
    clock += watch_left;
    buf[m.videos[viewing].id] = 0.0;
    ++viewing;
    charged = false;
    if (viewing < n) {
      watch_left = m.videos[viewing].watch_s;
      pending = !complete(viewing) && buf[m.videos[viewing].id] < threshold(viewing) - eps;
    }
  }
  out.wall_end_s = clock;

  for (const auto& [cdn, mbit] : out.megabits)
    out.cost += mbit / 8.0 * pira::find_class(classes, cdn).cost_per_mb;
  for (const auto& v : m.videos) {
    const double reb = out.rebuffer_s.count(v.id) ? out.rebuffer_s.at(v.id) : 0.0;
    const double st = out.startup_s.count(v.id) ? out.startup_s.at(v.id) : 0.0;
    out.qoe += 1.0 - prm.qoe.mu1 * reb / v.watch_s - prm.qoe.mu2 * st;
  }
  out.utility = out.qoe - prm.qoe.gamma * out.cost;
  return out;
}

/// Convenience wrapper: run one episode on constant traces with a given strategy.
inline pira::episode_result run_micro(const pira::media_list& m, const pira::trace_set& traces,
                                      pira::strategy& strat, const pira::session_params& prm,
                                      const std::vector<pira::pan_cdn_class>& classes,
                                      pira::link_config lcfg = {}) {
  pira::link_model link(&traces, lcfg);
  pira::sim_config cfg{prm, true, false};
  return pira::run_episode(m, classes, link, strat, cfg);
}

}  // namespace testsup
