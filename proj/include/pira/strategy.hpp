#pragma once

#include <algorithm>
#include <chrono>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "pira/planner.hpp"
#include "pira/predictor.hpp"
#include "pira/session.hpp"
#include "pira/types.hpp"

namespace pira {

struct strategy_context {
  session_core& state;
  const media_list& media;
  const std::vector<pan_cdn_class>& classes;
};

enum class action_kind { range, probe };

struct strategy_action {
  action_kind kind = action_kind::range;
  range_decision decision;
  int probe_cdn = 0;
  double probe_megabits = 0.0;
  std::uint64_t sequences_scored = 0;
  bool fallback = false;
  double plan_seconds = 0.0;  // wall time, reporting-only
};

class strategy {
 public:
  virtual ~strategy() = default;
  virtual strategy_action decide(const strategy_context& ctx) = 0;
  virtual void on_feedback(const step_info&) {}
  virtual void on_probe(const probe_info&) {}
  virtual std::string name() const = 0;
};

namespace detail {

class plan_timer {
 public:
  plan_timer() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

inline void record_range_sample(throughput_history& hist, const step_info& info) {
  if (info.megabits > 0 && info.avg_mbps > 0)
    hist.record({info.cdn, info.clock_before + info.download_s, info.avg_mbps});
}

// Cold-start beliefs: one prior per class, or a single value for all of them.
inline std::map<int, double> resolve_priors(const std::vector<pan_cdn_class>& classes,
                                            const std::vector<double>& prior_mbps) {
  if (prior_mbps.empty()) throw invalid_input_error("prior throughput list must not be empty");
  if (prior_mbps.size() != 1 && prior_mbps.size() != classes.size())
    throw invalid_input_error("prior throughput list needs one value or one per class");
  std::map<int, double> out;
  for (std::size_t i = 0; i < classes.size(); ++i) {
    const double p = prior_mbps[prior_mbps.size() == 1 ? 0 : i];
    if (p <= 0) throw invalid_input_error("prior throughput must be positive");
    out[classes[i].id] = p;
  }
  return out;
}

inline double prior_for(const std::map<int, double>& priors, int id) {
  const auto it = priors.find(id);
  if (it == priors.end())
    throw invalid_input_error("no prior throughput for class " + std::to_string(id));
  return it->second;
}

}  // namespace detail

/// Receding-horizon controller: harmonic-mean predictions per class, pruned
/// exhaustive rollout of the shared session dynamics, periodic probes to keep
/// idle classes measurable.
class pira_strategy final : public strategy {
 public:
  pira_strategy(std::vector<pan_cdn_class> classes, session_params prm, planning_config plan_cfg,
                predictor_config pred_cfg, std::vector<double> prior_mbps,
                bool probes_enabled = true)
      : classes_(std::move(classes)),
        prm_(prm),
        plan_cfg_(plan_cfg),
        pred_cfg_(pred_cfg),
        prior_(detail::resolve_priors(classes_, prior_mbps)),
        probes_enabled_(probes_enabled),
        hist_(pred_cfg) {}

  strategy_action decide(const strategy_context& ctx) override {
    detail::plan_timer timer;
    strategy_action act;
    const int head = sequence_head(ctx.state, ctx.media);
    if (head < 0) throw invalid_input_error("decide called with nothing to download");

    // Probe an unmeasured-lately class, but never while playback is fragile.
    if (probes_enabled_ && !ctx.state.startup_pending &&
        ctx.state.buffer_s[ctx.state.viewing] > prm_.qoe.tau_st_s) {
      if (auto target = stalest_due(ctx)) {
        act.kind = action_kind::probe;
        act.probe_cdn = *target;
        act.probe_megabits = pred_cfg_.probe_size_s * ctx.media.videos[head].bitrate_mbps;
        act.plan_seconds = timer.seconds();
        return act;
      }
    }

    predicted_.clear();
    for (const auto& c : classes_)
      predicted_[c.id] = hist_.predict(c.id).value_or(detail::prior_for(prior_, c.id));
    predicted_source source(&predicted_, pred_cfg_.degradation_alpha,
                            pred_cfg_.setup_rtt_mult * pred_cfg_.rtt_s);

    const plan_result pr =
        plan(ctx.state, ctx.media, classes_, predicted_, source, prm_, plan_cfg_);
    act.decision = pr.decision;
    act.sequences_scored = pr.sequences_scored;
    act.fallback = pr.fallback;
    act.plan_seconds = timer.seconds();
    return act;
  }

  void on_feedback(const step_info& info) override { detail::record_range_sample(hist_, info); }
  void on_probe(const probe_info& info) override {
    if (info.megabits > 0 && info.avg_mbps > 0)
      hist_.record({info.cdn, info.clock_before + info.total_s, info.avg_mbps});
  }
  std::string name() const override { return "pira"; }

  const throughput_history& history() const { return hist_; }

 private:
  std::optional<int> stalest_due(const strategy_context& ctx) const {
    std::optional<int> pick;
    double pick_t = 0.0;
    for (const auto& c : classes_) {
      if (!caches_anything_remaining(ctx, c.id)) continue;
      const auto last = hist_.last_sample_time(c.id);
      const double t = last.value_or(-std::numeric_limits<double>::infinity());
      if (ctx.state.clock_s - t <= pred_cfg_.probe_interval_s) continue;
      if (!pick || t < pick_t) {
        pick = c.id;
        pick_t = t;
      }
    }
    return pick;
  }

  bool caches_anything_remaining(const strategy_context& ctx, int cdn) const {
    for (std::size_t i = ctx.state.viewing; i < ctx.media.videos.size(); ++i)
      if (cached_on(ctx.media.videos[i], cdn)) return true;
    return false;
  }

  std::vector<pan_cdn_class> classes_;
  session_params prm_;
  planning_config plan_cfg_;
  predictor_config pred_cfg_;
  std::map<int, double> prior_;
  bool probes_enabled_;
  throughput_history hist_;
  std::map<int, double> predicted_;
};

/// Rule-based baseline: cheapest class whose prediction clears the bitrate by a
/// margin, full-chunk ranges, sticky emergency class after any stall until the
/// buffer recovers.
class production_strategy final : public strategy {
 public:
  production_strategy(std::vector<pan_cdn_class> classes, session_params prm,
                      predictor_config pred_cfg, std::vector<double> prior_mbps,
                      double margin = 1.1, double recovery_buffer_s = 5.0, int emergency_cdn = 1)
      : classes_(std::move(classes)),
        prm_(prm),
        pred_cfg_(pred_cfg),
        prior_(detail::resolve_priors(classes_, prior_mbps)),
        margin_(margin),
        recovery_buffer_s_(recovery_buffer_s),
        emergency_cdn_(emergency_cdn),
        hist_(pred_cfg) {
    if (margin_ <= 0) throw invalid_input_error("margin must be positive");
  }

  strategy_action decide(const strategy_context& ctx) override {
    detail::plan_timer timer;
    const int head = sequence_head(ctx.state, ctx.media);
    if (head < 0) throw invalid_input_error("decide called with nothing to download");
    const video_spec& v = ctx.media.videos[head];

    if (emergency_ && ctx.state.buffer_s[ctx.state.viewing] >= recovery_buffer_s_)
      emergency_ = false;

    int pick = -1;
    if (emergency_ && cached_on(v, emergency_cdn_)) {
      pick = emergency_cdn_;
    } else if (emergency_) {
      pick = highest_predicted(v);
    } else {
      double pick_cost = 0.0;
      for (int id : v.cached_on) {
        const double pred = hist_.predict(id).value_or(detail::prior_for(prior_, id));
        if (pred < margin_ * v.bitrate_mbps) continue;
        const double c = find_class(classes_, id).cost_per_mb;
        if (pick < 0 || c < pick_cost || (c == pick_cost && id < pick)) {
          pick = id;
          pick_cost = c;
        }
      }
      if (pick < 0) pick = highest_predicted(v);
    }

    strategy_action act;
    act.decision = {v.id, pick, v.chunk_s};
    act.plan_seconds = timer.seconds();
    return act;
  }

  void on_feedback(const step_info& info) override {
    detail::record_range_sample(hist_, info);
    if (info.rebuffer_s > 0) emergency_ = true;
  }
  std::string name() const override { return "production"; }

 private:
  int highest_predicted(const video_spec& v) const {
    int pick = -1;
    double best = 0.0;
    for (int id : v.cached_on) {
      const double pred = hist_.predict(id).value_or(detail::prior_for(prior_, id));
      if (pick < 0 || pred > best || (pred == best && id < pick)) {
        pick = id;
        best = pred;
      }
    }
    return pick;
  }

  std::vector<pan_cdn_class> classes_;
  session_params prm_;
  predictor_config pred_cfg_;
  std::map<int, double> prior_;
  double margin_;
  double recovery_buffer_s_;
  int emergency_cdn_;
  bool emergency_ = false;
  throughput_history hist_;
};

/// Everything from one fixed class, full-chunk ranges.
class pure_strategy final : public strategy {
 public:
  explicit pure_strategy(int cdn) : cdn_(cdn) {}

  strategy_action decide(const strategy_context& ctx) override {
    const int head = sequence_head(ctx.state, ctx.media);
    if (head < 0) throw invalid_input_error("decide called with nothing to download");
    const video_spec& v = ctx.media.videos[head];
    if (!cached_on(v, cdn_))
      throw infeasible_strategy_error("video " + v.id + " is not cached on pan-CDN " +
                                      std::to_string(cdn_));
    strategy_action act;
    act.decision = {v.id, cdn_, v.chunk_s};
    return act;
  }
  std::string name() const override { return "pure" + std::to_string(cdn_); }

 private:
  int cdn_;
};

/// Receding-horizon search against the true link model instead of predictions.
/// With the horizon covering the whole episode this is the global optimum.
class oracle_strategy final : public strategy {
 public:
  oracle_strategy(std::vector<pan_cdn_class> classes, session_params prm, planning_config plan_cfg,
                  link_model* link)
      : classes_(std::move(classes)), prm_(prm), plan_cfg_(plan_cfg), link_(link) {
    plan_cfg_.pruning_i = false;
    plan_cfg_.pruning_ii = false;
  }

  strategy_action decide(const strategy_context& ctx) override {
    detail::plan_timer timer;
    link_source source(link_);
    const plan_result pr = plan(ctx.state, ctx.media, classes_, empty_, source, prm_, plan_cfg_);
    strategy_action act;
    act.decision = pr.decision;
    act.sequences_scored = pr.sequences_scored;
    act.fallback = pr.fallback;
    act.plan_seconds = timer.seconds();
    return act;
  }
  std::string name() const override { return "oracle"; }

 private:
  std::vector<pan_cdn_class> classes_;
  session_params prm_;
  planning_config plan_cfg_;
  link_model* link_;
  std::map<int, double> empty_;
};

}  // namespace pira
