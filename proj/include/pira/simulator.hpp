#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "pira/link.hpp"
#include "pira/qoe.hpp"
#include "pira/session.hpp"
#include "pira/strategy.hpp"
#include "pira/types.hpp"

namespace pira {

struct sim_config {
  session_params prm;
  bool collect_events = true;
  bool probe_cost_free = false;  // probes bill traffic unless set
};

/// One executed decision, with everything needed to re-derive its charges.
struct decision_row {
  int seq = 0;
  double t_s = 0.0;  // session clock when the decision executed
  bool probe = false;
  bool probe_free = false;
  std::string video_id;
  int video = -1;
  int viewing = -1;
  int cdn = 0;
  double range_s = 0.0;
  double megabits = 0.0;
  double download_s = 0.0;
  double setup_s = 0.0;
  double avg_mbps = 0.0;
  bool pooled = false;
  double wait_s = 0.0;
  double viewing_buffer_before = 0.0;
  bool startup_pending_before = false;
  bool startup_charged_before = false;
  double rebuffer_s = 0.0;
  double startup_s = 0.0;
  bool fallback = false;
  std::uint64_t sequences_scored = 0;
};

struct episode_result {
  session_metrics metrics;
  std::vector<decision_row> decisions;
  std::vector<event> events;
  std::uint64_t sequences_scored = 0;
  int fallback_count = 0;
  int probe_count = 0;
  double wall_clock_end_s = 0.0;
  std::vector<double> plan_latencies_s;  // wall time per decision, reporting-only
};

inline episode_result run_episode(const media_list& media,
                                  const std::vector<pan_cdn_class>& classes, link_model& link,
                                  strategy& strat, const sim_config& cfg) {
  validate(media);
  validate(cfg.prm.qoe);

  episode_result out;
  out.metrics.per_video.assign(media.videos.size(), video_metrics{});
  session_core state = make_session(media, cfg.prm);
  link_source source(&link);
  std::vector<event>* events = cfg.collect_events ? &out.events : nullptr;
  strategy_context ctx{state, media, classes};
  int seq = 0;

  while (sequence_head(state, media) >= 0) {
    const int head = state.head_hint;
    const strategy_action act = strat.decide(ctx);
    out.plan_latencies_s.push_back(act.plan_seconds);

    decision_row row;
    row.seq = seq++;
    row.t_s = state.clock_s;
    row.viewing = state.viewing;

    if (act.kind == action_kind::probe) {
      const probe_info info =
          apply_probe(state, media, cfg.prm, act.probe_cdn, act.probe_megabits, source, events);
      row.probe = true;
      row.probe_free = cfg.probe_cost_free;
      row.cdn = info.cdn;
      row.megabits = info.megabits;
      row.download_s = info.total_s;
      row.avg_mbps = info.avg_mbps;
      row.pooled = info.pooled;
      if (!cfg.probe_cost_free) out.metrics.megabits_by_cdn[info.cdn] += info.megabits;
      ++out.probe_count;
      strat.on_probe(info);
    } else {
      if (act.decision.video_id != media.videos[head].id)
        throw invalid_input_error("strategy targeted " + act.decision.video_id +
                                  " but the download-sequence head is " + media.videos[head].id);
      if (!cached_on(media.videos[head], act.decision.pan_cdn_id))
        throw infeasible_strategy_error("video " + media.videos[head].id +
                                        " is not cached on pan-CDN " +
                                        std::to_string(act.decision.pan_cdn_id));
      const step_info info = apply_range(state, media, cfg.prm, head, act.decision.pan_cdn_id,
                                         act.decision.range_s, source, events);
      row.video_id = media.videos[head].id;
      row.video = head;
      row.cdn = info.cdn;
      row.range_s = info.range_s;
      row.megabits = info.megabits;
      row.download_s = info.download_s;
      row.setup_s = info.setup_s;
      row.avg_mbps = info.avg_mbps;
      row.pooled = info.pooled;
      row.wait_s = info.wait_s;
      row.viewing_buffer_before = info.viewing_buffer_before;
      row.startup_pending_before = info.startup_pending_before;
      row.startup_charged_before = info.startup_charged_before;
      row.rebuffer_s = info.rebuffer_s;
      row.startup_s = info.startup_s;
      row.fallback = act.fallback;
      row.sequences_scored = act.sequences_scored;
      out.sequences_scored += act.sequences_scored;
      if (act.fallback) ++out.fallback_count;

      auto& vm = out.metrics.per_video[info.viewing_before];
      vm.startup_s += info.startup_s;
      if (info.rebuffer_s > 0) {
        vm.rebuffer_s += info.rebuffer_s;
        ++vm.rebuffer_events;
      }
      out.metrics.megabits_by_cdn[info.cdn] += info.megabits;
      strat.on_feedback(info);
    }
    out.decisions.push_back(std::move(row));
  }

  advance_idle_to_end(state, media, cfg.prm, events);
  out.wall_clock_end_s = state.clock_s;

  out.metrics.total_cost = traffic_cost(out.metrics.megabits_by_cdn, classes);
  out.metrics.qoe_total = qoe_media_list(out.metrics.per_video, media, cfg.prm.qoe);
  out.metrics.utility = utility(out.metrics.qoe_total, out.metrics.total_cost, cfg.prm.qoe.gamma);
  return out;
}

namespace detail {

/// Replays logged network timing instead of consulting traces.
class logged_source final : public throughput_source {
 public:
  download_quote next;
  download_quote fetch(int, double, double, std::optional<int>) override { return next; }
};

}  // namespace detail

/// Re-derives every charge in an episode log from the logged network timings and
/// the session dynamics alone. Any tampering with ranges, waits, stall or
/// startup charges, traffic, or the final metrics breaks exact equality.
inline bool replay_check(const episode_result& ep, const media_list& media,
                         const std::vector<pan_cdn_class>& classes, const session_params& prm,
                         std::string* why = nullptr) {
  auto fail = [&](const std::string& msg) {
    if (why) *why = msg;
    return false;
  };

  if (media.videos.empty()) {
    // Nothing to watch: an empty log with all-zero metrics is the one valid shape.
    if (!ep.decisions.empty()) return fail("decisions logged against an empty media list");
    if (!ep.metrics.per_video.empty() || !ep.metrics.megabits_by_cdn.empty() ||
        ep.metrics.total_cost != 0.0 || ep.metrics.qoe_total != 0.0 ||
        ep.metrics.utility != 0.0 || ep.wall_clock_end_s != 0.0)
      return fail("nonzero metrics on an empty media list");
    return true;
  }

  session_core state = make_session(media, prm);
  detail::logged_source source;
  session_metrics rebuilt;
  rebuilt.per_video.assign(media.videos.size(), video_metrics{});

  for (const auto& row : ep.decisions) {
    const std::string at = "decision " + std::to_string(row.seq) + ": ";
    if (state.clock_s != row.t_s) return fail(at + "clock mismatch");
    // Every quote satisfies avg = bytes / time exactly; a tampered timing on the
    // final range can otherwise hide inside the idle wind-down.
    const double implied = row.megabits > 0 ? row.megabits / row.download_s : 0.0;
    if (row.avg_mbps != implied)
      return fail(at + "throughput inconsistent with bytes and timing");
    source.next = download_quote{row.download_s, row.setup_s, row.pooled, row.avg_mbps};

    if (row.probe) {
      const probe_info info = apply_probe(state, media, prm, row.cdn, row.megabits, source);
      if (info.total_s != row.download_s) return fail(at + "probe timing mismatch");
      if (!row.probe_free) rebuilt.megabits_by_cdn[row.cdn] += row.megabits;
      continue;
    }

    const int head = sequence_head(state, media);
    if (head < 0 || media.videos[head].id != row.video_id)
      return fail(at + "video is not the download-sequence head");
    const step_info info = apply_range(state, media, prm, head, row.cdn, row.range_s, source);
    if (info.range_s != row.range_s) return fail(at + "range mismatch");
    if (info.megabits != row.megabits) return fail(at + "traffic mismatch");
    if (info.wait_s != row.wait_s) return fail(at + "wait mismatch");
    if (info.viewing_buffer_before != row.viewing_buffer_before)
      return fail(at + "viewing-buffer mismatch");
    if (info.startup_pending_before != row.startup_pending_before ||
        info.startup_charged_before != row.startup_charged_before)
      return fail(at + "startup flag mismatch");
    if (info.rebuffer_s != row.rebuffer_s) return fail(at + "stall charge mismatch");
    if (info.startup_s != row.startup_s) return fail(at + "startup charge mismatch");

    auto& vm = rebuilt.per_video[info.viewing_before];
    vm.startup_s += info.startup_s;
    if (info.rebuffer_s > 0) {
      vm.rebuffer_s += info.rebuffer_s;
      ++vm.rebuffer_events;
    }
    rebuilt.megabits_by_cdn[row.cdn] += row.megabits;
  }

  if (sequence_head(state, media) >= 0) return fail("log ends with content still missing");
  advance_idle_to_end(state, media, prm);
  if (state.clock_s != ep.wall_clock_end_s) return fail("final clock mismatch");

  for (std::size_t i = 0; i < media.videos.size(); ++i) {
    const auto& a = rebuilt.per_video[i];
    const auto& b = ep.metrics.per_video[i];
    if (a.rebuffer_s != b.rebuffer_s || a.rebuffer_events != b.rebuffer_events ||
        a.startup_s != b.startup_s)
      return fail("per-video metrics mismatch on " + media.videos[i].id);
  }
  if (rebuilt.megabits_by_cdn != ep.metrics.megabits_by_cdn) return fail("traffic map mismatch");
  if (traffic_cost(rebuilt.megabits_by_cdn, classes) != ep.metrics.total_cost)
    return fail("cost mismatch");
  if (qoe_media_list(rebuilt.per_video, media, prm.qoe) != ep.metrics.qoe_total)
    return fail("QoE mismatch");
  if (utility(ep.metrics.qoe_total, ep.metrics.total_cost, prm.qoe.gamma) != ep.metrics.utility)
    return fail("utility mismatch");
  return true;
}

}  // namespace pira
