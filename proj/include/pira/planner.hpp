#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <utility>
#include <vector>

#include "pira/session.hpp"
#include "pira/types.hpp"

namespace pira {

struct planning_config {
  int horizon = 4;
  std::vector<double> candidate_ranges_s = {1.0, 2.0, 3.0, 4.0};
  bool pruning_i = true;   // drop strictly dominated classes (slower and pricier)
  bool pruning_ii = true;  // floor the range by predicted-throughput-to-bitrate ratio
  // ratio thresholds -> minimum sensible range; below the first threshold the
  // smallest candidate range stays allowed. The floor only rises once the link
  // outruns playback by a clear multiple, so short rescue fetches survive at
  // every knife edge.
  std::vector<std::pair<double, double>> range_steps = {{3.0, 2.0}, {6.0, 3.0}, {10.0, 4.0}};
};

inline void validate(const planning_config& cfg) {
  if (cfg.horizon < 1) throw invalid_input_error("horizon must be >= 1");
  if (cfg.candidate_ranges_s.empty()) throw invalid_input_error("no candidate ranges");
  for (double r : cfg.candidate_ranges_s)
    if (r <= 0) throw invalid_input_error("candidate ranges must be positive");
  for (std::size_t i = 1; i < cfg.range_steps.size(); ++i)
    if (cfg.range_steps[i].first <= cfg.range_steps[i - 1].first)
      throw invalid_input_error("range-step thresholds must increase");
}

/// Pruning I: a class survives unless some other candidate is strictly faster
/// AND strictly cheaper. Ties on either axis keep both.
inline std::vector<int> prune_pan_cdns(const std::vector<int>& candidates,
                                       const std::map<int, double>& predicted_mbps,
                                       const std::vector<pan_cdn_class>& classes) {
  std::vector<int> keep;
  for (int k : candidates) {
    const double th_k = predicted_mbps.at(k);
    const double c_k = find_class(classes, k).cost_per_mb;
    bool dominated = false;
    for (int j : candidates) {
      if (j == k) continue;
      if (predicted_mbps.at(j) > th_k && find_class(classes, j).cost_per_mb < c_k) {
        dominated = true;
        break;
      }
    }
    if (!dominated) keep.push_back(k);
  }
  return keep;
}

/// Pruning II: the shortest range worth requesting at this throughput/bitrate
/// ratio. Starved links stay fully flexible; fat links skip short ranges.
inline double min_range_for(double predicted_mbps, double bitrate_mbps,
                            const planning_config& cfg) {
  if (bitrate_mbps <= 0) throw invalid_input_error("bitrate must be positive");
  const double ratio = predicted_mbps / bitrate_mbps;
  double floor_s = *std::min_element(cfg.candidate_ranges_s.begin(), cfg.candidate_ranges_s.end());
  for (const auto& [threshold, min_range] : cfg.range_steps)
    if (ratio >= threshold) floor_s = min_range;
  return floor_s;
}

/// Sequences enumerated by an exhaustive horizon-n search over |PC| classes and
/// |R| ranges: sum over i=1..n of (|PC|*|R|)^i.
inline std::uint64_t count_enumerated(int n_classes, int n_ranges, int horizon) {
  if (n_classes < 1 || n_ranges < 1 || horizon < 1)
    throw invalid_input_error("count_enumerated needs positive arguments");
  const std::uint64_t w = static_cast<std::uint64_t>(n_classes) * static_cast<std::uint64_t>(n_ranges);
  std::uint64_t total = 0, level = 1;
  for (int i = 0; i < horizon; ++i) {
    if (level > UINT64_MAX / w) throw invalid_input_error("enumeration count overflows");
    level *= w;
    if (total > UINT64_MAX - level) throw invalid_input_error("enumeration count overflows");
    total += level;
  }
  return total;
}

struct plan_result {
  range_decision decision;
  std::uint64_t sequences_scored = 0;
  bool fallback = false;  // pruning emptied depth 1; cheapest feasible class used
  double best_score = 0.0;
};

namespace detail {

struct plan_candidates {
  // parallel arrays per surviving class
  std::vector<int> cdn;
  std::vector<double> cost_per_mb;
  std::vector<double> min_range_s;
};

struct plan_search {
  const media_list& media;
  const std::vector<pan_cdn_class>& classes;
  const std::map<int, double>& predicted;
  throughput_source& source;
  const session_params& prm;
  const planning_config& cfg;

  std::vector<std::optional<plan_candidates>> cand_cache;
  std::vector<session_core> arena;  // per-depth state snapshots, reused
  std::uint64_t scored = 0;

  double best_score = 0.0;
  bool have_best = false;
  int best_cdn = 0;
  double best_range = 0.0;
  double best_cost = 0.0;

  const plan_candidates& candidates_for(int video) {
    auto& slot = cand_cache[video];
    if (!slot) {
      plan_candidates pc;
      std::vector<int> avail = media.videos[video].cached_on;
      std::sort(avail.begin(), avail.end());
      avail.erase(std::unique(avail.begin(), avail.end()), avail.end());
      if (cfg.pruning_i || cfg.pruning_ii)
        for (int id : avail)
          if (!predicted.count(id))
            throw no_data_error("no throughput prediction for pan-CDN " + std::to_string(id));
      if (cfg.pruning_i) avail = prune_pan_cdns(avail, predicted, classes);
      for (int id : avail) {
        pc.cdn.push_back(id);
        pc.cost_per_mb.push_back(find_class(classes, id).cost_per_mb);
        pc.min_range_s.push_back(
            cfg.pruning_ii ? min_range_for(predicted.at(id), media.videos[video].bitrate_mbps, cfg)
                           : 0.0);
      }
      slot = std::move(pc);
    }
    return *slot;
  }

  // Utility contribution of one rollout step; per-video QoE constants cancel
  // across candidates, so only penalties and cost move the argmax.
  double step_score(const step_info& info, double cost_per_mb) const {
    double sc = 0.0;
    if (info.rebuffer_s > 0)
      sc -= prm.qoe.mu1 * info.rebuffer_s / media.videos[info.viewing_before].watch_s;
    sc -= prm.qoe.mu2 * info.startup_s;
    sc -= prm.qoe.gamma * traffic_cost_mbit(info.megabits, cost_per_mb);
    return sc;
  }

  void consider(double score, int first_cdn, double first_range, double first_cost) {
    if (have_best) {
      if (score < best_score) return;
      if (score == best_score) {
        // Deterministic tie-break: cheaper class, then longer range, then lower id.
        if (first_cost > best_cost) return;
        if (first_cost == best_cost) {
          if (first_range < best_range) return;
          if (first_range == best_range && first_cdn >= best_cdn) return;
        }
      }
    }
    have_best = true;
    best_score = score;
    best_cdn = first_cdn;
    best_range = first_range;
    best_cost = first_cost;
  }

  void search(session_core& state, int depth, double score, int first_cdn, double first_range,
              double first_cost) {
    if (depth == cfg.horizon) {
      consider(score, first_cdn, first_range, first_cost);
      return;
    }
    const int head = sequence_head(state, media);
    if (head < 0) {
      // Nothing left to download within the horizon: a complete rollout.
      consider(score, first_cdn, first_range, first_cost);
      return;
    }
    const auto& pc = candidates_for(head);
    bool any_child = false;
    arena[depth] = state;
    // The range floor assumes playback is safe; while startup is pending the
    // short ranges are exactly the flexibility worth exploring, so the floor
    // is suspended until the threshold is buffered.
    const bool fragile = state.startup_pending;
    for (std::size_t ci = 0; ci < pc.cdn.size(); ++ci) {
      double prev_eff = -1.0;
      for (double r : cfg.candidate_ranges_s) {
        if (!fragile && r < pc.min_range_s[ci] - 1e-12) continue;
        const double eff = constrained_range(state, media, prm, head, r);
        if (eff <= 0) continue;
        if (std::abs(eff - prev_eff) < 1e-12) continue;  // trims collapsed duplicates
        prev_eff = eff;
        any_child = true;

        const auto undm = source.mark(pc.cdn[ci]);
        const step_info info = apply_range(state, media, prm, head, pc.cdn[ci], eff, source);
        ++scored;
        const double child_score = score + step_score(info, pc.cost_per_mb[ci]);
        const int f_cdn = depth == 0 ? pc.cdn[ci] : first_cdn;
        const double f_range = depth == 0 ? info.range_s : first_range;
        const double f_cost = depth == 0 ? pc.cost_per_mb[ci] : first_cost;
        search(state, depth + 1, child_score, f_cdn, f_range, f_cost);
        state = arena[depth];
        source.restore(undm);
      }
    }
    if (!any_child && depth > 0) {
      // Pruning starved a deeper step; score what this rollout has so far.
      consider(score, first_cdn, first_range, first_cost);
    }
  }
};

}  // namespace detail

/// Receding-horizon joint (class, range) search: exhaustively rolls the session
/// dynamics forward over pruned candidates and returns the first action of the
/// best complete rollout.
inline plan_result plan(const session_core& state, const media_list& media,
                        const std::vector<pan_cdn_class>& classes,
                        const std::map<int, double>& predicted_mbps, throughput_source& source,
                        const session_params& prm, const planning_config& cfg) {
  validate(cfg);
  session_core work = state;
  const int head = sequence_head(work, media);
  if (head < 0) throw invalid_input_error("plan called with nothing to download");

  detail::plan_search ps{media, classes, predicted_mbps, source, prm, cfg, {}, {}};
  ps.cand_cache.resize(media.videos.size());
  ps.arena.assign(static_cast<std::size_t>(cfg.horizon), session_core{});

  plan_result out;
  const auto& pc = ps.candidates_for(head);
  bool depth1_possible = false;
  for (std::size_t ci = 0; ci < pc.cdn.size() && !depth1_possible; ++ci)
    for (double r : cfg.candidate_ranges_s)
      if ((work.startup_pending || r >= pc.min_range_s[ci] - 1e-12) &&
          constrained_range(work, media, prm, head, r) > 0) {
        depth1_possible = true;
        break;
      }

  if (!depth1_possible) {
    // Fall back to the cheapest class that caches the video, at the smallest range.
    out.fallback = true;
    const video_spec& v = media.videos[head];
    int pick = -1;
    double pick_cost = 0.0;
    for (int id : v.cached_on) {
      const double c = find_class(classes, id).cost_per_mb;
      if (pick < 0 || c < pick_cost || (c == pick_cost && id < pick)) {
        pick = id;
        pick_cost = c;
      }
    }
    const double r_min =
        *std::min_element(cfg.candidate_ranges_s.begin(), cfg.candidate_ranges_s.end());
    out.decision = {v.id, pick, constrained_range(work, media, prm, head, r_min)};
    return out;
  }

  ps.search(work, 0, 0.0, 0, 0.0, 0.0);
  out.sequences_scored = ps.scored;
  out.best_score = ps.best_score;
  out.decision = {media.videos[head].id, ps.best_cdn, ps.best_range};
  return out;
}

}  // namespace pira
