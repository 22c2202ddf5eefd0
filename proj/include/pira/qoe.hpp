#pragma once

#include <map>
#include <vector>

#include "pira/types.hpp"

namespace pira {

/// Stall time caused by downloading one range of the viewed video: (dl - B)+.
inline double rebuffer_time(double buffer_s, double download_s) {
  const double t = download_s - buffer_s;
  return t > 0.0 ? t : 0.0;
}

/// Startup delay contribution of one range: zero once the buffer has reached the
/// threshold, otherwise the range's download time.
inline double startup_delay(double buffer_s, double tau_st_s, double download_s) {
  return buffer_s >= tau_st_s ? 0.0 : download_s;
}

/// Cost of delivering `megabits` at a per-megabyte price.
inline double traffic_cost_mbit(double megabits, double cost_per_mb) {
  if (megabits < 0) throw invalid_input_error("negative traffic");
  return megabits / 8.0 * cost_per_mb;
}

/// Total delivery cost across classes.
inline double traffic_cost(const std::map<int, double>& megabits_by_cdn,
                           const std::vector<pan_cdn_class>& classes) {
  double cost = 0.0;
  for (const auto& [cdn, mbit] : megabits_by_cdn)
    cost += traffic_cost_mbit(mbit, find_class(classes, cdn).cost_per_mb);
  return cost;
}

/// Per-video QoE: 1 - mu1 * (rebuffer / watch) - mu2 * startup. Deliberately
/// unclamped; heavy stalling scores negative.
inline double qoe_video(double rebuffer_s, double startup_s, double watch_s, const qoe_params& p) {
  if (watch_s <= 0) throw invalid_input_error("watch duration must be positive");
  return 1.0 - p.mu1 * (rebuffer_s / watch_s) - p.mu2 * startup_s;
}

/// List-level QoE: sum of per-video terms over the whole feed.
inline double qoe_media_list(const std::vector<video_metrics>& per_video, const media_list& media,
                             const qoe_params& p) {
  if (per_video.size() != media.videos.size())
    throw invalid_input_error("metrics do not match media list");
  double q = 0.0;
  for (std::size_t i = 0; i < per_video.size(); ++i)
    q += qoe_video(per_video[i].rebuffer_s, per_video[i].startup_s, media.videos[i].watch_s, p);
  return q;
}

/// The objective the controller maximizes.
inline double utility(double qoe, double cost, double gamma) { return qoe - gamma * cost; }

}  // namespace pira
