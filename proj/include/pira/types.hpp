#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace pira {

struct error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct invalid_input_error : error {
  using error::error;
};

struct not_found_error : error {
  using error::error;
};

/// Predictor has no samples for the requested class.
struct no_data_error : error {
  using error::error;
};

struct parse_error : error {
  std::size_t line;
  parse_error(std::size_t line_no, const std::string& what)
      : error("line " + std::to_string(line_no) + ": " + what), line(line_no) {}
};

/// Trace ended before the episode finished.
struct episode_truncated_error : error {
  using error::error;
};

/// Strategy cannot serve a video (e.g. pinned to a class that does not cache it).
struct infeasible_strategy_error : error {
  using error::error;
};

/// One selectable delivery class: a pan-CDN with its pricing.
struct pan_cdn_class {
  int id = 0;
  std::string label;
  double cost_per_mb = 0.0;  // monetary units per megabyte delivered
};

inline const pan_cdn_class& find_class(const std::vector<pan_cdn_class>& classes, int id) {
  for (const auto& c : classes)
    if (c.id == id) return c;
  throw not_found_error("unknown pan-CDN id " + std::to_string(id));
}

struct video_spec {
  std::string id;
  double duration_s = 0.0;
  double bitrate_mbps = 0.0;
  double chunk_s = 4.0;             // encoding chunk length; ranges never exceed it
  std::vector<int> cached_on;       // pan-CDN ids that hold this video, never empty
  double watch_s = 0.0;             // how long the user watches before swiping (may exceed duration_s: looping)
};

inline void validate(const video_spec& v) {
  if (v.id.empty()) throw invalid_input_error("video id empty");
  if (v.duration_s <= 0) throw invalid_input_error("video " + v.id + ": duration must be positive");
  if (v.bitrate_mbps <= 0) throw invalid_input_error("video " + v.id + ": bitrate must be positive");
  if (v.chunk_s <= 0) throw invalid_input_error("video " + v.id + ": chunk length must be positive");
  if (v.cached_on.empty()) throw invalid_input_error("video " + v.id + ": cached_on empty");
  if (v.watch_s <= 0) throw invalid_input_error("video " + v.id + ": watch duration must be positive");
}

/// The short-video feed: ordered videos plus the viewing position.
struct media_list {
  std::vector<video_spec> videos;
  int current_index = 0;
};

inline void validate(const media_list& m) {
  if (m.videos.empty()) throw invalid_input_error("media list empty");
  if (m.current_index < 0 || m.current_index >= static_cast<int>(m.videos.size()))
    throw invalid_input_error("current_index out of range");
  for (const auto& v : m.videos) validate(v);
}

inline int video_index(const media_list& m, const std::string& id) {
  for (std::size_t i = 0; i < m.videos.size(); ++i)
    if (m.videos[i].id == id) return static_cast<int>(i);
  throw not_found_error("unknown video id " + id);
}

inline bool cached_on(const video_spec& v, int cdn) {
  for (int c : v.cached_on)
    if (c == cdn) return true;
  return false;
}

/// One joint decision: which video's next range, from which class, how long.
struct range_decision {
  std::string video_id;
  int pan_cdn_id = 0;
  double range_s = 0.0;  // seconds of content, (0, chunk_s]
};

/// Size of a range in megabits.
inline double range_bytes_mbit(const video_spec& v, double range_s) {
  if (range_s <= 0 || range_s > v.chunk_s + 1e-12)
    throw invalid_input_error("range duration " + std::to_string(range_s) + " outside (0, chunk]");
  return v.bitrate_mbps * range_s;
}

struct qoe_params {
  double mu1 = 2.0;          // rebuffer-ratio weight
  double mu2 = 0.5;          // startup-delay weight, per second
  double tau_st_s = 2.0;     // startup buffer threshold
  double player_cap_s = 30.0;  // shared buffer cap across all videos
  double gamma = 0.3;        // cost weight in the utility
};

inline void validate(const qoe_params& p) {
  if (p.mu1 < 0 || p.mu2 < 0) throw invalid_input_error("QoE weights must be nonnegative");
  if (p.tau_st_s < 0) throw invalid_input_error("tau_st must be nonnegative");
  if (p.player_cap_s <= 0) throw invalid_input_error("player buffer cap must be positive");
  if (p.gamma < 0) throw invalid_input_error("gamma must be nonnegative");
}

struct video_metrics {
  double rebuffer_s = 0.0;
  int rebuffer_events = 0;
  double startup_s = 0.0;
};

/// Everything Eq. accounting produces for one episode.
struct session_metrics {
  std::vector<video_metrics> per_video;   // aligned with media_list.videos
  std::map<int, double> megabits_by_cdn;  // delivered bits per class, probes included
  double total_cost = 0.0;
  double qoe_total = 0.0;
  double utility = 0.0;
};

}  // namespace pira
