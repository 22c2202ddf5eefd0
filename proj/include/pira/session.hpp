#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <vector>

#include "pira/buffer.hpp"
#include "pira/link.hpp"
#include "pira/qoe.hpp"
#include "pira/types.hpp"

namespace pira {

enum class startup_charge_mode { once, cumulative };

struct session_params {
  qoe_params qoe;
  startup_charge_mode startup_charge = startup_charge_mode::once;
};

enum class event_kind : int {
  range_complete = 0,
  probe_complete = 1,
  startup_complete = 2,
  rebuffer_end = 3,
  swipe = 4,
  rebuffer_start = 5,
};

struct event {
  double t_s = 0.0;
  event_kind kind = event_kind::range_complete;
  int video = -1;
};

/// Everything the buffer/watch dynamics need, small enough to copy per rollout node.
struct session_core {
  std::vector<double> buffer_s;      // model buffer per video; evicted entries are 0
  std::vector<double> downloaded_s;  // content fetched so far per video
  int viewing = 0;                   // == videos.size() once the user is done
  double watch_left_s = 0.0;         // remaining watch time on the viewing video
  bool startup_pending = false;
  bool startup_charged = false;      // once-mode latch, reset per video
  std::optional<int> last_cdn;
  double clock_s = 0.0;
  int head_hint = 0;                 // first possibly-incomplete index, maintained lazily
};

constexpr double session_eps = 1e-9;

inline double startup_threshold(const video_spec& v, const qoe_params& p) {
  return std::min(p.tau_st_s, v.duration_s);
}

inline bool video_complete(const session_core& s, const media_list& m, int idx) {
  return s.downloaded_s[idx] >= m.videos[idx].duration_s - session_eps;
}

/// Startup gates only videos that still need network ranges; a fully fetched
/// video plays immediately regardless of its ledger value.
inline bool startup_would_pend(const session_core& s, const media_list& m, int idx,
                               const qoe_params& p) {
  return !video_complete(s, m, idx) &&
         s.buffer_s[idx] < startup_threshold(m.videos[idx], p) - session_eps;
}

inline session_core make_session(const media_list& m, const session_params& prm) {
  validate(m);
  validate(prm.qoe);
  session_core s;
  const auto n = m.videos.size();
  s.buffer_s.assign(n, 0.0);
  s.downloaded_s.assign(n, 0.0);
  s.viewing = m.current_index;
  s.head_hint = m.current_index;
  s.watch_left_s = m.videos[s.viewing].watch_s;
  s.startup_pending = startup_would_pend(s, m, s.viewing, prm.qoe);
  return s;
}

/// First video at or after the viewing position that still has ranges to fetch;
/// -1 when every remaining video is fully downloaded.
inline int sequence_head(session_core& s, const media_list& m) {
  int i = std::max(s.head_hint, s.viewing);
  const int n = static_cast<int>(m.videos.size());
  while (i < n && video_complete(s, m, i)) ++i;
  s.head_hint = i;
  return i < n ? i : -1;
}

/// The range the session will actually fetch for a requested duration: trimmed to
/// the video's remaining content and, while startup is pending, bumped so one
/// range crosses the startup threshold.
inline double constrained_range(const session_core& s, const media_list& m,
                                const session_params& prm, int video, double range_req) {
  const video_spec& v = m.videos[video];
  const double remaining = v.duration_s - s.downloaded_s[video];
  double r = std::min({range_req, remaining, v.chunk_s});
  if (s.startup_pending && video == s.viewing) {
    const double needed = startup_threshold(v, prm.qoe) - s.buffer_s[video];
    if (needed > r) r = std::min({needed, v.chunk_s, remaining});
  }
  return r;
}

struct step_info {
  int video = -1;
  int viewing_before = -1;
  int cdn = 0;
  double range_s = 0.0;
  double megabits = 0.0;
  double wait_s = 0.0;
  double download_s = 0.0;  // setup + transfer
  double setup_s = 0.0;
  double avg_mbps = 0.0;
  bool pooled = false;
  double viewing_buffer_before = 0.0;
  bool startup_pending_before = false;
  bool startup_charged_before = false;
  double rebuffer_s = 0.0;  // this step's stall charge
  double startup_s = 0.0;   // this step's startup charge
  double clock_before = 0.0;
};

/// Where range bytes and their timing come from. The simulator binds traces and
/// the connection pool; the planner binds frozen predictions.
class throughput_source {
 public:
  virtual ~throughput_source() = default;
  virtual download_quote fetch(int pan_cdn_id, double start_s, double megabits,
                               std::optional<int> last_cdn) = 0;

  struct undo {
    link_model::pool_mark pool{0, false, 0.0};
  };
  virtual undo mark(int) const { return {}; }
  virtual void restore(const undo&) {}
};

/// Trace-backed realization with pool keep-alive.
class link_source final : public throughput_source {
 public:
  explicit link_source(link_model* link) : link_(link) {}
  download_quote fetch(int cdn, double start_s, double megabits, std::optional<int>) override {
    return link_->download(cdn, start_s, megabits);
  }
  undo mark(int cdn) const override { return {link_->mark(cdn)}; }
  void restore(const undo& u) override { link_->restore(u.pool); }

 private:
  link_model* link_;
};

/// Frozen per-class predictions; switching classes costs setup latency and runs
/// the first range at alpha * prediction.
class predicted_source final : public throughput_source {
 public:
  predicted_source(const std::map<int, double>* predictions, double degradation_alpha,
                   double setup_s)
      : predictions_(predictions), alpha_(degradation_alpha), setup_s_(setup_s) {}

  download_quote fetch(int cdn, double, double megabits, std::optional<int> last_cdn) override {
    auto it = predictions_->find(cdn);
    if (it == predictions_->end() || it->second <= 0)
      throw no_data_error("no prediction for pan-CDN " + std::to_string(cdn));
    download_quote q;
    const bool switching = last_cdn.has_value() && *last_cdn != cdn;
    if (switching) {
      q.setup_s = setup_s_;
      q.pooled = false;
      q.total_s = setup_s_ + megabits / (alpha_ * it->second);
    } else {
      q.pooled = true;
      q.total_s = megabits / it->second;
    }
    q.avg_mbps = megabits > 0 ? megabits / q.total_s : 0.0;
    return q;
  }

 private:
  const std::map<int, double>* predictions_;
  double alpha_;
  double setup_s_;
};

namespace detail {

/// Walk the watch clock through `play_s` seconds of playback, handling swipes.
/// `wall(p)` maps played seconds within this step to a wall-clock offset; stalls
/// make it non-identity. Returns after freezing on a startup-pending video.
inline void advance_watch(session_core& s, const media_list& m, const session_params& prm,
                          double play_s, double base_clock, double stall_at, double stall_len,
                          std::vector<event>* events) {
  const int n = static_cast<int>(m.videos.size());
  double played = 0.0;
  while (play_s > session_eps && s.viewing < n) {
    const double take = std::min(play_s, s.watch_left_s);
    s.watch_left_s -= take;
    play_s -= take;
    played += take;
    if (s.watch_left_s > session_eps) break;
    // Swipe: drop the finished video's buffer, move on.
    const double wall = played + (played >= stall_at ? stall_len : 0.0);
    s.buffer_s[s.viewing] = 0.0;
    if (events) events->push_back({base_clock + wall, event_kind::swipe, s.viewing});
    ++s.viewing;
    s.startup_charged = false;
    if (s.viewing < n) {
      s.watch_left_s = m.videos[s.viewing].watch_s;
      s.startup_pending = startup_would_pend(s, m, s.viewing, prm.qoe);
      if (s.startup_pending) break;  // playback frozen until a range clears it
    } else {
      s.watch_left_s = 0.0;
    }
  }
}

}  // namespace detail

/// Apply one range download: Eq.-level buffer/wait accounting, stall and startup
/// charges, then the watch clock. `video` must be the sequence head.
inline step_info apply_range(session_core& s, const media_list& m, const session_params& prm,
                             int video, int cdn, double range_req, throughput_source& source,
                             std::vector<event>* events = nullptr) {
  const int n = static_cast<int>(m.videos.size());
  if (video < 0 || video >= n) throw invalid_input_error("video index out of range");
  if (s.viewing >= n) throw invalid_input_error("session already finished");
  if (sequence_head(s, m) != video)
    throw invalid_input_error("range must target the download-sequence head");
  if (range_req <= 0) throw invalid_input_error("range duration must be positive");
  const std::size_t event_slice = events ? events->size() : 0;

  const video_spec& v = m.videos[video];
  step_info info;
  info.video = video;
  info.viewing_before = s.viewing;
  info.cdn = cdn;
  info.clock_before = s.clock_s;
  info.viewing_buffer_before = s.buffer_s[s.viewing];
  info.startup_pending_before = s.startup_pending;
  info.startup_charged_before = s.startup_charged;

  const double r = constrained_range(s, m, prm, video, range_req);
  info.range_s = r;
  info.megabits = v.bitrate_mbps * r;

  const auto q = source.fetch(cdn, s.clock_s, info.megabits, s.last_cdn);
  info.download_s = q.total_s;
  info.setup_s = q.setup_s;
  info.avg_mbps = q.avg_mbps;
  info.pooled = q.pooled;

  const bool is_current = (video == s.viewing);

  // Stall/startup charges read the pre-update ledger.
  if (is_current) {
    if (s.startup_pending) {
      if (prm.startup_charge == startup_charge_mode::cumulative || !s.startup_charged)
        info.startup_s = q.total_s;
      s.startup_charged = true;
    } else {
      info.rebuffer_s = rebuffer_time(info.viewing_buffer_before, q.total_s);
    }
  }

  // Buffer ledger update.
  double total = 0.0;
  for (double b : s.buffer_s) total += b;
  double wait = 0.0;
  if (is_current) {
    const auto st = detail::step_current(s.buffer_s[video], total - s.buffer_s[video], q.total_s,
                                         r, prm.qoe.player_cap_s);
    s.buffer_s[video] = st.buffer_after;
    wait = st.wait_s;
  } else {
    const double b_pre = s.buffer_s[video];
    const double b_view = s.buffer_s[s.viewing];
    const auto st = detail::step_prefetch(b_pre, b_view, total - b_pre - b_view, q.total_s, r,
                                          prm.qoe.player_cap_s);
    s.buffer_s[video] = st.prefetch_after;
    s.buffer_s[s.viewing] = st.viewing_after;
    wait = st.wait_s;
  }
  info.wait_s = wait;

  s.downloaded_s[video] += r;
  if (v.duration_s - s.downloaded_s[video] <= session_eps) s.downloaded_s[video] = v.duration_s;
  s.last_cdn = cdn;

  // Startup clears once the threshold is buffered, or once the whole video is
  // local (a cap wait can eat the gain below the threshold on the last range).
  bool started_now = false;
  if (is_current && s.startup_pending &&
      (s.buffer_s[video] >= startup_threshold(v, prm.qoe) - session_eps ||
       video_complete(s, m, video))) {
    s.startup_pending = false;
    started_now = true;
  }

  if (events) {
    if (info.rebuffer_s > 0) {
      events->push_back({s.clock_s + info.viewing_buffer_before, event_kind::rebuffer_start,
                         info.viewing_before});
    }
    events->push_back({s.clock_s + q.total_s, event_kind::range_complete, video});
    if (info.rebuffer_s > 0)
      events->push_back({s.clock_s + q.total_s, event_kind::rebuffer_end, info.viewing_before});
    if (started_now)
      events->push_back({s.clock_s + q.total_s, event_kind::startup_complete, video});
  }

  // Watch-clock progression: playback runs outside stall/startup pauses.
  double play = 0.0, stall_at = 0.0, stall_len = 0.0;
  constexpr double inf = std::numeric_limits<double>::infinity();
  if (info.startup_pending_before) {
    play = started_now ? wait : 0.0;
    stall_at = 0.0;
    stall_len = q.total_s;  // playback only starts once the range has landed
  } else if (is_current) {
    const double until_stall = std::min(info.viewing_buffer_before, q.total_s);
    play = until_stall + wait;
    stall_at = until_stall;
    stall_len = q.total_s - until_stall;
  } else {
    play = q.total_s + wait;
    stall_at = inf;
    stall_len = 0.0;
  }
  detail::advance_watch(s, m, prm, play, s.clock_s, stall_at, stall_len, events);

  if (events) {
    std::stable_sort(events->begin() + event_slice, events->end(),
                     [](const event& a, const event& b) {
                       if (a.t_s != b.t_s) return a.t_s < b.t_s;
                       return static_cast<int>(a.kind) < static_cast<int>(b.kind);
                     });
  }

  s.clock_s += q.total_s + wait;
  return info;
}

struct probe_info {
  int cdn = 0;
  double megabits = 0.0;
  double total_s = 0.0;
  double avg_mbps = 0.0;
  bool pooled = false;
  double clock_before = 0.0;
};

/// Zero-priority measurement fetch: bytes move, the ledger does not.
inline probe_info apply_probe(session_core& s, const media_list& m, const session_params& prm,
                              int cdn, double megabits, throughput_source& source,
                              std::vector<event>* events = nullptr) {
  if (megabits <= 0) throw invalid_input_error("probe size must be positive");
  probe_info info;
  info.cdn = cdn;
  info.megabits = megabits;
  info.clock_before = s.clock_s;
  const auto q = source.fetch(cdn, s.clock_s, megabits, s.last_cdn);
  info.total_s = q.total_s;
  info.avg_mbps = q.avg_mbps;
  info.pooled = q.pooled;
  if (events) events->push_back({s.clock_s + q.total_s, event_kind::probe_complete, -1});
  const double play = s.startup_pending ? 0.0 : q.total_s;
  detail::advance_watch(s, m, prm, play, s.clock_s, std::numeric_limits<double>::infinity(), 0.0,
                        events);
  s.clock_s += q.total_s;
  return info;
}

/// All remaining content is local: walk the watch clock through the last swipes.
inline void advance_idle_to_end(session_core& s, const media_list& m, const session_params& prm,
                                std::vector<event>* events = nullptr) {
  const int n = static_cast<int>(m.videos.size());
  while (s.viewing < n) {
    if (s.startup_pending)
      throw invalid_input_error("idle wind-down with startup pending on an incomplete video");
    s.clock_s += s.watch_left_s;
    s.buffer_s[s.viewing] = 0.0;
    if (events) events->push_back({s.clock_s, event_kind::swipe, s.viewing});
    ++s.viewing;
    s.startup_charged = false;
    if (s.viewing < n) {
      s.watch_left_s = m.videos[s.viewing].watch_s;
      s.startup_pending = startup_would_pend(s, m, s.viewing, prm.qoe);
    } else {
      s.watch_left_s = 0.0;
    }
  }
}

}  // namespace pira
