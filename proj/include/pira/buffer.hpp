#pragma once

#include <algorithm>
#include <map>
#include <string>

#include "pira/types.hpp"

namespace pira {

/// Per-video buffered seconds, sharing one player-level cap.
struct buffer_ledger {
  std::map<std::string, double> buffer_s;
  double player_cap_s = 30.0;
};

inline double buffered(const buffer_ledger& l, const std::string& id) {
  auto it = l.buffer_s.find(id);
  return it == l.buffer_s.end() ? 0.0 : it->second;
}

inline double total_buffered(const buffer_ledger& l) {
  double s = 0.0;
  for (const auto& [id, b] : l.buffer_s) s += b;
  return s;
}

namespace detail {

inline double pos(double x) { return x > 0.0 ? x : 0.0; }

/// Viewing-video download. Buffer drains for the download's wall time, gains the
/// range, and waits exactly long enough that the shared cap holds afterwards:
///   wait = ((B - dl)+ + others + r - cap)+
///   B'   = ((B - dl)+ + r - wait)+
struct current_step {
  double buffer_after;
  double wait_s;
};

inline current_step step_current(double buffer_s, double others_s, double download_s,
                                 double range_s, double cap_s) {
  const double inner = pos(buffer_s - download_s);
  const double wait = pos(inner + others_s + range_s - cap_s);
  return {pos(inner + range_s - wait), wait};
}

/// Prefetch download. The viewing video drains during the transfer; the wait is
/// whatever keeps the post-update total at or under the cap, and it comes out of
/// the prefetched video's gain:
///   view' = (B_view - dl)+
///   wait  = (B_pre + r + view' + rest - cap)+
///   pre'  = (B_pre + r - wait)+
struct prefetch_step {
  double prefetch_after;
  double viewing_after;
  double wait_s;
};

inline prefetch_step step_prefetch(double prefetch_s, double viewing_s, double rest_s,
                                   double download_s, double range_s, double cap_s) {
  const double view_after = pos(viewing_s - download_s);
  const double wait = pos(prefetch_s + range_s + view_after + rest_s - cap_s);
  return {pos(prefetch_s + range_s - wait), view_after, wait};
}

}  // namespace detail

struct advance_result {
  buffer_ledger ledger;
  double download_time_s;
  double wait_time_s;
};

/// Apply one range download of the currently-viewed video to the ledger.
inline advance_result advance_buffer_current(const buffer_ledger& ledger, const media_list& media,
                                             const range_decision& dec, double throughput_mbps) {
  if (throughput_mbps <= 0) throw invalid_input_error("throughput must be positive");
  const video_spec& v = media.videos[video_index(media, dec.video_id)];
  const double d = range_bytes_mbit(v, dec.range_s);
  const double dl = d / throughput_mbps;

  const double b = buffered(ledger, dec.video_id);
  const double others = total_buffered(ledger) - b;
  const auto step = detail::step_current(b, others, dl, dec.range_s, ledger.player_cap_s);

  advance_result out{ledger, dl, step.wait_s};
  out.ledger.buffer_s[dec.video_id] = step.buffer_after;
  return out;
}

/// Apply one prefetch range download (decision video differs from the viewing video).
inline advance_result advance_buffer_prefetch(const buffer_ledger& ledger, const media_list& media,
                                              const std::string& viewing_id,
                                              const range_decision& dec, double throughput_mbps) {
  if (throughput_mbps <= 0) throw invalid_input_error("throughput must be positive");
  if (viewing_id == dec.video_id)
    throw invalid_input_error("prefetch decision targets the viewing video");
  const video_spec& v = media.videos[video_index(media, dec.video_id)];
  const double d = range_bytes_mbit(v, dec.range_s);
  const double dl = d / throughput_mbps;

  const double b_pre = buffered(ledger, dec.video_id);
  const double b_view = buffered(ledger, viewing_id);
  const double rest = total_buffered(ledger) - b_pre - b_view;
  const auto step = detail::step_prefetch(b_pre, b_view, rest, dl, dec.range_s, ledger.player_cap_s);

  advance_result out{ledger, dl, step.wait_s};
  out.ledger.buffer_s[dec.video_id] = step.prefetch_after;
  out.ledger.buffer_s[viewing_id] = step.viewing_after;
  return out;
}

}  // namespace pira
