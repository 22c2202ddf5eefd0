#pragma once

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "pira/types.hpp"

namespace pira {

/// One class's bandwidth series: piecewise-constant, 1-second bins from t = 0.
struct throughput_trace {
  int pan_cdn_id = 0;
  std::vector<double> mbps;

  double duration_s() const { return static_cast<double>(mbps.size()); }

  double rate_at(double t_s) const {
    if (t_s < 0 || mbps.empty()) throw invalid_input_error("trace time out of range");
    auto bin = static_cast<std::size_t>(t_s);
    if (bin >= mbps.size()) throw episode_truncated_error("trace exhausted at t=" + std::to_string(t_s));
    return mbps[bin];
  }

  /// Wall time to move `megabits` starting at start_s, integrating bin by bin.
  double transfer_time(double start_s, double megabits) const {
    if (megabits < 0) throw invalid_input_error("negative transfer size");
    if (start_s < 0) throw invalid_input_error("negative start time");
    if (megabits == 0) return 0.0;
    double t = start_s;
    double left = megabits;
    while (left > 1e-15) {
      auto bin = static_cast<std::size_t>(t);
      if (bin >= mbps.size())
        throw episode_truncated_error("trace exhausted during transfer at t=" + std::to_string(t));
      const double rate = mbps[bin];
      const double bin_end = static_cast<double>(bin + 1);
      const double span = bin_end - t;
      const double cap = rate * span;
      if (cap >= left) {
        t += left / rate;
        left = 0;
      } else {
        left -= cap;
        t = bin_end;
      }
    }
    return t - start_s;
  }
};

/// A full trace file: one series per class, tagged with id and period.
struct trace_set {
  std::string id;
  std::string period;  // off-peak | peak | evening-peak
  std::vector<throughput_trace> traces;

  const throughput_trace& for_cdn(int pan_cdn_id) const {
    for (const auto& t : traces)
      if (t.pan_cdn_id == pan_cdn_id) return t;
    throw not_found_error("no trace for pan-CDN " + std::to_string(pan_cdn_id));
  }
};

namespace detail {

/// Shortest decimal string that parses back to exactly the same double.
inline std::string fmt_double(double v) {
  char buf[40];
  for (int prec = 1; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

inline double parse_double(const std::string& s, std::size_t line) {
  try {
    std::size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos != s.size()) throw parse_error(line, "trailing characters in number '" + s + "'");
    return v;
  } catch (const parse_error&) {
    throw;
  } catch (const std::exception&) {
    throw parse_error(line, "bad number '" + s + "'");
  }
}

inline long parse_int(const std::string& s, std::size_t line) {
  try {
    std::size_t pos = 0;
    long v = std::stol(s, &pos);
    if (pos != s.size()) throw parse_error(line, "trailing characters in integer '" + s + "'");
    return v;
  } catch (const parse_error&) {
    throw;
  } catch (const std::exception&) {
    throw parse_error(line, "bad integer '" + s + "'");
  }
}

}  // namespace detail

/// Text form:
///   # trace id=<id> period=<period>
///   cdn_id,t_s,mbps   (1-second cadence, contiguous per class)
inline std::string serialize(const trace_set& ts) {
  std::string out = "# trace id=" + ts.id + " period=" + ts.period + "\n";
  out += "cdn_id,t_s,mbps\n";
  for (const auto& tr : ts.traces)
    for (std::size_t i = 0; i < tr.mbps.size(); ++i)
      out += std::to_string(tr.pan_cdn_id) + "," + std::to_string(i) + "," +
             detail::fmt_double(tr.mbps[i]) + "\n";
  return out;
}

inline trace_set parse_trace_set(const std::string& text) {
  trace_set ts;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  std::map<int, std::vector<double>> series;
  std::map<int, long> next_t;

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      auto idp = line.find("id=");
      auto pp = line.find("period=");
      if (idp == std::string::npos || pp == std::string::npos)
        throw parse_error(line_no, "trace header must carry id= and period=");
      ts.id = line.substr(idp + 3, line.find(' ', idp + 3) - (idp + 3));
      ts.period = line.substr(pp + 7);
      have_header = true;
      continue;
    }
    if (line == "cdn_id,t_s,mbps") continue;
    auto cols = detail::split(line, ',');
    if (cols.size() != 3) throw parse_error(line_no, "expected cdn_id,t_s,mbps");
    const long cdn = detail::parse_int(cols[0], line_no);
    const long t = detail::parse_int(cols[1], line_no);
    const double mbps = detail::parse_double(cols[2], line_no);
    if (mbps <= 0) throw parse_error(line_no, "throughput must be positive");
    auto [it, fresh] = next_t.emplace(cdn, 0);
    if (t != it->second)
      throw parse_error(line_no, "gap in trace for pan-CDN " + std::to_string(cdn) +
                                     ": expected t=" + std::to_string(it->second));
    it->second = t + 1;
    series[static_cast<int>(cdn)].push_back(mbps);
  }
  if (!have_header) throw parse_error(line_no == 0 ? 1 : line_no, "missing trace header");
  if (series.empty()) throw parse_error(line_no == 0 ? 1 : line_no, "trace has no rows");
  for (auto& [cdn, mbps] : series) ts.traces.push_back({cdn, std::move(mbps)});
  return ts;
}

/// Workload text form:
///   # workload
///   id,duration_s,bitrate_mbps,watch_s,cached_on   (cached_on as id|id|...)
inline std::string serialize(const media_list& m) {
  std::string out = "# workload\n";
  out += "id,duration_s,bitrate_mbps,watch_s,cached_on\n";
  for (const auto& v : m.videos) {
    std::string cached;
    for (std::size_t i = 0; i < v.cached_on.size(); ++i) {
      if (i) cached += '|';
      cached += std::to_string(v.cached_on[i]);
    }
    out += v.id + "," + detail::fmt_double(v.duration_s) + "," + detail::fmt_double(v.bitrate_mbps) +
           "," + detail::fmt_double(v.watch_s) + "," + cached + "\n";
  }
  return out;
}

inline media_list parse_workload(const std::string& text, double chunk_s = 4.0) {
  media_list m;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (line == "id,duration_s,bitrate_mbps,watch_s,cached_on") continue;
    auto cols = detail::split(line, ',');
    if (cols.size() != 5) throw parse_error(line_no, "expected id,duration_s,bitrate_mbps,watch_s,cached_on");
    video_spec v;
    v.id = cols[0];
    v.duration_s = detail::parse_double(cols[1], line_no);
    v.bitrate_mbps = detail::parse_double(cols[2], line_no);
    v.watch_s = detail::parse_double(cols[3], line_no);
    v.chunk_s = chunk_s;
    for (const auto& tok : detail::split(cols[4], '|')) {
      if (tok.empty()) throw parse_error(line_no, "empty cached_on entry");
      v.cached_on.push_back(static_cast<int>(detail::parse_int(tok, line_no)));
    }
    try {
      validate(v);
    } catch (const invalid_input_error& e) {
      throw parse_error(line_no, e.what());
    }
    m.videos.push_back(std::move(v));
  }
  if (m.videos.empty()) throw parse_error(line_no == 0 ? 1 : line_no, "workload has no videos");
  return m;
}

}  // namespace pira
