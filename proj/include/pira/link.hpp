#pragma once

#include <map>
#include <optional>

#include "pira/predictor.hpp"
#include "pira/trace.hpp"
#include "pira/types.hpp"

namespace pira {

/// What one range download costs in wall time.
struct download_quote {
  double total_s = 0.0;   // setup + transfer; the range's d/Th_bar
  double setup_s = 0.0;
  bool pooled = false;
  double avg_mbps = 0.0;  // megabits / total_s
};

struct link_config {
  double rtt_s = 0.05;
  double setup_rtt_mult = 1.5;
  double degradation_alpha = 0.8;   // cold-connection throughput factor, first range only
  double pool_idle_timeout_s = 180; // reuse a class's connection within this window
};

/// Network realization: per-class traces plus a keep-alive connection pool.
/// Value-semantic so planners can roll copies forward without disturbing the
/// live episode state.
class link_model {
 public:
  link_model() = default;
  link_model(const trace_set* traces, link_config cfg) : traces_(traces), cfg_(cfg) {}

  const link_config& config() const { return cfg_; }

  bool pooled_at(int pan_cdn_id, double t_s) const {
    auto it = pool_.find(pan_cdn_id);
    return it != pool_.end() && t_s - it->second <= cfg_.pool_idle_timeout_s;
  }

  /// Price a transfer of `megabits` starting at start_s without touching pool state.
  download_quote quote(int pan_cdn_id, double start_s, double megabits) const {
    const auto& tr = traces_->for_cdn(pan_cdn_id);
    download_quote q;
    q.pooled = pooled_at(pan_cdn_id, start_s);
    double t = start_s;
    if (!q.pooled) {
      q.setup_s = cfg_.setup_rtt_mult * cfg_.rtt_s;
      t += q.setup_s;
      // A cold connection moves data at alpha * trace rate for this range.
      const double eff = megabits / (cfg_.degradation_alpha > 0 ? cfg_.degradation_alpha : 1.0);
      q.total_s = q.setup_s + tr.transfer_time(t, eff);
    } else {
      q.total_s = tr.transfer_time(t, megabits);
    }
    q.avg_mbps = megabits > 0 ? megabits / q.total_s : 0.0;
    return q;
  }

  /// Execute: like quote, but refreshes the pool entry at the finish time.
  download_quote download(int pan_cdn_id, double start_s, double megabits) {
    auto q = quote(pan_cdn_id, start_s, megabits);
    pool_[pan_cdn_id] = start_s + q.total_s;
    return q;
  }

  std::optional<double> pool_last_use(int pan_cdn_id) const {
    auto it = pool_.find(pan_cdn_id);
    if (it == pool_.end()) return std::nullopt;
    return it->second;
  }

  /// Undo support for in-place rollout search.
  struct pool_mark {
    int cdn;
    bool had;
    double prev;
  };
  pool_mark mark(int pan_cdn_id) const {
    auto it = pool_.find(pan_cdn_id);
    if (it == pool_.end()) return {pan_cdn_id, false, 0.0};
    return {pan_cdn_id, true, it->second};
  }
  void restore(const pool_mark& m) {
    if (m.had)
      pool_[m.cdn] = m.prev;
    else
      pool_.erase(m.cdn);
  }

  const trace_set* traces() const { return traces_; }

 private:
  const trace_set* traces_ = nullptr;
  link_config cfg_;
  std::map<int, double> pool_;  // class id -> last use (finish time)
};

}  // namespace pira
