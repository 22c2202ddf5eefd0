#pragma once

#include <algorithm>
#include <deque>
#include <map>
#include <optional>
#include <vector>

#include "pira/types.hpp"

namespace pira {

struct throughput_sample {
  int pan_cdn_id = 0;
  double t_s = 0.0;
  double mbps = 0.0;
};

struct predictor_config {
  int window = 5;                 // harmonic mean over the last W samples
  double degradation_alpha = 0.8; // first range after a cold switch runs at alpha * prediction
  double setup_rtt_mult = 1.5;    // connection setup charged as mult * RTT
  double rtt_s = 0.05;
  double probe_interval_s = 30.0; // probe a class whose last sample is older than this
  double probe_size_s = 0.5;      // probe fetch, expressed in seconds of the head video
  bool probe_cost_free = false;   // ablation switch: drop probe bytes from the bill
};

struct switch_prediction {
  double mbps;
  double setup_s;
};

/// Sliding per-class sample windows feeding the harmonic-mean predictor.
class throughput_history {
 public:
  explicit throughput_history(predictor_config cfg = {}) : cfg_(cfg) {
    if (cfg_.window < 1) throw invalid_input_error("predictor window must be >= 1");
  }

  const predictor_config& config() const { return cfg_; }

  void record(const throughput_sample& s) {
    if (s.mbps <= 0) throw invalid_input_error("throughput sample must be positive");
    auto& q = window_[s.pan_cdn_id];
    if (!q.empty() && s.t_s < q.back().t_s)
      throw invalid_input_error("sample timestamps must be nondecreasing per class");
    q.push_back(s);
    while (static_cast<int>(q.size()) > cfg_.window) q.pop_front();
  }

  /// Harmonic mean of the retained window; empty when the class has no samples.
  std::optional<double> predict(int pan_cdn_id) const {
    auto it = window_.find(pan_cdn_id);
    if (it == window_.end() || it->second.empty()) return std::nullopt;
    double inv = 0.0;
    for (const auto& s : it->second) inv += 1.0 / s.mbps;
    return static_cast<double>(it->second.size()) / inv;
  }

  /// Prediction for the first range after switching classes: degraded throughput
  /// plus the connection-setup latency.
  std::optional<switch_prediction> predict_after_switch(int from, int to) const {
    if (from == to) throw invalid_input_error("switch prediction requires distinct classes");
    auto p = predict(to);
    if (!p) return std::nullopt;
    return switch_prediction{cfg_.degradation_alpha * *p, cfg_.setup_rtt_mult * cfg_.rtt_s};
  }

  std::optional<double> last_sample_time(int pan_cdn_id) const {
    auto it = window_.find(pan_cdn_id);
    if (it == window_.end() || it->second.empty()) return std::nullopt;
    return it->second.back().t_s;
  }

  /// Classes whose freshest sample is older than the probe interval (or missing).
  std::vector<int> probe_due(const std::vector<int>& classes, double now_s) const {
    std::vector<int> due;
    for (int id : classes) {
      auto t = last_sample_time(id);
      if (!t || now_s - *t > cfg_.probe_interval_s) due.push_back(id);
    }
    return due;
  }

  std::size_t sample_count(int pan_cdn_id) const {
    auto it = window_.find(pan_cdn_id);
    return it == window_.end() ? 0 : it->second.size();
  }

 private:
  predictor_config cfg_;
  std::map<int, std::deque<throughput_sample>> window_;
};

}  // namespace pira
