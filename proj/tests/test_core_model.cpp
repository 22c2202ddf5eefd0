// Buffer dynamics, wait, stall/startup charges, cost and QoE: frozen worked
// examples plus property checks, cross-validated against an independent
// step-by-step evaluator on randomized micro-episodes.

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <map>
#include <vector>

#include "pira/pira.hpp"
#include "support.hpp"

using namespace pira;
using Catch::Approx;

namespace {
constexpr double kTol = 1e-12;
}

TEST_CASE("current-video buffer step matches worked examples") {
  // Plenty of headroom: drain 1 s during the download, gain the 2 s range.
  auto a = detail::step_current(2.0, 0.0, 1.0, 2.0, 30.0);
  CHECK(a.buffer_after == Approx(3.0).margin(kTol));
  CHECK(a.wait_s == Approx(0.0).margin(kTol));

  // Buffer underruns during the download; the inner term clamps at zero.
  auto b = detail::step_current(0.5, 0.0, 1.0, 2.0, 30.0);
  CHECK(b.buffer_after == Approx(2.0).margin(kTol));
  CHECK(b.wait_s == Approx(0.0).margin(kTol));

  // Cap pressure: inner 3 + others 25 + range 4 = 32 over a 30 s cap.
  auto c = detail::step_current(4.0, 25.0, 1.0, 4.0, 30.0);
  CHECK(c.wait_s == Approx(2.0).margin(kTol));
  CHECK(c.buffer_after == Approx(5.0).margin(kTol));
  // The cap is exactly met after the wait.
  CHECK(c.buffer_after + 25.0 == Approx(30.0).margin(kTol));
}

TEST_CASE("prefetch buffer step matches worked examples") {
  // Viewing video drains while another video's range lands.
  auto a = detail::step_prefetch(0.0, 10.0, 0.0, 2.0, 4.0, 30.0);
  CHECK(a.prefetch_after == Approx(4.0).margin(kTol));
  CHECK(a.viewing_after == Approx(8.0).margin(kTol));
  CHECK(a.wait_s == Approx(0.0).margin(kTol));

  // Viewing buffer underruns during the transfer.
  auto b = detail::step_prefetch(0.0, 1.0, 0.0, 2.0, 4.0, 30.0);
  CHECK(b.viewing_after == Approx(0.0).margin(kTol));

  // Oversubscribed start state: the wait comes out of the prefetch gain and
  // can swallow it entirely.
  auto c = detail::step_prefetch(0.0, 10.0, 24.0, 2.0, 4.0, 30.0);
  CHECK(c.wait_s == Approx(6.0).margin(kTol));
  CHECK(c.prefetch_after == Approx(0.0).margin(kTol));
  CHECK(c.viewing_after == Approx(8.0).margin(kTol));
}

TEST_CASE("buffer step properties hold on random inputs") {
  rng64 rng(20240813);
  for (int i = 0; i < 20000; ++i) {
    const double cap = rng.uniform(5.0, 40.0);
    const double B = rng.uniform(0.0, cap);
    const double others = rng.uniform(0.0, cap - B);
    const double dl = rng.uniform(0.0, 10.0);
    const double r = rng.uniform(0.01, 6.0);

    const auto st = detail::step_current(B, others, dl, r, cap);
    CHECK(st.buffer_after >= -kTol);
    CHECK(st.wait_s >= -kTol);
    // Post-step total never exceeds the cap when the pre-step total respected it.
    CHECK(st.buffer_after + others <= cap + 1e-9);
    // The wait never exceeds the range gained.
    CHECK(st.wait_s <= r + 1e-9);
    // Conservation without cap pressure and without underrun.
    if (st.wait_s == 0.0 && B - dl >= 0.0)
      CHECK(st.buffer_after == Approx(B - dl + r).margin(1e-9));
    // Monotone in the range duration.
    const auto st2 = detail::step_current(B, others, dl, r + 0.5, cap);
    CHECK(st2.buffer_after >= st.buffer_after - 1e-9);

    const double pre = rng.uniform(0.0, cap - B - others);
    const auto pf = detail::step_prefetch(pre, B, others, dl, r, cap);
    CHECK(pf.prefetch_after >= -kTol);
    CHECK(pf.viewing_after >= -kTol);
    CHECK(pf.wait_s <= r + 1e-9);
    CHECK(pf.prefetch_after + pf.viewing_after + others <= cap + 1e-9);
    CHECK(pf.viewing_after == Approx(std::max(B - dl, 0.0)).margin(kTol));
  }
}

TEST_CASE("string-keyed ledger ops agree with the scalar steps") {
  media_list m;
  m.videos = {testsup::vid("a", 60, 4.0, 30), testsup::vid("b", 30, 4.0, 20)};

  buffer_ledger led;
  led.player_cap_s = 30.0;
  led.buffer_s = {{"a", 4.0}, {"b", 25.0}};

  range_decision dec{"a", 1, 4.0};
  // bitrate 4 Mbps, range 4 s -> 16 Mb; at 16 Mbps the download takes 1 s.
  auto res = advance_buffer_current(led, m, dec, 16.0);
  CHECK(res.download_time_s == Approx(1.0).margin(kTol));
  CHECK(res.wait_time_s == Approx(2.0).margin(kTol));
  CHECK(buffered(res.ledger, "a") == Approx(5.0).margin(kTol));
  CHECK(buffered(res.ledger, "b") == Approx(25.0).margin(kTol));
  CHECK(total_buffered(res.ledger) == Approx(30.0).margin(kTol));

  range_decision pre{"b", 2, 4.0};
  buffer_ledger led2;
  led2.player_cap_s = 30.0;
  led2.buffer_s = {{"a", 10.0}, {"b", 0.0}};
  auto res2 = advance_buffer_prefetch(led2, m, "a", pre, 8.0);
  CHECK(res2.download_time_s == Approx(2.0).margin(kTol));
  CHECK(buffered(res2.ledger, "a") == Approx(8.0).margin(kTol));
  CHECK(buffered(res2.ledger, "b") == Approx(4.0).margin(kTol));

  CHECK_THROWS_AS(advance_buffer_current(led, m, dec, 0.0), invalid_input_error);
  CHECK_THROWS_AS(advance_buffer_current(led, m, dec, -3.0), invalid_input_error);
  range_decision bad{"zzz", 1, 2.0};
  CHECK_THROWS_AS(advance_buffer_current(led, m, bad, 10.0), not_found_error);
  CHECK_THROWS_AS(advance_buffer_prefetch(led2, m, "b", pre, 8.0), invalid_input_error);
}

TEST_CASE("rebuffer and startup charges match worked examples") {
  CHECK(rebuffer_time(2.0, 3.0) == Approx(1.0).margin(kTol));
  CHECK(rebuffer_time(3.0, 3.0) == Approx(0.0).margin(kTol));
  CHECK(rebuffer_time(0.0, 1.5) == Approx(1.5).margin(kTol));
  CHECK(rebuffer_time(5.0, 3.0) == Approx(0.0).margin(kTol));

  CHECK(startup_delay(2.0, 2.0, 5.0) == Approx(0.0).margin(kTol));
  CHECK(startup_delay(0.0, 2.0, 1.2) == Approx(1.2).margin(kTol));
  CHECK(startup_delay(1.9, 2.0, 0.7) == Approx(0.7).margin(kTol));
}

TEST_CASE("traffic cost converts megabits through per-megabyte prices") {
  std::vector<pan_cdn_class> classes = default_classes();
  CHECK(traffic_cost({}, classes) == Approx(0.0).margin(kTol));

  std::vector<pan_cdn_class> unit = {{1, "one", 1.0}, {2, "two", 0.25}};
  CHECK(traffic_cost_mbit(8.0, 1.0) == Approx(1.0).margin(kTol));
  CHECK(traffic_cost({{1, 8.0}}, unit) == Approx(1.0).margin(kTol));
  CHECK(traffic_cost({{1, 8.0}, {2, 16.0}}, unit) == Approx(1.5).margin(kTol));
  CHECK_THROWS_AS(traffic_cost_mbit(-1.0, 1.0), invalid_input_error);

  // Linearity and homogeneity in the traffic vector.
  rng64 rng(77);
  for (int i = 0; i < 1000; ++i) {
    const double a = rng.uniform(0.0, 100.0), b = rng.uniform(0.0, 100.0);
    const double k = rng.uniform(0.0, 5.0);
    const double ca = traffic_cost({{1, a}, {2, b}}, unit);
    CHECK(traffic_cost({{1, k * a}, {2, k * b}}, unit) == Approx(k * ca).margin(1e-9));
    const double cb = traffic_cost({{1, b}, {2, a}}, unit);
    CHECK(traffic_cost({{1, a + b}, {2, a + b}}, unit) == Approx(ca + cb).margin(1e-9));
  }
}

TEST_CASE("per-video QoE matches worked examples and stays unclamped") {
  qoe_params p;
  p.mu1 = 2.0;
  p.mu2 = 0.5;
  CHECK(qoe_video(0.0, 0.0, 10.0, p) == Approx(1.0).margin(kTol));
  CHECK(qoe_video(1.0, 0.4, 10.0, p) == Approx(0.6).margin(kTol));
  // Heavy rebuffering drives the score negative; no clamping.
  CHECK(qoe_video(6.0, 0.0, 10.0, p) == Approx(-0.2).margin(kTol));
  CHECK_THROWS_AS(qoe_video(0.0, 0.0, 0.0, p), invalid_input_error);
  CHECK_THROWS_AS(qoe_video(0.0, 0.0, -2.0, p), invalid_input_error);
}

TEST_CASE("list QoE is the plain sum over videos") {
  qoe_params p;
  p.mu1 = 2.0;
  p.mu2 = 0.5;
  media_list empty;
  CHECK(qoe_media_list({}, empty, p) == Approx(0.0).margin(kTol));

  media_list m;
  m.videos = {testsup::vid("a", 60, 4.0, 10), testsup::vid("b", 30, 4.0, 10)};
  std::vector<video_metrics> per(2);
  per[0] = {1.0, 1, 0.4};  // 0.6
  per[1] = {0.0, 0, 0.0};  // 1.0
  CHECK(qoe_media_list(per, m, p) == Approx(1.6).margin(kTol));
  per[1].startup_s = 0.4;
  CHECK(qoe_media_list(per, m, p) == Approx(1.4).margin(kTol));

  per.pop_back();
  CHECK_THROWS_AS(qoe_media_list(per, m, p), invalid_input_error);
}

TEST_CASE("utility is QoE minus priced traffic") {
  CHECK(utility(1.6, 1.5, 0.3) == Approx(1.15).margin(kTol));
  CHECK(utility(0.8, 12.0, 0.0) == Approx(0.8).margin(kTol));
  CHECK(utility(0.8, 0.0, 0.3) == Approx(0.8).margin(kTol));

  // Adding a constant to every QoE shifts every utility equally, so argmax
  // over candidate plans is invariant.
  rng64 rng(31);
  for (int i = 0; i < 1000; ++i) {
    const double q1 = rng.uniform(-2, 2), q2 = rng.uniform(-2, 2);
    const double c1 = rng.uniform(0, 5), c2 = rng.uniform(0, 5);
    const double g = rng.uniform(0, 1), shift = rng.uniform(-10, 10);
    const bool first = utility(q1, c1, g) > utility(q2, c2, g);
    const bool first_shifted = utility(q1 + shift, c1, g) > utility(q2 + shift, c2, g);
    CHECK(first == first_shifted);
  }
}

TEST_CASE("engine accounting matches the independent evaluator on random micro-episodes") {
  auto classes = default_classes();
  session_params prm;
  rng64 scen(424242);

  int checked = 0;
  for (int trial = 0; trial < 200; ++trial) {
    // Small random episode: 1-3 videos, varied durations and cache maps.
    media_list m;
    const int nv = 1 + scen.uniform_int(3);
    for (int i = 0; i < nv; ++i) {
      std::vector<int> cached = {1};
      for (int c = 2; c <= 4; ++c)
        if (scen.bernoulli(0.6)) cached.push_back(c);
      const double dur = scen.uniform(3.0, 20.0);
      const double watch = std::min(dur, scen.uniform(2.0, 18.0));
      m.videos.push_back(
          testsup::vid("v" + std::to_string(i), dur, scen.uniform(1.0, 6.0), watch, cached));
    }

    // Varied constant throughput per class, occasionally slower than bitrate.
    std::vector<std::pair<int, double>> rates;
    for (int c = 1; c <= 4; ++c) rates.push_back({c, scen.uniform(1.5, 30.0)});
    auto traces = testsup::const_traces(rates, 4000.0);

    testsup::random_strategy strat(1000 + trial);
    auto ep = testsup::run_micro(m, traces, strat, prm, classes);

    auto ref = testsup::micro_eval(m, ep.decisions, classes, prm);
    for (int i = 0; i < nv; ++i) {
      const auto& id = m.videos[i].id;
      const double ref_reb = ref.rebuffer_s.count(id) ? ref.rebuffer_s.at(id) : 0.0;
      const double ref_st = ref.startup_s.count(id) ? ref.startup_s.at(id) : 0.0;
      CHECK(ep.metrics.per_video[i].rebuffer_s == Approx(ref_reb).margin(1e-9));
      CHECK(ep.metrics.per_video[i].startup_s == Approx(ref_st).margin(1e-9));
    }
    for (const auto& [cdn, mbit] : ref.megabits)
      CHECK(ep.metrics.megabits_by_cdn.at(cdn) == Approx(mbit).margin(1e-9));
    CHECK(ep.metrics.total_cost == Approx(ref.cost).margin(1e-9));
    CHECK(ep.metrics.qoe_total == Approx(ref.qoe).margin(1e-9));
    CHECK(ep.metrics.utility == Approx(ref.utility).margin(1e-9));
    CHECK(ep.wall_clock_end_s == Approx(ref.wall_end_s).margin(1e-9));
    ++checked;
  }
  CHECK(checked == 200);
}

TEST_CASE("session engine honors the cap and never overshoots video duration") {
  auto classes = default_classes();
  session_params prm;
  rng64 scen(999);

  for (int trial = 0; trial < 50; ++trial) {
    media_list m;
    const int nv = 1 + scen.uniform_int(3);
    for (int i = 0; i < nv; ++i)
      m.videos.push_back(testsup::vid("v" + std::to_string(i), scen.uniform(4.0, 15.0), 4.0,
                                      scen.uniform(2.0, 10.0)));
    auto traces = testsup::const_traces({{1, 20}, {2, 15}, {3, 10}, {4, 5}}, 2000.0);

    link_model link(&traces, {});
    link_source src(&link);
    session_core s = make_session(m, prm);
    testsup::random_strategy strat(31337 + trial);
    while (true) {
      const int head = sequence_head(s, m);
      if (head < 0) break;
      strategy_context ctx{s, m, classes};
      auto act = strat.decide(ctx);
      apply_range(s, m, prm, video_index(m, act.decision.video_id), act.decision.pan_cdn_id,
                  act.decision.range_s, src);
      double total = 0.0;
      for (double b : s.buffer_s) total += b;
      CHECK(total <= prm.qoe.player_cap_s + 1e-9);
      for (int i = 0; i < nv; ++i) {
        CHECK(s.downloaded_s[i] <= m.videos[i].duration_s + 1e-9);
        CHECK(s.buffer_s[i] >= -1e-12);
      }
    }
    // Head exhausted: everything from the viewing position on is fully local.
    // Videos the viewer swiped past mid-download keep their partial tails.
    for (int i = s.viewing; i < nv; ++i)
      CHECK(s.downloaded_s[i] == Approx(m.videos[i].duration_s).margin(1e-9));
    advance_idle_to_end(s, m, prm);
    CHECK(s.viewing == nv);
  }
}

TEST_CASE("range requests are trimmed to chunk, remainder, and startup need") {
  session_params prm;
  media_list m;
  m.videos = {testsup::vid("a", 10, 4.0, 8)};
  session_core s = make_session(m, prm);

  // Startup pending with an empty buffer: a 1 s request is bumped to the
  // startup threshold.
  CHECK(constrained_range(s, m, prm, 0, 1.0) == Approx(2.0).margin(kTol));
  // Above the threshold the request passes through (capped by the chunk).
  CHECK(constrained_range(s, m, prm, 0, 3.0) == Approx(3.0).margin(kTol));
  CHECK(constrained_range(s, m, prm, 0, 9.0) == Approx(4.0).margin(kTol));

  s.startup_pending = false;
  s.downloaded_s[0] = 9.5;
  CHECK(constrained_range(s, m, prm, 0, 4.0) == Approx(0.5).margin(kTol));
}

TEST_CASE("startup clears when the whole video is local even below the threshold") {
  // The neighbor's 29 s of prefetched buffer pins the 30 s cap, so every range
  // for the viewing video is throttled and its buffer can never accumulate the
  // 2 s startup threshold. Completing the download must still release playback,
  // or the session would deadlock with nothing left to fetch.
  session_params prm;
  media_list m;
  m.videos = {testsup::vid("a", 4, 4.0, 4, {1}), testsup::vid("b", 29, 4.0, 5, {1})};

  auto traces = testsup::const_traces({{1, 20.0}}, 1000.0);
  link_model link(&traces, {});
  link_source src(&link);
  session_core s = make_session(m, prm);
  s.buffer_s[1] = 29.0;
  s.downloaded_s[1] = 29.0;
  int guard = 0;
  while (!video_complete(s, m, 0)) {
    REQUIRE(++guard < 100);
    CHECK(s.startup_pending);
    apply_range(s, m, prm, 0, 1, 0.5, src);
    CHECK(s.buffer_s[0] < prm.qoe.tau_st_s);
  }
  CHECK_FALSE(s.startup_pending);
  CHECK(s.buffer_s[0] < prm.qoe.tau_st_s);
}
