#include <cmath>
#include <numeric>
#include <random>

#include "doctest.h"
#include "wiball/error.hpp"
#include "wiball/tracker.hpp"

using namespace wiball;

namespace {

TrackerConfig single(Vec2 start = {}, double heading = 0.0) {
  TrackerConfig cfg;
  cfg.initial_position = start;
  cfg.initial_heading = heading;
  cfg.scale_grid = {1.0};
  cfg.bias_grid = {0.0};
  return cfg;
}

double weight_sum(const TrackState& s) {
  double w = 0;
  for (const auto& h : s.hypotheses) w += h.weight;
  return w;
}

// East-west corridor y in [0, 2] with a northbound branch x in [10, 12].
FloorPlan t_corridor() {
  FloorPlan p;
  p.walls = {{{-1, 0}, {30, 0}}, {{-1, 2}, {10, 2}}, {{12, 2}, {30, 2}},
             {{10, 2}, {10, 20}}, {{12, 2}, {12, 20}}, {{-1, 0}, {-1, 2}}};
  p.landmarks = {{{11, 1}, LandmarkKind::corner}};
  p.bounds = {-2, -1, 31, 21};
  return p;
}

}  // namespace

TEST_CASE("initial_state: grid ordering and uniform weights") {
  TrackerConfig cfg;
  const TrackState s = initial_state(cfg);
  CHECK(s.hypotheses.size() == 27);
  CHECK(s.hypotheses[0].scale == 1.0);
  CHECK(s.hypotheses[0].heading_bias == 0.0);
  CHECK(weight_sum(s) == doctest::Approx(1.0));
  cfg.scale_grid.clear();
  CHECK_THROWS_AS(initial_state(cfg), ParameterError);
}

TEST_CASE("dead_reckon_step: worked examples") {
  TrackState s = dead_reckon_step(initial_state(single()), 1.0, 1.0, 0.0);
  CHECK(s.current_pose.pos.x == doctest::Approx(1.0));
  CHECK(s.current_pose.pos.y == doctest::Approx(0.0));

  s = dead_reckon_step(initial_state(single()), 1.0, 1.0, M_PI / 2);
  CHECK(s.current_pose.pos.x == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(s.current_pose.pos.y == doctest::Approx(1.0));

  TrackerConfig cfg = single();
  cfg.scale_grid = {1.2};
  s = dead_reckon_step(initial_state(cfg), 1.0, 1.0, 0.0);
  CHECK(s.current_pose.pos.x == doctest::Approx(1.2));
  CHECK(s.cumulative_distance == 1.0);
  CHECK(s.current_pose.raw_distance == 1.0);

  CHECK_THROWS_AS(dead_reckon_step(initial_state(single()), 1.0, -0.1, 0.0), ParameterError);
}

TEST_CASE("dead reckoning equals the closed-form vector sum") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> dd(0.0, 2.0), th(-1.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    TrackState s = initial_state(single({1.5, -2.0}, 0.3));
    double theta = 0.3;
    long double x = 1.5L, y = -2.0L;
    for (int i = 0; i < 100; ++i) {
      const double d = dd(rng), dt = th(rng);
      theta += dt;
      x += d * std::cos(static_cast<long double>(theta));
      y += d * std::sin(static_cast<long double>(theta));
      s = dead_reckon_step(std::move(s), i + 1.0, d, dt);
    }
    CHECK(std::abs(s.current_pose.pos.x - static_cast<double>(x)) < 1e-9);
    CHECK(std::abs(s.current_pose.pos.y - static_cast<double>(y)) < 1e-9);
  }
}

TEST_CASE("prune_and_reweight: inside corridor unchanged, crossing a wall zeroed") {
  const FloorPlan plan = t_corridor();
  TrackerConfig cfg = single({0, 1});
  cfg.scale_grid = {1.0, 1.5};
  TrackState s = initial_state(cfg);
  s = dead_reckon_step(std::move(s), 1.0, 2.0, 0.0);
  const auto before = s;
  s = prune_and_reweight(std::move(s), plan, cfg);
  CHECK(s.hypotheses.size() == before.hypotheses.size());
  for (std::size_t i = 0; i < s.hypotheses.size(); ++i) CHECK(s.hypotheses[i].weight == before.hypotheses[i].weight);

  // Turn north at x = 2 (scale 1) and x = 3 (scale 1.5): both hit y = 2.
  s = dead_reckon_step(std::move(s), 2.0, 1.5, M_PI / 2);
  s = prune_and_reweight(std::move(s), plan, cfg);
  CHECK(s.recoveries == 1);
  CHECK(weight_sum(s) == doctest::Approx(1.0));
  // Recovery restarts from the last valid pose, inside the corridor.
  CHECK(s.current_pose.pos.y < 2.0);
}

TEST_CASE("T-corridor: only the scale that turns inside the junction survives") {
  const FloorPlan plan = t_corridor();
  TrackerConfig cfg = single({0, 1});
  cfg.scale_grid = {0.9, 1.0, 1.1};
  TrackState s = initial_state(cfg);
  double t = 0;
  // 11 m east to the junction centre, turn, 5 m north.
  for (int i = 0; i < 110; ++i) {
    s = dead_reckon_step(std::move(s), t += 0.1, 0.1, 0.0);
    s = prune_and_reweight(std::move(s), plan, cfg);
  }
  CHECK(s.hypotheses.size() == 3);
  for (int i = 0; i < 50; ++i) {
    s = dead_reckon_step(std::move(s), t += 0.1, 0.1, i == 0 ? M_PI / 2 : 0.0);
    s = prune_and_reweight(std::move(s), plan, cfg);
    CHECK(weight_sum(s) == doctest::Approx(1.0));
  }
  std::vector<double> alive;
  for (const auto& h : s.hypotheses)
    if (h.alive()) alive.push_back(h.scale);
  REQUIRE(alive.size() == 1);
  CHECK(alive[0] == 1.0);
  CHECK(s.recoveries == 0);

  // Exhaustive cross-check: replay each scale alone and test its path.
  for (double scale : {0.9, 1.0, 1.1}) {
    const Vec2 corner{scale * 11.0, 1.0};
    const Vec2 end = corner + Vec2{0.0, scale * 5.0};
    const bool crosses = plan.crosses_wall({corner, end});
    CHECK(crosses == (scale != 1.0));
  }

  // The dominant trace never crosses a wall.
  const auto& tr = s.dominant().pose_trace;
  for (std::size_t i = 1; i < tr.size(); ++i) CHECK_FALSE(plan.crosses_wall({tr[i - 1].pos, tr[i].pos}));
}

namespace {

// East for `leg1` m, left turn, north for `leg2` m, at 1 m/s; distances
// overestimated by `over`.
TrackResult l_path(const FloorPlan& plan, double leg1, double leg2, double over) {
  DistanceTrack dist;
  const double dt = 0.01;
  const int n = static_cast<int>(std::round((leg1 + leg2) / dt));
  for (int i = 0; i < n; ++i) {
    dist.increments.push_back({i * dt, (i + 1) * dt, dt * (1.0 + over)});
    dist.cumulative_distance += dt * (1.0 + over);
  }
  std::vector<HeadingDelta> deltas{{leg1 + 1e-3, M_PI / 2}};
  TrackerConfig cfg = single();
  cfg.fusion_interval = 0.05;
  return track_from_increments(dist, deltas, 0.0, leg1 + leg2, plan, cfg);
}

}  // namespace

TEST_CASE("landmark_correct: L-path with 10% overestimate") {
  FloorPlan plan;
  plan.landmarks = {{{4, 0}, LandmarkKind::corner}};
  plan.bounds = {-10, -10, 20, 20};
  const auto res = l_path(plan, 4.0, 8.0, 0.10);
  REQUIRE(res.snaps == 1);
  const Vec2 end{res.trace.back().x, res.trace.back().y};
  CHECK((end - Vec2{4, 8}).norm() < 0.1);
  CHECK(res.trace.back().dominant_scale == doctest::Approx(1.0 / 1.1).epsilon(0.01));

  FloorPlan none;
  none.bounds = plan.bounds;
  const auto raw = l_path(none, 4.0, 8.0, 0.10);
  const Vec2 raw_end{raw.trace.back().x, raw.trace.back().y};
  CHECK((raw_end - Vec2{4.4, 8.8}).norm() < 1e-6);
  CHECK(raw.snaps == 0);
}

TEST_CASE("landmark_correct: no turn or distant landmark means no snap") {
  FloorPlan plan;
  plan.landmarks = {{{4, 0}, LandmarkKind::corner}};
  plan.bounds = {-10, -10, 20, 20};
  // Straight walk straight past the landmark.
  TrackerConfig cfg = single();
  TrackState s = initial_state(cfg);
  for (int i = 1; i <= 100; ++i) {
    s = dead_reckon_step(std::move(s), 0.1 * i, 0.1, 0.0);
    const auto before = s.current_pose.pos;
    s = landmark_correct(std::move(s), plan, cfg);
    CHECK(s.current_pose.pos == before);
  }
  CHECK(s.snaps == 0);

  FloorPlan far;
  far.landmarks = {{{4.4, 3.0}, LandmarkKind::corner}};
  far.bounds = plan.bounds;
  CHECK(l_path(far, 4.0, 8.0, 0.10).snaps == 0);

  FloorPlan end_only;
  end_only.landmarks = {{{4, 0}, LandmarkKind::corridor_end}};
  end_only.bounds = plan.bounds;
  CHECK(l_path(end_only, 4.0, 8.0, 0.10).snaps == 0);
}

TEST_CASE("landmark_correct: snaps move poses by at most the capture radius") {
  for (double over : {0.0, 0.1, 0.2, 0.3}) {
    FloorPlan plan;
    plan.landmarks = {{{2, 0}, LandmarkKind::corner}};
    plan.bounds = {-10, -10, 20, 20};
    TrackerConfig cfg = single();
    TrackState s = initial_state(cfg);
    double t = 0;
    for (int i = 0; i < 400; ++i) {
      const double dth = i == 200 ? M_PI / 2 : 0.0;
      s = dead_reckon_step(std::move(s), t += 0.01, 0.01 * (1 + over), dth);
      const auto before = s.hypotheses[0].pose_trace;
      s = landmark_correct(std::move(s), plan, cfg);
      const auto& after = s.hypotheses[0].pose_trace;
      for (std::size_t k = 0; k < before.size(); ++k) CHECK((after[k].pos - before[k].pos).norm() <= cfg.capture_radius);
    }
  }
}

TEST_CASE("track: stationary streams hold the pose and gaps are reported") {
  std::vector<Cir> cirs;
  Cir c;
  c.taps = {Complex(1, 0), Complex(0.5, -0.2), Complex(0.1, 0.3)};
  for (int i = 0; i < 200; ++i) {
    c.timestamp = 0.005 * i + (i >= 100 ? 1.5 : 0.0);
    cirs.push_back(c);
  }
  std::vector<ImuSample> imu;
  for (int i = 0; i < 250; ++i) imu.push_back({0.01 * i, {}, {0, 0, 9.81}});
  FloorPlan plan;
  plan.bounds = {-5, -5, 5, 5};
  TrackerConfig cfg = single({1, 2}, 0.5);
  const auto res = track(cirs, imu, plan, cfg);
  REQUIRE(res.trace.size() > 5);
  for (const auto& p : res.trace) {
    CHECK(p.x == 1.0);
    CHECK(p.y == 2.0);
    CHECK(p.heading == doctest::Approx(0.5));
  }
  REQUIRE(res.gaps.size() == 1);
  CHECK(res.gaps[0].stream == "cir");
  CHECK(res.gaps[0].t_end - res.gaps[0].t_start > 1.0);

  CHECK_THROWS_AS(track({}, imu, plan, cfg), ParameterError);
}

TEST_CASE("FloorPlan validation and CSV") {
  FloorPlan p;
  p.walls = {{{0, 0}, {0, 0}}};
  CHECK_THROWS_AS(p.validate(), ParameterError);
  p.walls.clear();
  p.bounds = {0, 0, 1, 1};
  p.landmarks = {{{2, 2}, LandmarkKind::door}};
  CHECK_THROWS_AS(p.validate(), ParameterError);
  CHECK(trace_to_csv({{0.5, 1, 2, 0.25, 3, 1.1}}) ==
        "timestamp,x,y,heading,cum_distance,dominant_scale\n0.5,1,2,0.25,3,1.1\n");
}
