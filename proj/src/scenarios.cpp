#include "wiball/scenarios.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include "wiball/error.hpp"
#include "wiball/io.hpp"

namespace wiball {

using nlohmann::json;

namespace {

// Runs fn(i) for i in [0, n) on up to hardware_concurrency threads. Results
// are stored by index, so output order never depends on scheduling.
template <class F>
auto parallel_map(std::size_t n, F&& fn) -> std::vector<decltype(fn(std::size_t{}))> {
  using R = decltype(fn(std::size_t{}));
  std::vector<std::optional<R>> slots(n);
  const std::size_t workers = std::clamp<std::size_t>(std::thread::hardware_concurrency(), 1, std::max<std::size_t>(n, 1));
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto work = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        slots[i] = fn(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        next = n;
      }
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (error) std::rethrow_exception(error);
  std::vector<R> out;
  out.reserve(n);
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq ss{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                   static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  std::mt19937_64 rng(ss);
  return rng();
}

struct Extremum {
  double x;
  double y;
};

// Vertex of the parabola through three equally spaced samples.
Extremum parabolic_vertex(double x1, double h, double y0, double y1, double y2) {
  const double denom = y0 - 2.0 * y1 + y2;
  if (denom == 0.0) return {x1, y1};
  const double delta = std::clamp(0.5 * (y0 - y2) / denom, -1.0, 1.0);
  return {x1 + delta * h, y1 - 0.25 * (y0 - y2) * delta};
}

double mean_of(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sample_std(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double acc = 0.0;
  for (double x : v) acc += (x - m) * (x - m);
  return std::sqrt(acc / static_cast<double>(v.size() - 1));
}

std::vector<double> make_times(double duration, double period) {
  const auto n = static_cast<std::size_t>(std::floor(duration / period + 1e-9)) + 1;
  std::vector<double> t(n);
  for (std::size_t k = 0; k < n; ++k) t[k] = static_cast<double>(k) * period;
  return t;
}

DistancePipelineConfig with_period(DistancePipelineConfig p, double period) {
  p.sample_period = period;
  return p;
}

}  // namespace

double percentile(std::vector<double> v, double p) {
  if (v.empty()) throw ParameterError("percentile: empty sample");
  if (!(p >= 0 && p <= 100)) throw ParameterError("percentile: p must be in [0, 100]");
  std::sort(v.begin(), v.end());
  const double pos = p / 100.0 * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

// Scenario names

const std::vector<std::string>& scenario_names() {
  static const std::vector<std::string> names{"bessel_convergence", "trrs_vs_distance", "train_loop",
                                              "walk_distance",      "office_track",     "error_cdf",
                                              "packet_loss_sweep"};
  return names;
}

Scenario parse_scenario(const std::string& name) {
  const auto& names = scenario_names();
  const auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) throw ConfigError("unknown scenario '" + name + "'");
  return static_cast<Scenario>(it - names.begin());
}

std::string scenario_name(Scenario s) { return scenario_names().at(static_cast<std::size_t>(s)); }

SceneParams focal_scene_defaults() {
  SceneParams p;
  p.n_scatterers = 200;
  p.region_side = 7.5;
  p.tx_rx_separation = 30.0;
  p.direct_path = false;
  return p;
}

SceneParams reverberant_scene_defaults() {
  SceneParams p;
  p.n_scatterers = 1000;
  p.region_side = 150.0;
  p.tx_rx_separation = 20.0;
  p.direct_path = false;
  return p;
}

// Focal-spot statistics

FocalCurve focal_curve(const FocalCurveConfig& cfg) {
  if (cfg.seeds.empty()) throw ParameterError("focal_curve: no seeds");
  if (cfg.points < 3) throw ParameterError("focal_curve: need at least 3 distance points");
  if (!(cfg.max_distance_wl > 0)) throw ParameterError("focal_curve: max distance must be positive");
  if (cfg.directions == 0) throw ParameterError("focal_curve: need at least one direction");

  const double lambda = kSpeedOfLight / cfg.scene.carrier_f0;
  const double step = cfg.max_distance_wl / static_cast<double>(cfg.points - 1);
  FocalCurve out;
  out.bandwidth = cfg.scene.bandwidth;
  for (std::size_t i = 0; i < cfg.points; ++i) out.distance_wl.push_back(static_cast<double>(i) * step);

  // Per seed: sum and sum of squares over directions.
  auto per_seed = parallel_map(cfg.seeds.size(), [&](std::size_t si) {
    SceneParams p = cfg.scene;
    p.seed = cfg.seeds[si];
    p.roaming_radius = cfg.max_distance_wl * lambda;
    const Scene scene = generate_scene(p);
    const CirSynthesizer synth(scene);
    const Cir ref = synth(scene.rx_focal_pos, 0.0);
    std::mt19937_64 rng(mix_seed(p.seed, 7));
    const double offset = std::uniform_real_distribution<double>(0.0, kTwoPi)(rng);
    std::vector<double> sum(cfg.points, 0.0), sq(cfg.points, 0.0);
    for (std::size_t k = 0; k < cfg.directions; ++k) {
      const Vec2 u = unit_vector(offset + kTwoPi * static_cast<double>(k) / static_cast<double>(cfg.directions));
      for (std::size_t i = 0; i < cfg.points; ++i) {
        const Cir c = synth(scene.rx_focal_pos + u * (out.distance_wl[i] * lambda), 0.0);
        const double v = trrs(ref, c);
        sum[i] += v;
        sq[i] += v * v;
      }
    }
    return std::make_pair(sum, sq);
  });

  const double n = static_cast<double>(cfg.seeds.size() * cfg.directions);
  double se = 0.0;
  for (std::size_t i = 0; i < cfg.points; ++i) {
    double s = 0.0, q = 0.0;
    for (const auto& [sum, sq] : per_seed) {
      s += sum[i];
      q += sq[i];
    }
    const double m = s / n;
    out.mean_trrs.push_back(m);
    out.std_trrs.push_back(n > 1 ? std::sqrt(std::max(0.0, (q - n * m * m) / (n - 1))) : 0.0);
    out.reference.push_back(bessel_reference(out.distance_wl[i] * lambda, lambda));
    se += (m - out.reference[i]) * (m - out.reference[i]);
  }
  out.rmse = std::sqrt(se / static_cast<double>(cfg.points));

  const auto& y = out.mean_trrs;
  std::size_t null_idx = 0;
  for (std::size_t i = 1; i + 1 < y.size(); ++i) {
    if (y[i] < y[i - 1] && y[i] <= y[i + 1]) {
      const Extremum e = parabolic_vertex(out.distance_wl[i], step, y[i - 1], y[i], y[i + 1]);
      out.first_null_wl = e.x;
      out.first_null_value = e.y;
      null_idx = i;
      break;
    }
  }
  if (out.first_null_wl) {
    for (std::size_t i = null_idx + 1; i + 1 < y.size(); ++i) {
      if (y[i] > y[i - 1] && y[i] >= y[i + 1]) {
        out.first_peak_wl = parabolic_vertex(out.distance_wl[i], step, y[i - 1], y[i], y[i + 1]).x;
        break;
      }
    }
  }
  return out;
}

// Moving receivers

SpeedTrial constant_speed_trial(const SpeedTrialConfig& cfg) {
  if (!(cfg.speed > 0) || !(cfg.duration > 0) || !(cfg.sample_period > 0))
    throw ParameterError("constant_speed_trial: speed, duration and period must be positive");
  const double lambda = kSpeedOfLight / cfg.scene.carrier_f0;
  const double length = cfg.speed * cfg.duration;
  SceneParams p = cfg.scene;
  p.seed = cfg.seed;
  p.roaming_radius = length / 2 + 1.0;
  const Scene scene = generate_scene(p);

  std::mt19937_64 rng(mix_seed(cfg.seed, 11));
  const Vec2 u = unit_vector(std::uniform_real_distribution<double>(0.0, kTwoPi)(rng));
  const Vec2 start = scene.rx_focal_pos - u * (length / 2);
  std::optional<NoiseModel> noise;
  if (cfg.snr_db) noise = NoiseModel{*cfg.snr_db, mix_seed(cfg.seed, 12)};
  const auto cirs =
      synthesize_trajectory(scene, {{start, 0.0}, {start + u * length, cfg.duration}}, cfg.sample_period, noise);
  const auto res = estimate_distance(cirs, lambda, with_period(cfg.pipeline, cfg.sample_period));

  SpeedTrial out;
  out.true_speed = cfg.speed;
  std::vector<double> v;
  for (const auto& s : res.speeds)
    if (s.timestamp >= cfg.pipeline.max_lag && s.confidence > 0) v.push_back(s.speed);
  out.valid_columns = v.size();
  out.mean_speed = mean_of(v);
  out.distance_ratio = res.track.cumulative_distance / length;
  return out;
}

double oracle_profile_speed(double speed, double wavelength, double sample_period, double max_lag,
                            const PeakFitConfig& cfg) {
  const auto rows = static_cast<std::size_t>(std::floor(max_lag / sample_period + 1e-9));
  LagProfile column;
  for (std::size_t j = 1; j <= rows; ++j) {
    const double lag = static_cast<double>(j) * sample_period;
    column.emplace_back(lag, bessel_reference(speed * lag, wavelength));
  }
  const SpeedEstimate e = estimate_speed(column, 0.0, wavelength, cfg);
  if (!(e.confidence > 0)) throw DegenerateInputError("oracle_profile_speed: no peak within max_lag");
  return e.speed;
}

LapResult simulate_lap(const LoopConfig& cfg, std::uint64_t seed) {
  const double arc_len = kPi * cfg.turn_radius;
  const double straight = (cfg.loop_length - 2 * arc_len) / 2;
  if (!(straight > 0)) throw ParameterError("simulate_lap: turn radius too large for the loop length");
  if (!(cfg.margin > 0)) throw ParameterError("simulate_lap: margin must be positive");
  const double lambda = kSpeedOfLight / cfg.scene.carrier_f0;

  // Anchor at the origin, mid-way along the first straight, heading east.
  Route route({-cfg.margin, 0.0}, 0.0);
  route.add_line(cfg.margin + straight / 2);
  route.add_arc(cfg.turn_radius, kPi);
  route.add_line(straight);
  route.add_arc(cfg.turn_radius, kPi);
  route.add_line(straight / 2 + cfg.margin + 1.0);

  // Lap coordinate intervals occupied by the two turns.
  const double turns[2][2] = {{straight / 2, straight / 2 + arc_len},
                              {1.5 * straight + arc_len, 1.5 * straight + 2 * arc_len}};
  auto distance_to_turn = [&](double sigma) {
    double best = 1e9;
    for (const auto& iv : turns)
      for (double shift : {-cfg.loop_length, 0.0, cfg.loop_length}) {
        const double lo = iv[0] + shift, hi = iv[1] + shift;
        const double d = sigma < lo ? lo - sigma : (sigma > hi ? sigma - hi : 0.0);
        best = std::min(best, d);
      }
    return best;
  };

  std::mt19937_64 rng(mix_seed(seed, 21));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double mult = 1.0 + cfg.speed_jitter * (2 * unit(rng) - 1);
  const double phase = kTwoPi * unit(rng);
  auto speed = [&](double s, double t) {
    const double u = std::clamp(distance_to_turn(s - cfg.margin) / 0.5, 0.0, 1.0);
    const double blend = u * u * (3 - 2 * u);
    const double base = cfg.turn_speed + (cfg.straight_speed - cfg.turn_speed) * blend;
    return mult * base * (1.0 + 0.05 * std::sin(kTwoPi * t / 3.0 + phase));
  };
  const Motion motion(0.0, cfg.loop_length + 2 * cfg.margin, speed);

  SceneParams p = cfg.scene;
  p.center = {0.0, cfg.turn_radius};
  p.roaming_radius = straight / 2 + cfg.turn_radius + cfg.margin + 1.0;
  const Scene scene = generate_scene(p);

  const auto times = make_times(motion.duration(), cfg.sample_period);
  auto cirs = synthesize_along(scene, times, [&](double t) { return route.at(motion.s_at(t)).pos; });
  add_noise(cirs, {cfg.snr_db, mix_seed(seed, 22)});
  std::vector<Cir> anchor{synthesize_cir(scene, route.at(cfg.margin).pos, 0.0)};
  add_noise(anchor, {cfg.snr_db, mix_seed(seed, 23)});

  const auto dist = estimate_distance(cirs, lambda, with_period(cfg.pipeline, cfg.sample_period));
  const TrrsSeries series = trrs_series(anchor.front(), cirs);

  // Strongest resonance in each half of the stream marks an anchor pass.
  auto pass = [&](std::size_t lo, std::size_t hi) {
    std::size_t best = lo;
    for (std::size_t i = lo; i < hi; ++i)
      if (series.entries[i].value > series.entries[best].value) best = i;
    const auto& e = series.entries;
    if (best == 0 || best + 1 >= e.size()) return Extremum{e[best].timestamp, e[best].value};
    return parabolic_vertex(e[best].timestamp, cfg.sample_period, e[best - 1].value, e[best].value,
                            e[best + 1].value);
  };
  const std::size_t half = series.entries.size() / 2;
  const Extremum first = pass(0, half);
  const Extremum second = pass(half, series.entries.size());

  LapResult out;
  out.seed = seed;
  out.true_length = cfg.loop_length;
  out.estimated_length = dist.track.distance_at(second.x) - dist.track.distance_at(first.x);
  out.anchor_trrs = std::min(first.y, second.y);
  return out;
}

double simulate_walk(const WalkConfig& cfg, double length, std::uint64_t seed) {
  if (!(length > 0)) throw ParameterError("simulate_walk: length must be positive");
  const double lambda = kSpeedOfLight / cfg.scene.carrier_f0;
  std::mt19937_64 rng(mix_seed(seed, 31));
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  // Bent path: straight runs of 1.5-3 m joined by gentle turns.
  std::vector<Vec2> corners{{0.0, 0.0}};
  double heading = kTwoPi * unit(rng);
  double covered = 0.0;
  while (covered < length + 2.0) {
    const double run = 1.5 + 1.5 * unit(rng);
    corners.push_back(corners.back() + unit_vector(heading) * run);
    covered += run;
    heading += (2 * unit(rng) - 1) * cfg.max_turn_deg * kPi / 180.0;
  }
  const Route route = Route::rounded_polyline(corners, 0.3);
  const double mean = cfg.mean_speed + cfg.speed_spread * (2 * unit(rng) - 1);
  const double phase = kTwoPi * unit(rng);
  const double period = 2.0 + 3.0 * unit(rng);
  const Motion motion(0.0, length, [&](double, double t) {
    return mean * (1.0 + cfg.speed_wobble * std::sin(kTwoPi * t / period + phase));
  });

  SceneParams p = cfg.scene;
  p.seed = mix_seed(seed, 32);
  p.roaming_radius = length + 3.0;
  const Scene scene = generate_scene(p);
  const auto times = make_times(motion.duration(), cfg.sample_period);
  auto cirs = synthesize_along(scene, times, [&](double t) { return scene.rx_focal_pos + route.at(motion.s_at(t)).pos; });
  add_noise(cirs, {cfg.snr_db, mix_seed(seed, 33)});
  return estimate_distance(cirs, lambda, with_period(cfg.pipeline, cfg.sample_period)).track.cumulative_distance;
}

std::vector<LossSweepRow> run_loss_sweep(const LossConfig& cfg) {
  if (!(cfg.length > 0) || !(cfg.speed > 0)) throw ParameterError("run_loss_sweep: length and speed must be positive");
  const double lambda = kSpeedOfLight / cfg.scene.carrier_f0;
  SceneParams p = cfg.scene;
  p.seed = cfg.seed;
  p.roaming_radius = cfg.length / 2 + 1.0;
  const Scene scene = generate_scene(p);
  const double duration = cfg.length / cfg.speed;
  const Vec2 start = scene.rx_focal_pos - Vec2{cfg.length / 2, 0.0};
  const auto cirs = synthesize_trajectory(scene, {{start, 0.0}, {start + Vec2{cfg.length, 0.0}, duration}},
                                          cfg.sample_period, NoiseModel{cfg.snr_db, mix_seed(cfg.seed, 41)});
  return packet_loss_sweep(cirs, cfg.loss_rates, cfg.trials, cfg.seed, lambda,
                           with_period(cfg.pipeline, cfg.sample_period));
}

// Office tracking

FloorPlan office_floorplan() {
  FloorPlan plan;
  auto rect = [&](double x0, double y0, double x1, double y1) {
    plan.walls.push_back({{x0, y0}, {x1, y0}});
    plan.walls.push_back({{x1, y0}, {x1, y1}});
    plan.walls.push_back({{x1, y1}, {x0, y1}});
    plan.walls.push_back({{x0, y1}, {x0, y0}});
  };
  rect(4.0, 3.0, 31.0, 14.5);  // outer corridor walls
  rect(6.0, 5.0, 29.0, 12.5);  // inner block of rooms
  for (Vec2 c : {Vec2{5.0, 4.0}, Vec2{30.0, 4.0}, Vec2{30.0, 13.5}, Vec2{5.0, 13.5}})
    plan.landmarks.push_back({c, LandmarkKind::corner});
  plan.bounds = {0.0, 0.0, 36.3, 19.0};
  return plan;
}

Route office_route(double fillet_radius) {
  return Route::rounded_polyline({{7.0, 4.0}, {30.0, 4.0}, {30.0, 13.5}, {5.0, 13.5}, {5.0, 4.0}, {9.0, 4.0}},
                                 fillet_radius);
}

OfficeConfig::OfficeConfig() {
  scene = reverberant_scene_defaults();
  scene.center = {18.15, 9.5};
  scene.tx_rx_separation = 5.0;
  scene.tx_bearing = kPi / 2;
  scene.roaming_radius = 16.0;
  tracker.initial_position = {7.0, 4.0};
  tracker.initial_heading = 0.0;
}

std::vector<OfficeTrial> simulate_office_walks(const OfficeConfig& cfg, const std::vector<double>& stops,
                                               std::uint64_t seed, bool keep_traces) {
  const Route route = office_route(cfg.fillet_radius);
  if (stops.empty()) throw ParameterError("simulate_office_walks: no stop distances");
  for (double l : stops)
    if (!(l > 0) || l > route.length())
      throw ParameterError("simulate_office_walks: path length outside the office route");
  const double walk_length = *std::max_element(stops.begin(), stops.end());
  const double lambda = kSpeedOfLight / cfg.scene.carrier_f0;

  std::mt19937_64 rng(mix_seed(seed, 51));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double mean = cfg.mean_speed + cfg.speed_spread * (2 * unit(rng) - 1);
  const double phase = kTwoPi * unit(rng);
  const Motion motion(0.0, walk_length, [&](double s, double t) {
    const double turn = route.at(s).curvature != 0.0 ? 0.8 : 1.0;
    return mean * turn * (1.0 + 0.1 * std::sin(kTwoPi * t / 7.0 + phase));
  });

  const Scene scene = generate_scene(cfg.scene);
  const auto times = make_times(motion.duration(), cfg.sample_period);
  auto cirs = synthesize_along(scene, times, [&](double t) { return route.at(motion.s_at(t)).pos; });
  add_noise(cirs, {cfg.snr_db, mix_seed(seed, 52)});

  ImuModel imu_model;
  imu_model.yaw_bias = cfg.drift_deg_per_min * kPi / 180.0 / 60.0;
  imu_model.seed = mix_seed(seed, 53);
  const auto imu = synthesize_imu(route, motion, motion.duration(), imu_model);

  TrackerConfig tc = cfg.tracker;
  tc.wavelength = lambda * (1.0 + cfg.scale_error);
  tc.distance.sample_period = cfg.sample_period;
  // Per-column speeds and heading deltas only look backwards in time, so a
  // walk that stops at time t sees exactly the prefix up to t of each.
  const TrrsMatrix matrix = trrs_sliding_matrix(cirs, tc.distance.max_lag, cfg.sample_period, tc.distance.column_stride);
  const auto raw_speeds = estimate_speeds(matrix, tc.wavelength, tc.distance.peak);
  const auto all_deltas = heading_deltas(imu, tc.gravity_window);
  const FloorPlan plan = office_floorplan();

  std::vector<OfficeTrial> out;
  for (double stop : stops) {
    const double t_stop = std::min(motion.time_at(stop), std::min(cirs.back().timestamp, imu.back().timestamp));
    std::vector<SpeedEstimate> speeds;
    for (const auto& e : raw_speeds)
      if (e.timestamp <= t_stop) speeds.push_back(e);
    const DistanceTrack dist = integrate_distance(median_smooth(speeds, tc.distance.smoothing_window), tc.distance.integration);
    std::vector<HeadingDelta> deltas;
    for (const auto& d : all_deltas)
      if (d.timestamp <= t_stop) deltas.push_back(d);
    const double t_end = speeds.empty() ? t_stop : speeds.back().timestamp;

    tc.map_correction = true;
    TrackResult on = track_from_increments(dist, deltas, 0.0, t_end, plan, tc);
    tc.map_correction = false;
    TrackResult off = track_from_increments(dist, deltas, 0.0, t_end, plan, tc);

    OfficeTrial t;
    t.path_length = stop;
    t.seed = seed;
    t.truth = route.at(motion.s_at(t_end)).pos;
    t.corrected = {on.trace.back().x, on.trace.back().y};
    t.uncorrected = {off.trace.back().x, off.trace.back().y};
    t.corrected_error = (t.corrected - t.truth).norm();
    t.uncorrected_error = (t.uncorrected - t.truth).norm();
    t.snaps = on.snaps;
    t.recoveries = on.recoveries;
    if (keep_traces) {
      t.corrected_trace = std::move(on.trace);
      t.uncorrected_trace = std::move(off.trace);
      for (const auto& p : t.corrected_trace)
        t.truth_trace.emplace_back(p.timestamp, route.at(motion.s_at(p.timestamp)).pos);
    }
    out.push_back(std::move(t));
  }
  return out;
}

OfficeTrial simulate_office_walk(const OfficeConfig& cfg, double path_length, std::uint64_t seed, bool keep_traces) {
  return std::move(simulate_office_walks(cfg, {path_length}, seed, keep_traces).front());
}

// Harness configuration

namespace {

struct ScenarioSpec {
  SceneParams scene;
  std::size_t trials;
  json params;  // defaults; also the set of accepted keys
};

ScenarioSpec spec_for(Scenario s) {
  switch (s) {
    case Scenario::bessel_convergence:
      return {focal_scene_defaults(), 50,
              {{"bandwidths", {40e6, 125e6, 500e6}}, {"points", 81}, {"max_distance_wl", 2.0}, {"directions", 8}}};
    case Scenario::trrs_vs_distance:
      return {focal_scene_defaults(), 20, {{"points", 81}, {"max_distance_wl", 2.0}, {"directions", 8}}};
    case Scenario::train_loop:
      return {reverberant_scene_defaults(), 100,
              {{"loop_length", 8.0},
               {"turn_radius", 0.6},
               {"straight_speed", 1.0},
               {"turn_speed", 0.7},
               {"speed_jitter", 0.15},
               {"snr_db", 25.0},
               {"sample_period", 0.005}}};
    case Scenario::walk_distance:
      return {reverberant_scene_defaults(), 20,
              {{"distances", {2.0, 4.0, 6.0, 8.0, 10.0, 12.0}},
               {"mean_speed", 1.0},
               {"speed_spread", 0.3},
               {"snr_db", 25.0},
               {"sample_period", 0.005}}};
    case Scenario::office_track:
      return {OfficeConfig().scene, 1,
              {{"path_length", 69.0}, {"scale_error", 0.1}, {"drift_deg_per_min", 2.0}, {"snr_db", 25.0}}};
    case Scenario::error_cdf:
      return {OfficeConfig().scene, 25,
              {{"path_lengths", {5.0, 21.0, 25.0, 30.0, 40.0, 64.0, 69.0}},
               {"scale_error", 0.1},
               {"drift_deg_per_min", 2.0},
               {"snr_db", 25.0}}};
    case Scenario::packet_loss_sweep:
      return {reverberant_scene_defaults(), 100,
              {{"loss_rates", {0.0, 0.1, 0.2, 0.3, 0.4}},
               {"length", 10.0},
               {"speed", 1.0},
               {"snr_db", 25.0},
               {"sample_period", 0.005}}};
  }
  throw ConfigError("unknown scenario");
}

double positive(const json& params, const char* key) {
  const double v = params.at(key).get<double>();
  if (!(v > 0) || !std::isfinite(v)) throw ConfigError(std::string("params.") + key + " must be positive");
  return v;
}

std::vector<double> positive_list(const json& params, const char* key, bool allow_zero = false) {
  const auto v = params.at(key).get<std::vector<double>>();
  if (v.empty()) throw ConfigError(std::string("params.") + key + " must not be empty");
  for (double x : v)
    if (!std::isfinite(x) || x < 0 || (!allow_zero && x == 0))
      throw ConfigError(std::string("params.") + key + " holds an out-of-range value");
  return v;
}

void validate_params(Scenario s, const json& p, const SceneParams& scene) {
  switch (s) {
    case Scenario::bessel_convergence: {
      const auto bw = positive_list(p, "bandwidths");
      for (double b : bw)
        if (!(b < scene.carrier_f0)) throw ConfigError("params.bandwidths must stay below the carrier");
      [[fallthrough]];
    }
    case Scenario::trrs_vs_distance:
      if (p.at("points").get<long long>() < 3) throw ConfigError("params.points must be >= 3");
      if (p.at("directions").get<long long>() < 1) throw ConfigError("params.directions must be >= 1");
      positive(p, "max_distance_wl");
      break;
    case Scenario::train_loop: {
      const double len = positive(p, "loop_length");
      const double r = positive(p, "turn_radius");
      if (!(len > 2 * kPi * r)) throw ConfigError("params.turn_radius too large for params.loop_length");
      positive(p, "straight_speed");
      positive(p, "turn_speed");
      const double j = p.at("speed_jitter").get<double>();
      if (!(j >= 0 && j < 0.5)) throw ConfigError("params.speed_jitter must be in [0, 0.5)");
      positive(p, "sample_period");
      break;
    }
    case Scenario::walk_distance: {
      positive_list(p, "distances");
      const double m = positive(p, "mean_speed");
      const double sp = p.at("speed_spread").get<double>();
      if (!(sp >= 0 && sp < m)) throw ConfigError("params.speed_spread must be in [0, mean_speed)");
      positive(p, "sample_period");
      break;
    }
    case Scenario::office_track:
    case Scenario::error_cdf: {
      const double max_len = office_route().length();
      const auto lens = s == Scenario::office_track ? std::vector<double>{positive(p, "path_length")}
                                                    : positive_list(p, "path_lengths");
      for (double l : lens)
        if (l > max_len) throw ConfigError("path length exceeds the office route length");
      const double e = p.at("scale_error").get<double>();
      if (!(e > -0.5 && e < 0.5)) throw ConfigError("params.scale_error must be in (-0.5, 0.5)");
      if (!std::isfinite(p.at("drift_deg_per_min").get<double>())) throw ConfigError("params.drift_deg_per_min must be finite");
      break;
    }
    case Scenario::packet_loss_sweep: {
      for (double r : positive_list(p, "loss_rates", true))
        if (!(r < 1.0)) throw ConfigError("params.loss_rates must be in [0, 1)");
      positive(p, "length");
      positive(p, "speed");
      positive(p, "sample_period");
      break;
    }
  }
  if (p.contains("snr_db") && !std::isfinite(p.at("snr_db").get<double>()))
    throw ConfigError("params.snr_db must be finite");
}

}  // namespace

json default_experiment_json(Scenario s) {
  const ScenarioSpec spec = spec_for(s);
  return {{"scenario", scenario_name(s)},
          {"scene", io::scene_params_to_json(spec.scene)},
          {"seed", 1},
          {"trials", spec.trials},
          {"output_dir", "out/" + scenario_name(s)},
          {"params", spec.params}};
}

ExperimentConfig experiment_config_from_json(const json& j, std::optional<Scenario> scenario) {
  if (!j.is_object()) throw ConfigError("experiment config must be a JSON object");
  static const std::set<std::string> known{"scenario", "scene", "seeds", "seed", "trials", "output_dir", "params"};
  for (const auto& [key, _] : j.items())
    if (!known.count(key)) throw ConfigError("unknown config key '" + key + "'");

  ExperimentConfig cfg;
  try {
    if (j.contains("scenario")) {
      const Scenario named = parse_scenario(j.at("scenario").get<std::string>());
      if (scenario && *scenario != named)
        throw ConfigError("config scenario '" + scenario_name(named) + "' does not match '" + scenario_name(*scenario) + "'");
      scenario = named;
    }
    if (!scenario) throw ConfigError("no scenario given");
    cfg.scenario = *scenario;
    const ScenarioSpec spec = spec_for(cfg.scenario);

    cfg.scene = j.contains("scene") ? io::scene_params_from_json(j.at("scene"), spec.scene) : spec.scene;

    if (j.contains("seeds")) {
      if (j.contains("seed") || j.contains("trials")) throw ConfigError("give either 'seeds' or 'seed'/'trials', not both");
      cfg.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    } else {
      const auto base = j.value("seed", std::uint64_t{1});
      const auto trials = j.value("trials", static_cast<long long>(spec.trials));
      if (trials < 1) throw ConfigError("trials must be >= 1");
      for (long long i = 0; i < trials; ++i) cfg.seeds.push_back(base + static_cast<std::uint64_t>(i));
    }
    if (cfg.seeds.empty()) throw ConfigError("seeds must not be empty");

    cfg.output_dir = j.value("output_dir", "out/" + scenario_name(cfg.scenario));
    cfg.params = spec.params;
    if (j.contains("params")) {
      const json& p = j.at("params");
      if (!p.is_object()) throw ConfigError("params must be an object");
      for (const auto& [key, value] : p.items()) {
        if (!spec.params.contains(key))
          throw ConfigError("params." + key + " is not a field of scenario " + scenario_name(cfg.scenario));
        cfg.params[key] = value;
      }
    }
    validate_params(cfg.scenario, cfg.params, cfg.scene);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid config: ") + e.what());
  }
  return cfg;
}

// Scenario runners

bool ScenarioOutput::passed() const {
  for (const auto& c : report.value("checks", json::array()))
    if (!c.value("pass", false)) return false;
  return true;
}

namespace {

json check(const std::string& name, double value, const std::string& relation, double threshold, bool pass) {
  return {{"name", name}, {"value", value}, {"relation", relation}, {"threshold", threshold}, {"pass", pass}};
}

json summary(const std::vector<double>& v) {
  return {{"n", v.size()},
          {"mean", mean_of(v)},
          {"std", sample_std(v)},
          {"p5", percentile(v, 5)},
          {"p25", percentile(v, 25)},
          {"median", percentile(v, 50)},
          {"p75", percentile(v, 75)},
          {"p80", percentile(v, 80)},
          {"p95", percentile(v, 95)}};
}

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(10) << v;
  return os.str();
}

// First zero of J0 and first maximum of J0^2 beyond it, in wavelengths.
std::pair<double, double> bessel_extrema_wl() {
  double lo = 2.0, hi = 3.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (bessel_j0(mid) > 0 ? lo : hi) = mid;
  }
  const double zero = 0.5 * (lo + hi);
  // J0' = -J1 vanishes at the first maximum of |J0| after the zero.
  auto slope = [](double x) { return bessel_j0(x + 1e-6) - bessel_j0(x - 1e-6); };
  lo = 3.0;
  hi = 4.5;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (slope(mid) < 0 ? lo : hi) = mid;
  }
  return {zero / kTwoPi, 0.5 * (lo + hi) / kTwoPi};
}

std::string curves_csv(const std::vector<FocalCurve>& curves, const std::string& label_key,
                       const std::vector<std::string>& labels) {
  std::ostringstream os;
  os << label_key << ",distance_wl,mean_trrs,std_trrs,reference\n";
  for (std::size_t c = 0; c < curves.size(); ++c)
    for (std::size_t i = 0; i < curves[c].distance_wl.size(); ++i)
      os << labels[c] << ',' << fmt(curves[c].distance_wl[i]) << ',' << fmt(curves[c].mean_trrs[i]) << ','
         << fmt(curves[c].std_trrs[i]) << ',' << fmt(curves[c].reference[i]) << '\n';
  return os.str();
}

FocalCurveConfig focal_config(const ExperimentConfig& cfg) {
  FocalCurveConfig fc;
  fc.scene = cfg.scene;
  fc.seeds = cfg.seeds;
  fc.points = cfg.params.at("points").get<std::size_t>();
  fc.max_distance_wl = cfg.params.at("max_distance_wl").get<double>();
  fc.directions = cfg.params.at("directions").get<std::size_t>();
  return fc;
}

ScenarioOutput run_bessel(const ExperimentConfig& cfg, json& report) {
  ScenarioOutput out;
  FocalCurveConfig fc = focal_config(cfg);
  std::vector<FocalCurve> curves;
  std::vector<std::string> labels;
  for (double b : cfg.params.at("bandwidths").get<std::vector<double>>()) {
    fc.scene.bandwidth = b;
    curves.push_back(focal_curve(fc));
    labels.push_back(fmt(b));
  }
  out.files.emplace_back("trrs_curves.csv", curves_csv(curves, "bandwidth", labels));
  std::ostringstream table;
  table << "bandwidth,rmse,first_null_wl,first_peak_wl\n";
  json rows = json::array();
  for (const auto& c : curves) {
    table << fmt(c.bandwidth) << ',' << fmt(c.rmse) << ',' << (c.first_null_wl ? fmt(*c.first_null_wl) : "") << ','
          << (c.first_peak_wl ? fmt(*c.first_peak_wl) : "") << '\n';
    rows.push_back({{"bandwidth", c.bandwidth},
                    {"rmse", c.rmse},
                    {"first_null_wl", c.first_null_wl ? json(*c.first_null_wl) : json()},
                    {"first_peak_wl", c.first_peak_wl ? json(*c.first_peak_wl) : json()}});
  }
  out.files.emplace_back("rmse_vs_bandwidth.csv", table.str());
  report["curves"] = rows;

  bool decreasing = true;
  for (std::size_t i = 1; i < curves.size(); ++i) decreasing = decreasing && curves[i].rmse < curves[i - 1].rmse;
  json checks = json::array();
  checks.push_back(check("rmse_strictly_decreasing", curves.back().rmse, "decreasing", 0, decreasing));
  const auto [null_ref, peak_ref] = bessel_extrema_wl();
  const FocalCurve& widest = *std::max_element(curves.begin(), curves.end(),
                                               [](const auto& a, const auto& b) { return a.bandwidth < b.bandwidth; });
  const double null_err = widest.first_null_wl ? std::abs(*widest.first_null_wl / null_ref - 1) : 1e9;
  const double peak_err = widest.first_peak_wl ? std::abs(*widest.first_peak_wl / peak_ref - 1) : 1e9;
  checks.push_back(check("first_null_relative_error", null_err, "<", 0.15, null_err < 0.15));
  checks.push_back(check("first_peak_relative_error", peak_err, "<", 0.15, peak_err < 0.15));
  report["checks"] = checks;
  return out;
}

ScenarioOutput run_trrs_vs_distance(const ExperimentConfig& cfg, json& report) {
  ScenarioOutput out;
  FocalCurveConfig fc = focal_config(cfg);
  fc.scene.direct_path = false;
  const FocalCurve nlos = focal_curve(fc);
  fc.scene.direct_path = true;
  const FocalCurve los = focal_curve(fc);
  out.files.emplace_back("trrs_vs_distance.csv", curves_csv({nlos, los}, "direct_path", {"0", "1"}));
  report["rmse"] = {{"nlos", nlos.rmse}, {"los", los.rmse}};

  // Energy of the TR-received signal around lag zero, focal spot vs a
  // receiver half a wavelength away.
  SceneParams p = cfg.scene;
  p.seed = cfg.seeds.front();
  p.roaming_radius = 1.0;
  const Scene scene = generate_scene(p);
  const double lambda = scene.wavelength();
  const Cir ref = synthesize_cir(scene, scene.rx_focal_pos, 0.0);
  const Cir self = synthesize_cir(scene, scene.rx_focal_pos, 0.0);
  const Cir away = synthesize_cir(scene, scene.rx_focal_pos + Vec2{lambda / 2, 0.0}, 0.0);
  const auto at_focus = trrs_lag_profile(ref, self);
  const auto off_focus = trrs_lag_profile(ref, away);
  std::ostringstream os;
  os << "lag,focal,offset_half_wavelength\n";
  const auto L = static_cast<long long>(scene.tap_count);
  for (long long k = -(L - 1); k <= L - 1; ++k) {
    const auto i = static_cast<std::size_t>(k + L - 1);
    os << k << ',' << fmt(at_focus[i]) << ',' << fmt(off_focus[i]) << '\n';
  }
  out.files.emplace_back("lag_profile.csv", os.str());
  report["checks"] = json::array();
  return out;
}

ScenarioOutput run_train_loop(const ExperimentConfig& cfg, json& report) {
  ScenarioOutput out;
  LoopConfig lc;
  lc.scene = cfg.scene;
  const json& p = cfg.params;
  lc.loop_length = p.at("loop_length");
  lc.turn_radius = p.at("turn_radius");
  lc.straight_speed = p.at("straight_speed");
  lc.turn_speed = p.at("turn_speed");
  lc.speed_jitter = p.at("speed_jitter");
  lc.snr_db = p.at("snr_db");
  lc.sample_period = p.at("sample_period");
  const auto laps = parallel_map(cfg.seeds.size(), [&](std::size_t i) { return simulate_lap(lc, cfg.seeds[i]); });
  std::ostringstream os;
  os << "seed,true_length,estimated_length,error,anchor_trrs\n";
  std::vector<double> err;
  for (const auto& l : laps) {
    err.push_back(l.estimated_length - l.true_length);
    os << l.seed << ',' << fmt(l.true_length) << ',' << fmt(l.estimated_length) << ',' << fmt(err.back()) << ','
       << fmt(l.anchor_trrs) << '\n';
  }
  out.files.emplace_back("laps.csv", os.str());
  report["error"] = summary(err);
  const double m = mean_of(err), s = sample_std(err);
  report["checks"] = {check("abs_mean_error_m", std::abs(m), "<", 0.1, std::abs(m) < 0.1),
                      check("std_error_m", s, "<", 0.2, s < 0.2)};
  return out;
}

ScenarioOutput run_walk_distance(const ExperimentConfig& cfg, json& report) {
  ScenarioOutput out;
  WalkConfig wc;
  wc.scene = cfg.scene;
  wc.mean_speed = cfg.params.at("mean_speed");
  wc.speed_spread = cfg.params.at("speed_spread");
  wc.snr_db = cfg.params.at("snr_db");
  wc.sample_period = cfg.params.at("sample_period");
  const auto distances = cfg.params.at("distances").get<std::vector<double>>();
  const std::size_t n = cfg.seeds.size();
  const auto est = parallel_map(distances.size() * n, [&](std::size_t k) {
    return simulate_walk(wc, distances[k / n], mix_seed(cfg.seeds[k % n], static_cast<std::uint64_t>(k / n)));
  });
  std::ostringstream raw, table;
  raw << "true_distance,seed,estimated_distance\n";
  table << "true_distance,p5,p25,p50,p75,p95\n";
  json rows = json::array();
  for (std::size_t d = 0; d < distances.size(); ++d) {
    std::vector<double> v(est.begin() + static_cast<long>(d * n), est.begin() + static_cast<long>((d + 1) * n));
    for (std::size_t i = 0; i < n; ++i) raw << fmt(distances[d]) << ',' << cfg.seeds[i] << ',' << fmt(v[i]) << '\n';
    table << fmt(distances[d]) << ',' << fmt(percentile(v, 5)) << ',' << fmt(percentile(v, 25)) << ','
          << fmt(percentile(v, 50)) << ',' << fmt(percentile(v, 75)) << ',' << fmt(percentile(v, 95)) << '\n';
    json row = summary(v);
    row["true_distance"] = distances[d];
    rows.push_back(row);
  }
  out.files.emplace_back("walks.csv", raw.str());
  out.files.emplace_back("percentiles.csv", table.str());
  report["distances"] = rows;
  report["checks"] = json::array();
  return out;
}

OfficeConfig office_config(const ExperimentConfig& cfg) {
  OfficeConfig oc;
  oc.scene = cfg.scene;
  oc.scale_error = cfg.params.at("scale_error");
  oc.drift_deg_per_min = cfg.params.at("drift_deg_per_min");
  oc.snr_db = cfg.params.at("snr_db");
  return oc;
}

ScenarioOutput run_office_track(const ExperimentConfig& cfg, json& report) {
  ScenarioOutput out;
  const OfficeConfig oc = office_config(cfg);
  const double len = cfg.params.at("path_length");
  const OfficeTrial t = simulate_office_walk(oc, len, cfg.seeds.front(), true);
  out.files.emplace_back("trace_corrected.csv", trace_to_csv(t.corrected_trace));
  out.files.emplace_back("trace_uncorrected.csv", trace_to_csv(t.uncorrected_trace));
  std::ostringstream truth;
  truth << "timestamp,x,y\n";
  for (const auto& [ts, pos] : t.truth_trace) truth << fmt(ts) << ',' << fmt(pos.x) << ',' << fmt(pos.y) << '\n';
  out.files.emplace_back("trace_truth.csv", truth.str());
  out.files.emplace_back("floorplan.json", io::floorplan_to_json(office_floorplan()).dump(2) + "\n");
  report["endpoint_error"] = {{"corrected", t.corrected_error}, {"uncorrected", t.uncorrected_error}};
  report["snaps"] = t.snaps;
  report["recoveries"] = t.recoveries;
  report["checks"] = json::array();
  return out;
}

ScenarioOutput run_error_cdf(const ExperimentConfig& cfg, json& report) {
  ScenarioOutput out;
  const OfficeConfig oc = office_config(cfg);
  const auto lengths = cfg.params.at("path_lengths").get<std::vector<double>>();
  const std::size_t n = cfg.seeds.size();
  const auto walks = parallel_map(n, [&](std::size_t i) { return simulate_office_walks(oc, lengths, cfg.seeds[i]); });
  std::vector<OfficeTrial> trials;
  for (std::size_t l = 0; l < lengths.size(); ++l)
    for (const auto& w : walks) trials.push_back(w[l]);
  std::ostringstream raw;
  raw << "path_length,seed,truth_x,truth_y,corrected_x,corrected_y,uncorrected_x,uncorrected_y,"
         "corrected_error,uncorrected_error\n";
  std::vector<double> on, off;
  for (const auto& t : trials) {
    raw << fmt(t.path_length) << ',' << t.seed << ',' << fmt(t.truth.x) << ',' << fmt(t.truth.y) << ','
        << fmt(t.corrected.x) << ',' << fmt(t.corrected.y) << ',' << fmt(t.uncorrected.x) << ','
        << fmt(t.uncorrected.y) << ',' << fmt(t.corrected_error) << ',' << fmt(t.uncorrected_error) << '\n';
    on.push_back(t.corrected_error);
    off.push_back(t.uncorrected_error);
  }
  out.files.emplace_back("trials.csv", raw.str());
  std::vector<double> on_sorted = on, off_sorted = off;
  std::sort(on_sorted.begin(), on_sorted.end());
  std::sort(off_sorted.begin(), off_sorted.end());
  std::ostringstream cdf;
  cdf << "probability,corrected_error,uncorrected_error\n";
  for (std::size_t i = 0; i < on_sorted.size(); ++i)
    cdf << fmt(static_cast<double>(i + 1) / static_cast<double>(on_sorted.size())) << ',' << fmt(on_sorted[i]) << ','
        << fmt(off_sorted[i]) << '\n';
  out.files.emplace_back("error_cdf.csv", cdf.str());
  report["corrected"] = summary(on);
  report["uncorrected"] = summary(off);
  const double med_on = percentile(on, 50), med_off = percentile(off, 50);
  report["checks"] = {check("corrected_median_error_m", med_on, "<", 0.5, med_on < 0.5),
                      check("corrected_median_below_uncorrected", med_on, "<", med_off, med_on < med_off)};
  return out;
}

ScenarioOutput run_packet_loss(const ExperimentConfig& cfg, json& report) {
  ScenarioOutput out;
  LossConfig lc;
  lc.scene = cfg.scene;
  lc.loss_rates = cfg.params.at("loss_rates").get<std::vector<double>>();
  lc.length = cfg.params.at("length");
  lc.speed = cfg.params.at("speed");
  lc.snr_db = cfg.params.at("snr_db");
  lc.sample_period = cfg.params.at("sample_period");
  lc.trials = cfg.seeds.size();
  lc.seed = cfg.seeds.front();
  const auto rows = run_loss_sweep(lc);
  std::ostringstream os;
  os << "loss_rate,mean_distance,std_distance\n";
  json jr = json::array();
  bool mean_ok = true, std_ok = true;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    os << fmt(rows[i].loss_rate) << ',' << fmt(rows[i].mean_distance) << ',' << fmt(rows[i].std_distance) << '\n';
    jr.push_back({{"loss_rate", rows[i].loss_rate}, {"mean", rows[i].mean_distance}, {"std", rows[i].std_distance}});
    if (i > 0) {
      mean_ok = mean_ok && rows[i].mean_distance <= rows[i - 1].mean_distance;
      std_ok = std_ok && rows[i].std_distance >= rows[i - 1].std_distance;
    }
  }
  out.files.emplace_back("packet_loss.csv", os.str());
  report["rows"] = jr;
  report["checks"] = {check("mean_non_increasing", rows.back().mean_distance, "non-increasing", 0, mean_ok),
                      check("std_non_decreasing", rows.back().std_distance, "non-decreasing", 0, std_ok)};
  return out;
}

}  // namespace

ScenarioOutput run_scenario(const ExperimentConfig& cfg) {
  if (cfg.seeds.empty()) throw ConfigError("seeds must not be empty");
  json report{{"scenario", scenario_name(cfg.scenario)},
              {"seeds", cfg.seeds},
              {"scene", io::scene_params_to_json(cfg.scene)},
              {"params", cfg.params}};
  ScenarioOutput out;
  switch (cfg.scenario) {
    case Scenario::bessel_convergence: out = run_bessel(cfg, report); break;
    case Scenario::trrs_vs_distance: out = run_trrs_vs_distance(cfg, report); break;
    case Scenario::train_loop: out = run_train_loop(cfg, report); break;
    case Scenario::walk_distance: out = run_walk_distance(cfg, report); break;
    case Scenario::office_track: out = run_office_track(cfg, report); break;
    case Scenario::error_cdf: out = run_error_cdf(cfg, report); break;
    case Scenario::packet_loss_sweep: out = run_packet_loss(cfg, report); break;
  }
  bool pass = true;
  for (const auto& c : report["checks"]) pass = pass && c["pass"].get<bool>();
  report["pass"] = pass;
  report["files"] = json::array();
  for (const auto& [name, _] : out.files) report["files"].push_back(name);
  out.report = std::move(report);
  return out;
}

void write_scenario_output(const ScenarioOutput& out, const std::filesystem::path& dir) {
  for (const auto& [name, text] : out.files) io::write_text(dir / name, text);
  io::write_text(dir / "report.json", out.report.dump(2) + "\n");
}

}  // namespace wiball
