#include "wiball/tracker.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>

#include "wiball/error.hpp"

namespace wiball {

namespace {

std::size_t dominant_index(const std::vector<PathHypothesis>& hyps) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < hyps.size(); ++i)
    if (hyps[i].weight > hyps[best].weight) best = i;
  return best;
}

void refresh_current(TrackState& s) {
  if (!s.hypotheses.empty()) s.current_pose = s.dominant().tip();
}

void normalize(std::vector<PathHypothesis>& hyps) {
  double total = 0.0;
  for (const auto& h : hyps) total += h.weight;
  if (total > 0)
    for (auto& h : hyps) h.weight /= total;
}

// Latest pose at or before time t, or the first pose.
const TracePose& pose_at_or_before(const std::vector<TracePose>& trace, double t) {
  auto it = std::upper_bound(trace.begin(), trace.end(), t,
                             [](double v, const TracePose& p) { return v < p.timestamp; });
  if (it == trace.begin()) return trace.front();
  return *(it - 1);
}

}  // namespace

void FloorPlan::validate() const {
  for (const auto& w : walls) {
    if (!std::isfinite(w.a.x) || !std::isfinite(w.a.y) || !std::isfinite(w.b.x) || !std::isfinite(w.b.y))
      throw ParameterError("floorplan: non-finite wall");
    if (!(w.length() > 0)) throw ParameterError("floorplan: zero-length wall");
  }
  for (const auto& l : landmarks)
    if (!bounds.contains(l.pos)) throw ParameterError("floorplan: landmark outside bounds");
}

bool FloorPlan::crosses_wall(const Segment& path) const {
  return std::any_of(walls.begin(), walls.end(), [&](const Segment& w) { return segments_intersect(w, path); });
}

const PathHypothesis& TrackState::dominant() const {
  if (hypotheses.empty()) throw ParameterError("track state has no hypotheses");
  return hypotheses[dominant_index(hypotheses)];
}

TrackState initial_state(const TrackerConfig& cfg, double timestamp) {
  if (cfg.scale_grid.empty() || cfg.bias_grid.empty()) throw ParameterError("tracker: empty hypothesis grid");
  TrackState s;
  s.imu_heading = wrap_angle(cfg.initial_heading);
  struct Cell {
    double scale, bias;
  };
  std::vector<Cell> cells;
  for (double sc : cfg.scale_grid) {
    if (!(sc > 0)) throw ParameterError("tracker: scales must be positive");
    for (double b : cfg.bias_grid) cells.push_back({std::clamp(sc, cfg.scale_min, cfg.scale_max), b});
  }
  std::stable_sort(cells.begin(), cells.end(), [](const Cell& a, const Cell& b) {
    const double da = std::fabs(a.scale - 1.0) + std::fabs(a.bias);
    const double db = std::fabs(b.scale - 1.0) + std::fabs(b.bias);
    return da < db - 1e-12;
  });
  const double w = 1.0 / static_cast<double>(cells.size());
  for (const auto& c : cells) {
    PathHypothesis h;
    h.scale = c.scale;
    h.heading_bias = c.bias;
    h.weight = w;
    h.anchor = cfg.initial_position;
    h.pose_trace.push_back({timestamp, cfg.initial_position, wrap_angle(s.imu_heading + c.bias), 0.0});
    s.hypotheses.push_back(std::move(h));
  }
  refresh_current(s);
  return s;
}

TrackState dead_reckon_step(TrackState state, double timestamp, double d_increment, double delta_theta) {
  if (!(d_increment >= 0)) throw ParameterError("dead_reckon_step: distance increment must be >= 0");
  std::erase_if(state.hypotheses, [](const PathHypothesis& h) { return !h.alive(); });
  state.imu_heading = wrap_angle(state.imu_heading + delta_theta);
  for (auto& h : state.hypotheses) {
    const TracePose& last = h.tip();
    TracePose next;
    next.timestamp = timestamp;
    next.heading = wrap_angle(state.imu_heading + h.heading_bias);
    next.pos = last.pos + unit_vector(next.heading) * (h.scale * d_increment);
    next.raw_distance = last.raw_distance + d_increment;
    h.pose_trace.push_back(next);
  }
  state.cumulative_distance += d_increment;
  refresh_current(state);
  return state;
}

TrackState prune_and_reweight(TrackState state, const FloorPlan& plan, const TrackerConfig& cfg) {
  auto& hyps = state.hypotheses;
  if (hyps.empty()) return state;
  const std::size_t dom_before = dominant_index(hyps);
  bool any_alive = false;
  for (auto& h : hyps) {
    if (!h.alive()) continue;
    const auto& tr = h.pose_trace;
    if (tr.size() >= 2 && plan.crosses_wall({tr[tr.size() - 2].pos, tr.back().pos})) h.weight = 0.0;
    any_alive = any_alive || h.alive();
  }
  if (any_alive) {
    normalize(hyps);
    refresh_current(state);
    return state;
  }

  // Recovery: widen the grid around the last valid pose of the hypothesis
  // that was dominant before this step.
  PathHypothesis base = hyps[dom_before];
  if (base.pose_trace.size() >= 2) base.pose_trace.pop_back();
  std::vector<PathHypothesis> fresh;
  for (double ds : cfg.recovery_scale_offsets) {
    for (double db : cfg.recovery_bias_offsets) {
      PathHypothesis h = base;
      h.scale = std::clamp(base.scale + ds, cfg.scale_min, cfg.scale_max);
      h.heading_bias = wrap_angle(base.heading_bias + db);
      h.weight = 1.0;
      fresh.push_back(std::move(h));
    }
  }
  hyps = std::move(fresh);
  normalize(hyps);
  ++state.recoveries;
  refresh_current(state);
  return state;
}

TrackState landmark_correct(TrackState state, const FloorPlan& plan, const TrackerConfig& cfg) {
  if (plan.landmarks.empty()) return state;
  bool snapped_any = false;
  for (auto& h : state.hypotheses) {
    if (!h.alive() || h.pose_trace.size() < 3) continue;
    const TracePose& now = h.tip();
    if (now.timestamp - h.last_snap_time < cfg.snap_refractory) continue;
    if (now.timestamp - h.pose_trace.front().timestamp < cfg.turn_window + cfg.settle_window) continue;

    const TracePose& win_start = pose_at_or_before(h.pose_trace, now.timestamp - cfg.turn_window);
    const TracePose& settle_start = pose_at_or_before(h.pose_trace, now.timestamp - cfg.settle_window);
    const double turn = wrap_angle(now.heading - win_start.heading);
    const double recent = wrap_angle(now.heading - settle_start.heading);
    if (std::fabs(turn) <= cfg.turn_threshold || std::fabs(recent) >= cfg.settle_threshold) continue;

    // Corner estimate: intersection of the approach line and the exit line.
    const TracePose& in = pose_at_or_before(h.pose_trace, now.timestamp - cfg.turn_window - cfg.settle_window);
    const Vec2 u_in = unit_vector(in.heading);
    const Vec2 u_out = unit_vector(now.heading);
    const double denom = u_in.cross(u_out);
    Vec2 turn_point = (in.pos + now.pos) * 0.5;
    if (std::fabs(denom) > 0.5) {
      const double a = (now.pos - in.pos).cross(u_out) / denom;
      turn_point = in.pos + u_in * a;
    }

    const Landmark* best = nullptr;
    double best_d = cfg.capture_radius;
    for (const auto& lm : plan.landmarks) {
      if (lm.kind == LandmarkKind::corridor_end) continue;
      const double d = (lm.pos - turn_point).norm();
      if (d <= best_d) {
        best_d = d;
        best = &lm;
      }
    }
    if (!best) continue;

    const Vec2 shift = best->pos - turn_point;
    for (auto& p : h.pose_trace)
      if (p.timestamp > in.timestamp) p.pos += shift;

    const Vec2 est_leg = turn_point - h.anchor;
    const Vec2 map_leg = best->pos - h.anchor;
    if (est_leg.norm() >= cfg.min_leg_for_rescale && map_leg.norm() >= cfg.min_leg_for_rescale) {
      h.scale = std::clamp(h.scale * map_leg.norm() / est_leg.norm(), cfg.scale_min, cfg.scale_max);
      h.heading_bias = wrap_angle(h.heading_bias + wrap_angle(map_leg.angle() - est_leg.angle()));
    }
    h.anchor = best->pos;
    h.last_snap_time = now.timestamp;
    h.weight *= cfg.landmark_boost;
    snapped_any = true;
    ++state.snaps;
  }
  if (snapped_any) normalize(state.hypotheses);
  refresh_current(state);
  return state;
}

TrackResult track_from_increments(const DistanceTrack& distance, const std::vector<HeadingDelta>& deltas,
                                  double t_start, double t_end, const FloorPlan& plan, const TrackerConfig& cfg) {
  if (!(cfg.fusion_interval > 0)) throw ParameterError("track: fusion interval must be positive");
  plan.validate();
  TrackResult res;

  // Cumulative distance at increment boundaries for O(log n) lookup.
  std::vector<double> knots_t{};
  std::vector<double> knots_d{};
  if (!distance.increments.empty()) {
    knots_t.push_back(distance.increments.front().t_start);
    knots_d.push_back(0.0);
    for (const auto& inc : distance.increments) {
      knots_t.push_back(inc.t_end);
      knots_d.push_back(knots_d.back() + inc.distance);
    }
  }
  auto dist_at = [&](double t) {
    if (knots_t.empty() || t <= knots_t.front()) return 0.0;
    if (t >= knots_t.back()) return knots_d.back();
    const auto it = std::upper_bound(knots_t.begin(), knots_t.end(), t);
    const std::size_t k = static_cast<std::size_t>(it - knots_t.begin());
    const double u = (t - knots_t[k - 1]) / (knots_t[k] - knots_t[k - 1]);
    return knots_d[k - 1] + u * (knots_d[k] - knots_d[k - 1]);
  };

  TrackState state = initial_state(cfg, t_start);
  const bool correct = cfg.map_correction && (!plan.walls.empty() || !plan.landmarks.empty());
  auto record = [&](double t) {
    const auto& dom = state.dominant();
    res.trace.push_back({t, state.current_pose.pos.x, state.current_pose.pos.y, state.current_pose.heading,
                         state.cumulative_distance, dom.scale});
  };
  record(t_start);

  std::size_t di = 0;
  while (di < deltas.size() && deltas[di].timestamp <= t_start) ++di;
  double prev_d = dist_at(t_start);
  for (std::size_t k = 1;; ++k) {
    double t = t_start + static_cast<double>(k) * cfg.fusion_interval;
    const bool last = t >= t_end - 1e-9;
    if (last) t = t_end;
    if (!(t > res.trace.back().timestamp)) break;
    double dtheta = 0.0;
    while (di < deltas.size() && deltas[di].timestamp <= t) dtheta += deltas[di++].delta_theta;
    const double d_now = dist_at(t);
    state = dead_reckon_step(std::move(state), t, std::max(0.0, d_now - prev_d), dtheta);
    prev_d = d_now;
    if (correct) {
      state = prune_and_reweight(std::move(state), plan, cfg);
      state = landmark_correct(std::move(state), plan, cfg);
    }
    record(t);
    if (last) break;
  }
  res.recoveries = state.recoveries;
  res.snaps = state.snaps;
  return res;
}

TrackResult track(const std::vector<Cir>& cirs, const std::vector<ImuSample>& imu, const FloorPlan& plan,
                  const TrackerConfig& cfg) {
  if (cirs.empty() || imu.empty()) throw ParameterError("track: empty input stream");
  const DistanceResult dist = estimate_distance(cirs, cfg.wavelength, cfg.distance);
  const std::vector<HeadingDelta> deltas = heading_deltas(imu, cfg.gravity_window);
  const double t_start = std::max(cirs.front().timestamp, imu.front().timestamp);
  const double t_end = std::min(cirs.back().timestamp, imu.back().timestamp);
  if (!(t_end >= t_start)) throw ParameterError("track: CIR and IMU streams do not overlap");

  TrackResult res = track_from_increments(dist.track, deltas, t_start, t_end, plan, cfg);
  auto scan = [&](const std::string& name, auto&& times) {
    for (std::size_t i = 1; i < times.size(); ++i)
      if (times[i] - times[i - 1] > cfg.gap_threshold) res.gaps.push_back({name, times[i - 1], times[i]});
  };
  std::vector<double> ct, it;
  for (const auto& c : cirs) ct.push_back(c.timestamp);
  for (const auto& s : imu) it.push_back(s.timestamp);
  scan("cir", ct);
  scan("imu", it);
  return res;
}

std::string trace_to_csv(const std::vector<TracePoint>& trace) {
  std::ostringstream os;
  os << std::setprecision(12);
  os << "timestamp,x,y,heading,cum_distance,dominant_scale\n";
  for (const auto& p : trace)
    os << p.timestamp << ',' << p.x << ',' << p.y << ',' << p.heading << ',' << p.cum_distance << ','
       << p.dominant_scale << '\n';
  return os.str();
}

}  // namespace wiball
