#include "wiball/walker.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "wiball/error.hpp"

namespace wiball {

Route::Route(Vec2 start, double heading) : end_(start), end_heading_(heading) {}

void Route::add_line(double length) {
  if (!(length >= 0)) throw ParameterError("Route: negative line length");
  if (length == 0) return;
  pieces_.push_back({length_, length, end_, end_heading_, 0.0});
  end_ = end_ + unit_vector(end_heading_) * length;
  length_ += length;
}

void Route::add_arc(double radius, double sweep) {
  if (!(radius > 0)) throw ParameterError("Route: arc radius must be positive");
  if (sweep == 0) return;
  const double len = radius * std::abs(sweep);
  const double k = (sweep > 0 ? 1.0 : -1.0) / radius;
  pieces_.push_back({length_, len, end_, end_heading_, k});
  const Piece& p = pieces_.back();
  // Chord of a circular arc.
  const double h1 = end_heading_ + sweep;
  end_ = p.start + Vec2{std::sin(h1) - std::sin(p.heading), std::cos(p.heading) - std::cos(h1)} * (1.0 / k);
  end_heading_ = h1;
  length_ += len;
}

Route Route::rounded_polyline(const std::vector<Vec2>& c, double r) {
  if (c.size() < 2) throw ParameterError("Route: need at least two corners");
  Route route(c[0], (c[1] - c[0]).angle());
  double carried = 0.0;  // length consumed by the previous fillet
  for (std::size_t i = 1; i < c.size(); ++i) {
    const double seg = (c[i] - c[i - 1]).norm();
    if (i + 1 == c.size()) {
      route.add_line(seg - carried);
      break;
    }
    const double turn = wrap_angle((c[i + 1] - c[i]).angle() - (c[i] - c[i - 1]).angle());
    const double tangent = r * std::tan(std::abs(turn) / 2);
    if (tangent + carried > seg + 1e-9) throw ParameterError("Route: fillet radius too large for the polyline");
    route.add_line(seg - carried - tangent);
    route.add_arc(r, turn);
    carried = tangent;
  }
  return route;
}

RoutePose Route::at(double s) const {
  if (pieces_.empty()) return {end_, end_heading_, 0.0};
  if (s >= length_) {
    const double extra = s - length_;
    return {end_ + unit_vector(end_heading_) * extra, end_heading_, 0.0};
  }
  s = std::max(s, 0.0);
  auto it = std::upper_bound(pieces_.begin(), pieces_.end(), s, [](double v, const Piece& p) { return v < p.s0; });
  const Piece& p = *(it - 1);
  const double u = s - p.s0;
  if (p.curvature == 0.0) return {p.start + unit_vector(p.heading) * u, p.heading, 0.0};
  const double h = p.heading + p.curvature * u;
  const Vec2 pos = p.start + Vec2{std::sin(h) - std::sin(p.heading), std::cos(p.heading) - std::cos(h)} *
                                 (1.0 / p.curvature);
  return {pos, h, p.curvature};
}

Motion::Motion(double s_start, double s_end, SpeedFn speed, double dt) {
  if (!(s_end > s_start)) throw ParameterError("Motion: end must lie beyond start");
  if (!(dt > 0)) throw ParameterError("Motion: step must be positive");
  double s = s_start;
  double t = 0.0;
  times_.push_back(0.0);
  arc_.push_back(s);
  speed_.push_back(speed(s, 0.0));
  while (s < s_end) {
    // Midpoint step.
    const double v0 = speed(s, t);
    if (!(v0 > 0)) throw ParameterError("Motion: speed must stay positive");
    const double v_mid = speed(s + 0.5 * dt * v0, t + 0.5 * dt);
    s += dt * v_mid;
    t += dt;
    times_.push_back(t);
    arc_.push_back(s);
    speed_.push_back(speed(s, t));
  }
  // Trim the final step so the last sample lands exactly on s_end.
  const std::size_t n = times_.size();
  const double frac = (s_end - arc_[n - 2]) / (arc_[n - 1] - arc_[n - 2]);
  times_[n - 1] = times_[n - 2] + frac * dt;
  arc_[n - 1] = s_end;
}

namespace {

double lerp_table(const std::vector<double>& xs, const std::vector<double>& ys, double x) {
  if (x <= xs.front()) return ys.front();
  if (x >= xs.back()) return ys.back();
  const auto it = std::upper_bound(xs.begin(), xs.end(), x);
  const std::size_t i = static_cast<std::size_t>(it - xs.begin());
  const double u = (x - xs[i - 1]) / (xs[i] - xs[i - 1]);
  return ys[i - 1] + u * (ys[i] - ys[i - 1]);
}

// Rotation matrix rows for roll about x then pitch about y.
struct Rot3 {
  Vec3 r0, r1, r2;
  Vec3 apply(Vec3 v) const { return {r0.dot(v), r1.dot(v), r2.dot(v)}; }
  Vec3 apply_transpose(Vec3 v) const { return r0 * v.x + r1 * v.y + r2 * v.z; }
};

Rot3 tilt(double roll, double pitch) {
  const double cr = std::cos(roll), sr = std::sin(roll), cp = std::cos(pitch), sp = std::sin(pitch);
  // R = Ry(pitch) * Rx(roll), device to world.
  return {{cp, sp * sr, sp * cr}, {0, cr, -sr}, {-sp, cp * sr, cp * cr}};
}

}  // namespace

double Motion::s_at(double t) const { return lerp_table(times_, arc_, t); }
double Motion::time_at(double s) const { return lerp_table(arc_, times_, s); }
double Motion::speed_at(double t) const { return lerp_table(times_, speed_, t); }

std::vector<ImuSample> synthesize_imu(const Route& route, const Motion& motion, double t_end,
                                      const ImuModel& m) {
  if (!(m.rate > 0)) throw ParameterError("synthesize_imu: rate must be positive");
  std::mt19937_64 rng(m.seed);
  std::uniform_real_distribution<double> tilt_dist(-m.max_tilt, m.max_tilt);
  std::normal_distribution<double> normal(0.0, 1.0);
  const Rot3 rot = tilt(tilt_dist(rng), tilt_dist(rng));
  const double g = 9.80665;
  const double w = kTwoPi * m.sway_frequency;
  const double dt = 1.0 / m.rate;
  const auto n = static_cast<std::size_t>(std::floor(t_end / dt)) + 1;
  std::vector<ImuSample> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) * dt;
    const double s = motion.s_at(t);
    const double v = motion.speed_at(t);
    const RoutePose p = route.at(s);
    const double yaw_rate = p.curvature * v + m.sway_amplitude * w * std::cos(w * t) + m.yaw_bias;
    const Vec3 omega_world{0, 0, yaw_rate};
    // Centripetal acceleration in the horizontal plane plus gravity reaction.
    const Vec2 lateral = unit_vector(p.heading + kPi / 2) * (p.curvature * v * v);
    const Vec3 accel_world{lateral.x, lateral.y, g};
    ImuSample sample;
    sample.timestamp = t;
    sample.angular_velocity = rot.apply_transpose(omega_world) +
                              Vec3{normal(rng), normal(rng), normal(rng)} * m.gyro_noise;
    sample.acceleration = rot.apply_transpose(accel_world) +
                          Vec3{normal(rng), normal(rng), normal(rng)} * m.accel_noise;
    out.push_back(sample);
  }
  return out;
}

}  // namespace wiball
