#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>

namespace wiball {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  constexpr Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
  constexpr Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
  constexpr Vec2 operator*(double s) const { return {x * s, y * s}; }
  constexpr Vec2& operator+=(Vec2 o) {
    x += o.x;
    y += o.y;
    return *this;
  }
  constexpr bool operator==(const Vec2&) const = default;

  double norm() const { return std::sqrt(x * x + y * y); }
  constexpr double dot(Vec2 o) const { return x * o.x + y * o.y; }
  constexpr double cross(Vec2 o) const { return x * o.y - y * o.x; }
  double angle() const { return std::atan2(y, x); }
};

inline Vec2 unit_vector(double angle) { return {std::cos(angle), std::sin(angle)}; }

struct Segment {
  Vec2 a;
  Vec2 b;

  double length() const { return (b - a).norm(); }
};

struct Rect {
  double xmin = 0.0;
  double ymin = 0.0;
  double xmax = 0.0;
  double ymax = 0.0;

  constexpr bool contains(Vec2 p) const {
    return p.x >= xmin && p.x <= xmax && p.y >= ymin && p.y <= ymax;
  }
};

/// Closed-segment intersection test. Collinear overlapping segments count
/// as intersecting; touching at an endpoint counts as well.
inline bool segments_intersect(const Segment& s, const Segment& t) {
  auto orient = [](Vec2 p, Vec2 q, Vec2 r) {
    const double v = (q - p).cross(r - p);
    constexpr double eps = 1e-12;
    return v > eps ? 1 : (v < -eps ? -1 : 0);
  };
  auto on_segment = [](Vec2 p, Vec2 q, Vec2 r) {
    return std::min(p.x, r.x) - 1e-12 <= q.x && q.x <= std::max(p.x, r.x) + 1e-12 &&
           std::min(p.y, r.y) - 1e-12 <= q.y && q.y <= std::max(p.y, r.y) + 1e-12;
  };
  const int o1 = orient(s.a, s.b, t.a);
  const int o2 = orient(s.a, s.b, t.b);
  const int o3 = orient(t.a, t.b, s.a);
  const int o4 = orient(t.a, t.b, s.b);
  if (o1 != o2 && o3 != o4) return true;
  if (o1 == 0 && on_segment(s.a, t.a, s.b)) return true;
  if (o2 == 0 && on_segment(s.a, t.b, s.b)) return true;
  if (o3 == 0 && on_segment(t.a, s.a, t.b)) return true;
  if (o4 == 0 && on_segment(t.a, s.b, t.b)) return true;
  return false;
}

/// Wraps an angle to [-pi, pi).
inline double wrap_angle(double a) {
  double r = a - kTwoPi * std::floor((a + kPi) / kTwoPi);
  if (r >= kPi) r -= kTwoPi;
  if (r < -kPi) r += kTwoPi;
  return r;
}

}  // namespace wiball
