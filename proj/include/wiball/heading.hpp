#pragma once

#include <cmath>
#include <span>
#include <vector>

namespace wiball {

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  constexpr Vec3 operator+(Vec3 o) const { return {x + o.x, y + o.y, z + o.z}; }
  constexpr Vec3 operator-(Vec3 o) const { return {x - o.x, y - o.y, z - o.z}; }
  constexpr Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  constexpr double dot(Vec3 o) const { return x * o.x + y * o.y + z * o.z; }
  constexpr Vec3 cross(Vec3 o) const { return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x}; }
  double norm() const { return std::sqrt(dot(*this)); }
  constexpr bool operator==(const Vec3&) const = default;
};

/// One gyroscope + accelerometer reading in the device frame, SI units.
struct ImuSample {
  double timestamp = 0.0;
  Vec3 angular_velocity;
  Vec3 acceleration;
};

struct HeadingDelta {
  double timestamp = 0.0;
  double delta_theta = 0.0;
};

struct HeadingPoint {
  double timestamp = 0.0;
  double theta = 0.0;
};

/// Mean accelerometer vector over the window, normalized. Throws
/// DegenerateInputError when the mean is shorter than min_norm.
Vec3 gravity_estimate(std::span<const ImuSample> window, double min_norm = 0.5);

/// Rotation about the gravity axis over dt: (omega . g_hat) * dt.
HeadingDelta heading_delta(const ImuSample& sample, Vec3 gravity, double dt);

/// Running heading, wrapped to [-pi, pi). The first point is the initial
/// heading at initial_time.
std::vector<HeadingPoint> accumulate_heading(double initial_theta, const std::vector<HeadingDelta>& deltas,
                                             double initial_time = 0.0);

/// Converts an IMU stream to heading deltas. The delta for [t_{i-1}, t_i]
/// uses the angular velocity at t_{i-1} and gravity from the trailing window
/// ending at t_{i-1}.
std::vector<HeadingDelta> heading_deltas(std::span<const ImuSample> stream, double gravity_window = 0.5);

}  // namespace wiball
