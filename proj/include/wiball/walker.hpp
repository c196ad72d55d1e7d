#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "wiball/geometry.hpp"
#include "wiball/heading.hpp"

namespace wiball {

struct RoutePose {
  Vec2 pos;
  double heading = 0.0;
  double curvature = 0.0;  // 1/m, positive for left turns
};

/// Planar path made of straight runs and circular arcs, parameterized by
/// arc length.
class Route {
 public:
  Route(Vec2 start, double heading);

  /// Polyline through the given corners with every corner rounded by a
  /// circular fillet of the given radius.
  static Route rounded_polyline(const std::vector<Vec2>& corners, double fillet_radius);

  void add_line(double length);
  /// Signed sweep: positive turns left.
  void add_arc(double radius, double sweep);

  double length() const { return length_; }
  RoutePose at(double s) const;

 private:
  struct Piece {
    double s0 = 0.0;
    double length = 0.0;
    Vec2 start;
    double heading = 0.0;
    double curvature = 0.0;
  };
  std::vector<Piece> pieces_;
  Vec2 end_;
  double end_heading_ = 0.0;
  double length_ = 0.0;
};

/// Arc length as a function of time for a walker whose speed depends on
/// position and time. Integrated on a fine grid and interpolated.
class Motion {
 public:
  using SpeedFn = std::function<double(double s, double t)>;
  Motion(double s_start, double s_end, SpeedFn speed, double dt = 1e-3);

  double duration() const { return times_.back(); }
  double s_at(double t) const;
  /// First time the walker reaches arc length s.
  double time_at(double s) const;
  double speed_at(double t) const;

 private:
  std::vector<double> times_;
  std::vector<double> arc_;
  std::vector<double> speed_;
};

struct ImuModel {
  double rate = 100.0;              // Hz
  double gyro_noise = 0.005;        // rad/s, white
  double accel_noise = 0.05;        // m/s^2, white
  double yaw_bias = 0.0;            // rad/s about gravity
  double max_tilt = 0.35;           // rad, device roll/pitch drawn uniformly in +-max_tilt
  double sway_amplitude = 0.03;     // rad, walking yaw oscillation
  double sway_frequency = 1.8;      // Hz
  std::uint64_t seed = 0;
};

/// Synthesizes gyroscope and accelerometer samples for a device carried with
/// a fixed random tilt along the route.
std::vector<ImuSample> synthesize_imu(const Route& route, const Motion& motion, double t_end,
                                      const ImuModel& model);

}  // namespace wiball
