#include "wiball/heading.hpp"

#include <string>

#include "wiball/error.hpp"
#include "wiball/geometry.hpp"

namespace wiball {

Vec3 gravity_estimate(std::span<const ImuSample> window, double min_norm) {
  if (window.empty()) throw ParameterError("gravity_estimate: empty window");
  Vec3 sum;
  for (const auto& s : window) sum = sum + s.acceleration;
  const Vec3 mean = sum * (1.0 / static_cast<double>(window.size()));
  const double n = mean.norm();
  if (!(n >= min_norm)) throw DegenerateInputError("gravity_estimate: accelerometer mean too small");
  return mean * (1.0 / n);
}

HeadingDelta heading_delta(const ImuSample& sample, Vec3 gravity, double dt) {
  if (!(dt > 0)) throw ParameterError("heading_delta: dt must be positive");
  if (std::fabs(gravity.norm() - 1.0) > 1e-6) throw ParameterError("heading_delta: gravity must be unit-norm");
  return {sample.timestamp + dt, sample.angular_velocity.dot(gravity) * dt};
}

std::vector<HeadingPoint> accumulate_heading(double initial_theta, const std::vector<HeadingDelta>& deltas,
                                             double initial_time) {
  std::vector<HeadingPoint> out;
  out.reserve(deltas.size() + 1);
  double theta = wrap_angle(initial_theta);
  out.push_back({initial_time, theta});
  for (std::size_t i = 0; i < deltas.size(); ++i) {
    if (i > 0 && deltas[i].timestamp < deltas[i - 1].timestamp)
      throw ParameterError("accumulate_heading: deltas not time-ordered");
    theta = wrap_angle(theta + deltas[i].delta_theta);
    out.push_back({deltas[i].timestamp, theta});
  }
  return out;
}

std::vector<HeadingDelta> heading_deltas(std::span<const ImuSample> stream, double gravity_window) {
  std::vector<HeadingDelta> out;
  if (stream.size() < 2) return out;
  out.reserve(stream.size() - 1);
  std::size_t lo = 0;
  Vec3 sum;
  for (std::size_t i = 0; i + 1 < stream.size(); ++i) {
    const double dt = stream[i + 1].timestamp - stream[i].timestamp;
    if (!(dt > 0)) throw ParameterError("heading_deltas: timestamps must increase at index " + std::to_string(i + 1));
    sum = sum + stream[i].acceleration;
    while (stream[i].timestamp - stream[lo].timestamp > gravity_window) {
      sum = sum - stream[lo].acceleration;
      ++lo;
    }
    const Vec3 mean = sum * (1.0 / static_cast<double>(i - lo + 1));
    const double n = mean.norm();
    if (!(n >= 0.5)) throw DegenerateInputError("heading_deltas: degenerate gravity at t=" + std::to_string(stream[i].timestamp));
    const HeadingDelta d = heading_delta(stream[i], mean * (1.0 / n), dt);
    out.push_back({stream[i + 1].timestamp, d.delta_theta});
  }
  return out;
}

}  // namespace wiball
