#include "wiball/channel.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "wiball/error.hpp"

namespace wiball {

namespace {

double normalize_angle(double a) {
  double r = std::fmod(a, kTwoPi);
  if (r < 0) r += kTwoPi;
  if (r >= kTwoPi) r = 0.0;
  return r;
}

bool finite(Vec2 p) { return std::isfinite(p.x) && std::isfinite(p.y); }

}  // namespace

void Scene::validate() const {
  if (!(bandwidth > 0)) throw ParameterError("scene: bandwidth must be positive");
  if (!(carrier_f0 > bandwidth)) throw ParameterError("scene: carrier must exceed bandwidth");
  if (scatterers.empty()) throw ParameterError("scene: scatterer field is empty");
  if (reflection_coeffs.size() != scatterers.size())
    throw ParameterError("scene: one reflection coefficient per scatterer required");
  for (double g : reflection_coeffs)
    if (!(g > 0.0 && g < 1.0)) throw ParameterError("scene: reflection coefficients must be in (0,1)");
  for (const auto& s : scatterers)
    if (!finite(s)) throw ParameterError("scene: non-finite scatterer position");
  if (!finite(tx_pos) || !finite(rx_focal_pos)) throw ParameterError("scene: non-finite TX/RX position");
  if (tap_count == 0) throw ParameterError("scene: tap count must be positive");
}

double Cir::energy() const {
  double e = 0.0;
  for (const auto& h : taps) e += std::norm(h);
  return e;
}

std::size_t default_tap_count(const Scene& scene, double roaming_radius) {
  const double slack = roaming_radius * std::sqrt(2.0);
  double max_r = (scene.tx_pos - scene.rx_focal_pos).norm() + slack;
  for (const auto& s : scene.scatterers) {
    max_r = std::max(max_r, (s - scene.tx_pos).norm() + (s - scene.rx_focal_pos).norm() + slack);
  }
  return static_cast<std::size_t>(std::ceil(max_r / kSpeedOfLight * scene.bandwidth)) + 4;
}

Scene generate_scene(const SceneParams& p) {
  if (p.n_scatterers < 1) throw ParameterError("generate_scene: need at least one scatterer");
  if (!(p.region_side > 0)) throw ParameterError("generate_scene: region side must be positive");
  if (!(p.tx_rx_separation > 0)) throw ParameterError("generate_scene: TX-RX separation must be positive");
  if (!(p.bandwidth > 0) || !(p.carrier_f0 > p.bandwidth))
    throw ParameterError("generate_scene: need carrier > bandwidth > 0");
  if (p.roaming_radius < 0) throw ParameterError("generate_scene: negative roaming radius");

  std::mt19937_64 rng(p.seed);
  std::uniform_real_distribution<double> pos(-p.region_side / 2, p.region_side / 2);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  Scene scene;
  scene.scatterers.reserve(p.n_scatterers);
  scene.reflection_coeffs.reserve(p.n_scatterers);
  for (std::size_t i = 0; i < p.n_scatterers; ++i) {
    const double x = pos(rng);
    const double y = pos(rng);
    double g = 0.0;
    while (g <= 0.0) g = unit(rng);
    scene.scatterers.push_back(p.center + Vec2{x, y});
    scene.reflection_coeffs.push_back(g);
  }
  scene.rx_focal_pos = p.center;
  scene.tx_pos = p.center + unit_vector(p.tx_bearing) * p.tx_rx_separation;
  scene.carrier_f0 = p.carrier_f0;
  scene.bandwidth = p.bandwidth;
  scene.direct_path = p.direct_path;
  scene.tap_count = default_tap_count(scene, p.roaming_radius);
  return scene;
}

Scene generate_scene(std::uint64_t seed, std::size_t n_scatterers, double region_side,
                     double tx_rx_separation, double carrier_f0, double bandwidth) {
  SceneParams p;
  p.seed = seed;
  p.n_scatterers = n_scatterers;
  p.region_side = region_side;
  p.tx_rx_separation = tx_rx_separation;
  p.carrier_f0 = carrier_f0;
  p.bandwidth = bandwidth;
  return generate_scene(p);
}

std::vector<Mpc> enumerate_mpcs(const Scene& scene, Vec2 rx_pos) {
  std::vector<Mpc> out;
  out.reserve(scene.scatterers.size() + 1);
  for (std::size_t i = 0; i < scene.scatterers.size(); ++i) {
    const Vec2 s = scene.scatterers[i];
    const Vec2 leg = s - rx_pos;
    const double r = (s - scene.tx_pos).norm() + leg.norm();
    out.push_back({r, normalize_angle(leg.angle()), scene.reflection_coeffs[i] / r, 0.0, false});
  }
  if (scene.direct_path) {
    const Vec2 leg = scene.tx_pos - rx_pos;
    const double r = leg.norm();
    out.push_back({r, normalize_angle(leg.angle()), 1.0 / r, 0.0, true});
  }
  return out;
}

namespace {

// Adds one MPC to its tap. The carrier phase 2*pi*f0*(l*T - tau) is split
// into fractional cycles to keep the argument of sin/cos small.
inline void accumulate(std::vector<Complex>& taps, double r, double gain, double phi,
                       double f0_over_b, double inv_wavelength, double b_over_c,
                       std::size_t& dropped) {
  const double tap_pos = r * b_over_c;
  const double l = std::floor(tap_pos + 0.5);
  if (l >= static_cast<double>(taps.size())) {
    ++dropped;
    return;
  }
  const double tap_cycles = l * f0_over_b;
  const double path_cycles = r * inv_wavelength;
  const double cycles = (tap_cycles - std::floor(tap_cycles)) - (path_cycles - std::floor(path_cycles));
  const double phase = kTwoPi * cycles - phi;
  taps[static_cast<std::size_t>(l)] += Complex(gain * std::cos(phase), gain * std::sin(phase));
}

}  // namespace

CirSynthesizer::CirSynthesizer(const Scene& scene) : scene_(scene) {
  scene.validate();
  tx_legs_.reserve(scene.scatterers.size());
  for (const auto& s : scene.scatterers) tx_legs_.push_back((s - scene.tx_pos).norm());
}

Cir CirSynthesizer::operator()(Vec2 rx_pos, double timestamp, SynthesisStats* stats) const {
  Cir cir;
  cir.timestamp = timestamp;
  cir.taps.assign(scene_.tap_count, Complex{});
  const double f0_over_b = scene_.carrier_f0 / scene_.bandwidth;
  const double inv_wavelength = scene_.carrier_f0 / kSpeedOfLight;
  const double b_over_c = scene_.bandwidth / kSpeedOfLight;
  std::size_t dropped = 0;
  for (std::size_t i = 0; i < scene_.scatterers.size(); ++i) {
    const double r = tx_legs_[i] + (scene_.scatterers[i] - rx_pos).norm();
    accumulate(cir.taps, r, scene_.reflection_coeffs[i] / r, 0.0, f0_over_b, inv_wavelength, b_over_c, dropped);
  }
  if (scene_.direct_path) {
    const double r = (scene_.tx_pos - rx_pos).norm();
    accumulate(cir.taps, r, 1.0 / r, 0.0, f0_over_b, inv_wavelength, b_over_c, dropped);
  }
  if (stats) stats->dropped_mpcs += dropped;
  return cir;
}

Cir synthesize_cir(const Scene& scene, Vec2 rx_pos, double timestamp, SynthesisStats* stats) {
  return CirSynthesizer(scene)(rx_pos, timestamp, stats);
}

Vec2 interpolate_waypoints(const std::vector<Waypoint>& waypoints, double t) {
  if (waypoints.empty()) throw ParameterError("interpolate_waypoints: no waypoints");
  if (t <= waypoints.front().time) return waypoints.front().pos;
  if (t >= waypoints.back().time) return waypoints.back().pos;
  auto it = std::upper_bound(waypoints.begin(), waypoints.end(), t,
                             [](double v, const Waypoint& w) { return v < w.time; });
  const Waypoint& b = *it;
  const Waypoint& a = *(it - 1);
  const double u = (t - a.time) / (b.time - a.time);
  return a.pos + (b.pos - a.pos) * u;
}

std::vector<Cir> synthesize_trajectory(const Scene& scene, const std::vector<Waypoint>& waypoints,
                                       double sample_period, const std::optional<NoiseModel>& noise,
                                       SynthesisStats* stats) {
  if (waypoints.empty()) throw ParameterError("synthesize_trajectory: no waypoints");
  if (!(sample_period > 0)) throw ParameterError("synthesize_trajectory: sample period must be positive");
  for (std::size_t i = 1; i < waypoints.size(); ++i) {
    if (!(waypoints[i].time > waypoints[i - 1].time))
      throw ParameterError("synthesize_trajectory: waypoint timestamps not increasing at index " +
                           std::to_string(i));
  }
  const double t0 = waypoints.front().time;
  const double span = waypoints.back().time - t0;
  const auto n = static_cast<std::size_t>(std::floor(span / sample_period + 1e-9)) + 1;
  std::vector<double> times(n);
  for (std::size_t k = 0; k < n; ++k) times[k] = t0 + static_cast<double>(k) * sample_period;
  auto cirs = synthesize_along(
      scene, times, [&](double t) { return interpolate_waypoints(waypoints, t); }, stats);
  if (noise) add_noise(cirs, *noise);
  return cirs;
}

void add_noise(std::vector<Cir>& cirs, const NoiseModel& noise) {
  std::mt19937_64 rng(noise.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double inv_snr = std::pow(10.0, -noise.snr_db / 10.0);
  for (auto& c : cirs) {
    if (c.taps.empty()) continue;
    const double per_tap = c.energy() * inv_snr / static_cast<double>(c.taps.size());
    const double sigma = std::sqrt(per_tap / 2.0);
    for (auto& h : c.taps) {
      const double re = normal(rng);
      const double im = normal(rng);
      h += Complex(sigma * re, sigma * im);
    }
  }
}

}  // namespace wiball
