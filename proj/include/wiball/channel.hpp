#pragma once

#include <complex>
#include <cstdint>
#include <optional>
#include <vector>

#include "wiball/geometry.hpp"

namespace wiball {

inline constexpr double kSpeedOfLight = 299792458.0;

using Complex = std::complex<double>;

/// One propagation path as seen at a receiver position.
struct Mpc {
  double travel_distance = 0.0;  // m, total path length
  double arrival_angle = 0.0;    // rad in [0, 2pi), direction the wave arrives from
  double gain = 0.0;             // amplitude, >= 0
  double reflection_phase = 0.0; // rad in [0, 2pi)
  bool direct = false;
};

enum class PulseShaper { rectangular };

/// Scatterer field plus TX/RX geometry and radio parameters.
struct Scene {
  std::vector<Vec2> scatterers;
  std::vector<double> reflection_coeffs;
  Vec2 tx_pos;
  Vec2 rx_focal_pos;
  double carrier_f0 = 5.8e9;
  double bandwidth = 500e6;
  PulseShaper pulse_shaper = PulseShaper::rectangular;
  std::size_t tap_count = 0;
  bool direct_path = true;

  double wavelength() const { return kSpeedOfLight / carrier_f0; }
  double wavenumber() const { return kTwoPi * carrier_f0 / kSpeedOfLight; }
  double sample_period() const { return 1.0 / bandwidth; }

  /// Throws ParameterError when an invariant is broken.
  void validate() const;
};

/// One sampled channel impulse response.
struct Cir {
  std::vector<Complex> taps;
  double timestamp = 0.0;
  std::optional<Vec2> pose;

  double energy() const;
};

struct SceneParams {
  std::uint64_t seed = 1;
  std::size_t n_scatterers = 200;
  double region_side = 7.5;
  double tx_rx_separation = 30.0;
  double carrier_f0 = 5.8e9;
  double bandwidth = 500e6;
  Vec2 center;            // focal spot and center of the scatterer square
  double tx_bearing = 0;  // rad, direction from the focal spot to the TX
  bool direct_path = true;
  /// Half-width of the square around the focal spot the receiver may visit.
  /// Widens the tap budget so moving receivers keep every MPC.
  double roaming_radius = 0.0;
};

Scene generate_scene(std::uint64_t seed, std::size_t n_scatterers, double region_side,
                     double tx_rx_separation, double carrier_f0, double bandwidth);
Scene generate_scene(const SceneParams& params);

/// Default tap budget: ceil(max path delay * B) + 4 guard taps, where the
/// maximum is taken over receivers within roaming_radius of the focal spot.
std::size_t default_tap_count(const Scene& scene, double roaming_radius = 0.0);

/// One single-bounce MPC per scatterer, followed by the direct path when the
/// scene enables it.
std::vector<Mpc> enumerate_mpcs(const Scene& scene, Vec2 rx_pos);

struct SynthesisStats {
  std::size_t dropped_mpcs = 0;
};

/// Bins MPCs into taps of width 1/B and sums them coherently per tap.
Cir synthesize_cir(const Scene& scene, Vec2 rx_pos, double timestamp,
                   SynthesisStats* stats = nullptr);

/// Repeated synthesis in one scene. Validates once and caches the
/// TX-to-scatterer legs. The scene must outlive the synthesizer.
class CirSynthesizer {
 public:
  explicit CirSynthesizer(const Scene& scene);
  Cir operator()(Vec2 rx_pos, double timestamp, SynthesisStats* stats = nullptr) const;

 private:
  const Scene& scene_;
  std::vector<double> tx_legs_;
};

struct Waypoint {
  Vec2 pos;
  double time = 0.0;
};

/// Additive complex white noise on every tap. snr_db is the ratio of CIR
/// energy to total noise energy.
struct NoiseModel {
  double snr_db = 0.0;
  std::uint64_t seed = 0;
};

std::vector<Cir> synthesize_trajectory(const Scene& scene, const std::vector<Waypoint>& waypoints,
                                       double sample_period,
                                       const std::optional<NoiseModel>& noise = std::nullopt,
                                       SynthesisStats* stats = nullptr);

/// Receiver position at time t along a piecewise-linear waypoint path,
/// clamped to the first and last waypoint.
Vec2 interpolate_waypoints(const std::vector<Waypoint>& waypoints, double t);

/// Samples along an arbitrary pose function. Used by the experiment
/// harness for curved paths.
template <class PoseFn>
std::vector<Cir> synthesize_along(const Scene& scene, const std::vector<double>& times,
                                  PoseFn&& pose_at, SynthesisStats* stats = nullptr) {
  const CirSynthesizer synth(scene);
  std::vector<Cir> out;
  out.reserve(times.size());
  for (double t : times) {
    Vec2 p = pose_at(t);
    Cir c = synth(p, t, stats);
    c.pose = p;
    out.push_back(std::move(c));
  }
  return out;
}

void add_noise(std::vector<Cir>& cirs, const NoiseModel& noise);

}  // namespace wiball
