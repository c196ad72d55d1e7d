#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "wiball/trrs.hpp"

namespace wiball {

/// Distance from the focal spot to the first local maximum of J0^2(kd), in
/// wavelengths, as used by the speed estimator.
inline constexpr double kFirstPeakWavelengths = 0.61;

struct PeakFitConfig {
  /// A candidate must rise this far above the lowest value seen before it.
  double prominence = 0.01;
  /// Quadratic fit window; shrinks to 3 when 5 samples would leave the lobe.
  std::size_t window = 5;
  std::size_t min_entries = 5;
  /// A profile whose present values never drop below this level is a
  /// stationary receiver.
  double stationary_level = 0.5;
};

enum class NoPeakReason { too_few_entries, stationary, no_maximum };

struct PeakFit {
  double peak_lag = 0.0;
  double confidence = 0.0;
  double peak_value = 0.0;
  double valley_value = 0.0;
};

struct PeakResult {
  std::optional<PeakFit> peak;
  NoPeakReason reason = NoPeakReason::no_maximum;

  explicit operator bool() const { return peak.has_value(); }
};

using LagProfile = std::vector<std::pair<double, std::optional<double>>>;

/// Locates the first local maximum after the initial decay and refines its
/// lag with a least-squares quadratic vertex. Absent entries are skipped.
PeakResult find_first_peak(const LagProfile& profile, const PeakFitConfig& cfg = {});

struct SpeedEstimate {
  double timestamp = 0.0;
  double speed = 0.0;
  double peak_lag = 0.0;
  double confidence = 0.0;
  /// No-peak because the profile never decayed; the receiver is at rest.
  bool stationary = false;
};

/// speed = 0.61 lambda / peak_lag. The column is prefixed with the lag-0
/// value 1 before peak search.
SpeedEstimate estimate_speed(const LagProfile& column, double timestamp, double wavelength,
                             const PeakFitConfig& cfg = {});

std::vector<SpeedEstimate> estimate_speeds(const TrrsMatrix& matrix, double wavelength,
                                           const PeakFitConfig& cfg = {});

/// Running median over an odd window of samples, leaving no-peak samples
/// untouched. Window 1 is the identity.
std::vector<SpeedEstimate> median_smooth(const std::vector<SpeedEstimate>& speeds, std::size_t window);

struct DistanceIncrement {
  double t_start = 0.0;
  double t_end = 0.0;
  double distance = 0.0;
};

struct DistanceTrack {
  double cumulative_distance = 0.0;
  std::vector<DistanceIncrement> increments;

  /// Distance covered up to time t, linear within an increment.
  double distance_at(double t) const;
};

struct IntegrationConfig {
  double min_confidence = 0.02;
  double hold_time = 0.5;
  double decay_time = 0.5;
};

/// Trapezoidal integration. Low-confidence samples reuse the last reliable
/// speed for hold_time, then ramp linearly to zero over decay_time.
/// Stationary samples count as reliable zero speed.
DistanceTrack integrate_distance(const std::vector<SpeedEstimate>& speeds, const IntegrationConfig& cfg = {});

struct DistancePipelineConfig {
  double max_lag = 0.16;
  double sample_period = 0.0;  // 0 = infer from the stream
  std::size_t column_stride = 1;
  std::size_t smoothing_window = 33;
  PeakFitConfig peak;
  IntegrationConfig integration;
};

struct DistanceResult {
  std::vector<SpeedEstimate> speeds;
  DistanceTrack track;
};

/// Sliding TRRS matrix, per-column speed, smoothing and integration.
DistanceResult estimate_distance(const std::vector<Cir>& stream, double wavelength,
                                 const DistancePipelineConfig& cfg = {});

struct LossSweepRow {
  double loss_rate = 0.0;
  double mean_distance = 0.0;
  double std_distance = 0.0;
};

/// Drops CIRs i.i.d. at each rate and reruns estimate_distance. std is the
/// sample standard deviation over trials.
std::vector<LossSweepRow> packet_loss_sweep(const std::vector<Cir>& trajectory,
                                            const std::vector<double>& loss_rates, std::size_t trials,
                                            std::uint64_t seed, double wavelength,
                                            const DistancePipelineConfig& cfg = {});

}  // namespace wiball
