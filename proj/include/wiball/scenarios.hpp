#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "wiball/channel.hpp"
#include "wiball/motion.hpp"
#include "wiball/tracker.hpp"
#include "wiball/walker.hpp"

namespace wiball {

enum class Scenario {
  bessel_convergence,
  trrs_vs_distance,
  train_loop,
  walk_distance,
  office_track,
  error_cdf,
  packet_loss_sweep
};

Scenario parse_scenario(const std::string& name);
std::string scenario_name(Scenario s);
const std::vector<std::string>& scenario_names();

/// Small scene used for focal-spot statistics: 200 scatterers in a 7.5 m
/// square, TX 30 m away, no direct path.
SceneParams focal_scene_defaults();
/// Large reverberant scene used for moving receivers: 1000 scatterers in a
/// 150 m square so that many taps carry independent MPC sums.
SceneParams reverberant_scene_defaults();

// Focal-spot statistics ------------------------------------------------------

struct FocalCurve {
  double bandwidth = 0.0;
  std::vector<double> distance_wl;  // receiver offset in wavelengths
  std::vector<double> mean_trrs;
  std::vector<double> std_trrs;
  std::vector<double> reference;    // J0^2(kd)
  double rmse = 0.0;
  std::optional<double> first_null_wl;
  std::optional<double> first_peak_wl;
  double first_null_value = 0.0;
};

struct FocalCurveConfig {
  SceneParams scene = focal_scene_defaults();
  std::vector<std::uint64_t> seeds;
  std::size_t points = 81;
  double max_distance_wl = 2.0;
  std::size_t directions = 8;
};

/// Mean TRRS between the focal-spot CIR and CIRs displaced by d along
/// evenly spaced directions, averaged over directions and seeded scenes.
FocalCurve focal_curve(const FocalCurveConfig& cfg);

// Moving receivers -------------------------------------------------------------

struct SpeedTrial {
  double true_speed = 0.0;
  double mean_speed = 0.0;      // mean of smoothed per-column estimates
  double distance_ratio = 0.0;  // integrated distance / true distance
  std::size_t valid_columns = 0;
};

struct SpeedTrialConfig {
  SceneParams scene = reverberant_scene_defaults();
  double speed = 1.0;
  double duration = 4.0;
  double sample_period = 0.005;
  std::optional<double> snr_db;
  std::uint64_t seed = 1;
  DistancePipelineConfig pipeline;
};

/// Straight constant-speed pass through the focal spot in a random
/// direction.
SpeedTrial constant_speed_trial(const SpeedTrialConfig& cfg);

/// Speed estimate from ideal J0^2(k v tau) lag profiles sampled every
/// sample_period up to max_lag.
double oracle_profile_speed(double speed, double wavelength, double sample_period, double max_lag,
                            const PeakFitConfig& cfg = {});

struct LoopConfig {
  SceneParams scene = reverberant_scene_defaults();
  double loop_length = 8.0;
  double turn_radius = 0.6;
  double straight_speed = 1.0;
  double turn_speed = 0.7;
  double speed_jitter = 0.15;  // per-lap speed multiplier drawn in 1 +- jitter
  double margin = 0.5;         // m simulated before and after the lap
  double sample_period = 0.005;
  double snr_db = 25.0;
  DistancePipelineConfig pipeline;
};

struct LapResult {
  std::uint64_t seed = 0;
  double true_length = 0.0;
  double estimated_length = 0.0;
  double anchor_trrs = 0.0;  // lower of the two anchor-pass TRRS peaks
};

/// One lap of a stadium loop. The lap is delimited by the two TRRS peaks
/// against a CIR recorded at the anchor point; its length is the distance
/// integrated between them.
LapResult simulate_lap(const LoopConfig& cfg, std::uint64_t seed);

struct WalkConfig {
  SceneParams scene = reverberant_scene_defaults();
  double mean_speed = 1.0;
  double speed_spread = 0.3;   // per-walk speed drawn in mean +- spread
  double speed_wobble = 0.2;   // relative slow variation within a walk
  double max_turn_deg = 30.0;  // heading change at each bend
  double sample_period = 0.005;
  double snr_db = 25.0;
  DistancePipelineConfig pipeline;
};

/// Free walk of the given length with a bent path and varying speed.
double simulate_walk(const WalkConfig& cfg, double length, std::uint64_t seed);

struct LossConfig {
  SceneParams scene = reverberant_scene_defaults();
  double length = 10.0;
  double speed = 1.0;
  double sample_period = 0.005;
  double snr_db = 25.0;
  std::vector<double> loss_rates{0.0, 0.1, 0.2, 0.3, 0.4};
  std::size_t trials = 100;
  std::uint64_t seed = 1;
  DistancePipelineConfig pipeline;
};

std::vector<LossSweepRow> run_loss_sweep(const LossConfig& cfg);

// Office tracking ----------------------------------------------------------------

/// Corridor ring in a 36.3 m x 19 m office with corner landmarks.
FloorPlan office_floorplan();
/// Route from point A around the corridor ring, long enough for 69 m.
Route office_route(double fillet_radius = 0.5);

struct OfficeConfig {
  SceneParams scene;  // defaults to a reverberant scene centered on the office
  double scale_error = 0.10;      // estimated distances are this much too long
  double drift_deg_per_min = 2.0; // gyro bias about gravity
  double mean_speed = 1.0;
  double speed_spread = 0.2;
  double sample_period = 0.005;
  double snr_db = 25.0;
  double fillet_radius = 0.5;
  TrackerConfig tracker;
  OfficeConfig();
};

struct OfficeTrial {
  double path_length = 0.0;
  std::uint64_t seed = 0;
  Vec2 truth;
  Vec2 corrected;
  Vec2 uncorrected;
  double corrected_error = 0.0;
  double uncorrected_error = 0.0;
  std::vector<TracePoint> corrected_trace;
  std::vector<TracePoint> uncorrected_trace;
  std::vector<std::pair<double, Vec2>> truth_trace;
  std::size_t snaps = 0;
  std::size_t recoveries = 0;
};

/// One seeded walk from point A, evaluated at each stop distance as if the
/// recording had ended there.
std::vector<OfficeTrial> simulate_office_walks(const OfficeConfig& cfg, const std::vector<double>& stops,
                                               std::uint64_t seed, bool keep_traces = false);
OfficeTrial simulate_office_walk(const OfficeConfig& cfg, double path_length, std::uint64_t seed,
                                 bool keep_traces = false);

// Harness ----------------------------------------------------------------------------

struct ExperimentConfig {
  Scenario scenario = Scenario::bessel_convergence;
  SceneParams scene;
  std::vector<std::uint64_t> seeds;
  std::filesystem::path output_dir = "out";
  /// Scenario-specific fields, already checked against the scenario's keys.
  nlohmann::json params = nlohmann::json::object();
};

/// Builds a validated config from a JSON document. Keys: "scenario",
/// "scene" (object), "seeds" (list) or "seed" + "trials", "output_dir" and
/// "params" (object). Throws ConfigError on any invalid field.
ExperimentConfig experiment_config_from_json(const nlohmann::json& j, std::optional<Scenario> scenario = {});

/// Default config for a scenario, as a JSON document.
nlohmann::json default_experiment_json(Scenario s);

struct ScenarioOutput {
  nlohmann::json report;
  std::vector<std::pair<std::string, std::string>> files;  // name, CSV text
  bool passed() const;
};

ScenarioOutput run_scenario(const ExperimentConfig& cfg);

/// Writes report.json and every data file into cfg.output_dir.
void write_scenario_output(const ScenarioOutput& out, const std::filesystem::path& dir);

/// Percentile by linear interpolation between order statistics, p in [0, 100].
double percentile(std::vector<double> values, double p);

}  // namespace wiball
