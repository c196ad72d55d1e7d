#pragma once

#include <limits>
#include <string>
#include <vector>

#include "wiball/channel.hpp"
#include "wiball/geometry.hpp"
#include "wiball/heading.hpp"
#include "wiball/motion.hpp"

namespace wiball {

enum class LandmarkKind { corner, door, corridor_end };

struct Landmark {
  Vec2 pos;
  LandmarkKind kind = LandmarkKind::corner;
};

struct FloorPlan {
  std::vector<Segment> walls;
  std::vector<Landmark> landmarks;
  Rect bounds;

  /// Throws ParameterError on degenerate walls or landmarks outside bounds.
  void validate() const;
  bool crosses_wall(const Segment& path) const;
};

struct TracePose {
  double timestamp = 0.0;
  Vec2 pos;
  double heading = 0.0;
  /// Unscaled distance travelled since the start of the track.
  double raw_distance = 0.0;
};

struct PathHypothesis {
  double scale = 1.0;
  double heading_bias = 0.0;
  std::vector<TracePose> pose_trace;
  double weight = 0.0;

  // Last map-verified position; the start pose until the first snap.
  Vec2 anchor;
  double last_snap_time = -std::numeric_limits<double>::infinity();

  const TracePose& tip() const { return pose_trace.back(); }
  bool alive() const { return weight > 0.0; }
};

struct TrackState {
  std::vector<PathHypothesis> hypotheses;
  /// Gyro heading accumulated from the initial heading, before any bias.
  double imu_heading = 0.0;
  double cumulative_distance = 0.0;
  TracePose current_pose;
  std::size_t recoveries = 0;
  std::size_t snaps = 0;

  const PathHypothesis& dominant() const;
};

struct TrackerConfig {
  Vec2 initial_position;
  double initial_heading = 0.0;

  std::vector<double> scale_grid{1.0, 0.95, 1.05, 0.9, 1.1, 0.85, 1.15, 0.8, 1.2};
  std::vector<double> bias_grid{0.0, -5.0 * kPi / 180.0, 5.0 * kPi / 180.0};
  double scale_min = 0.7;
  double scale_max = 1.3;
  std::vector<double> recovery_scale_offsets{0.0, -0.05, 0.05, -0.1, 0.1};
  std::vector<double> recovery_bias_offsets{0.0, -10.0 * kPi / 180.0, 10.0 * kPi / 180.0};

  double turn_threshold = 60.0 * kPi / 180.0;
  double turn_window = 1.0;
  double settle_window = 0.3;
  double settle_threshold = 20.0 * kPi / 180.0;
  double capture_radius = 2.0;
  double snap_refractory = 3.0;
  double min_leg_for_rescale = 3.0;
  double landmark_boost = 2.0;

  // Pipeline settings used by track().
  double wavelength = kSpeedOfLight / 5.8e9;
  DistancePipelineConfig distance;
  double fusion_interval = 0.16;
  double gravity_window = 0.5;
  bool map_correction = true;
  double gap_threshold = 1.0;
};

/// Hypothesis grid (scale x bias) at the initial pose, ordered so the
/// nominal hypothesis comes first. Weights are uniform.
TrackState initial_state(const TrackerConfig& cfg, double timestamp = 0.0);

/// Rotates every live hypothesis by delta_theta, then advances it by
/// scale * d_increment along its biased heading.
TrackState dead_reckon_step(TrackState state, double timestamp, double d_increment, double delta_theta);

/// Zeroes hypotheses whose last segment crosses a wall and renormalizes.
/// When none survive, regenerates a widened grid at the last valid pose of
/// the previously dominant hypothesis.
TrackState prune_and_reweight(TrackState state, const FloorPlan& plan, const TrackerConfig& cfg = {});

/// Snaps completed turns near corner/door landmarks onto the landmark and
/// re-estimates scale and heading bias from the anchor-to-landmark leg.
TrackState landmark_correct(TrackState state, const FloorPlan& plan, const TrackerConfig& cfg = {});

struct TracePoint {
  double timestamp = 0.0;
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;
  double cum_distance = 0.0;
  double dominant_scale = 1.0;
};

struct StreamGap {
  std::string stream;
  double t_start = 0.0;
  double t_end = 0.0;
};

struct TrackResult {
  std::vector<TracePoint> trace;
  std::vector<StreamGap> gaps;
  std::size_t recoveries = 0;
  std::size_t snaps = 0;
};

/// Runs the whole pipeline: CIR stream to distance increments, IMU stream
/// to heading deltas, fused per fusion_interval with map correction.
TrackResult track(const std::vector<Cir>& cirs, const std::vector<ImuSample>& imu, const FloorPlan& plan,
                  const TrackerConfig& cfg);

/// Same fusion loop fed with precomputed distance and heading inputs.
TrackResult track_from_increments(const DistanceTrack& distance, const std::vector<HeadingDelta>& deltas,
                                  double t_start, double t_end, const FloorPlan& plan, const TrackerConfig& cfg);

std::string trace_to_csv(const std::vector<TracePoint>& trace);

}  // namespace wiball
