#pragma once

#include "coop/geometry.hpp"

#include <span>
#include <variant>
#include <vector>

namespace coop {

struct TrajectoryPoint {
  double stamp = 0.0;
  Vec3 position = Vec3::Zero();
  double heading = 0.0;
};

/// Stamped position + heading references in one frame; stamps strictly increasing.
struct Trajectory {
  FrameId frame = FrameId::L;
  std::vector<TrajectoryPoint> points;

  bool empty() const { return points.empty(); }
  std::size_t size() const { return points.size(); }
  double start() const { return points.front().stamp; }
  double end() const { return points.back().stamp; }
};

/// Throws unless stamps are strictly increasing and finite.
void validate(const Trajectory& traj);

/// Interpolated reference at t, clamped to the end points. Trajectory must be non-empty.
TrajectoryPoint sample(const Trajectory& traj, double t);

/// Points with stamp >= t. When t falls strictly inside a segment, the
/// interpolated reference at t is prepended so the suffix starts at t.
Trajectory remaining(const Trajectory& traj, double t);

/// Maps every point through T (frames must match).
Trajectory transform_trajectory(const Trajectory& traj, const RelativeTransform& T);

/// Reference paths for deviation metrics.
struct CirclePath {
  Vec3 center = Vec3::Zero();
  double radius = 1.0;
};
struct PolylinePath {
  std::vector<Vec3> vertices;
  bool closed = true;
};
using ReferencePath = std::variant<CirclePath, PolylinePath>;

/// Point-to-path distance. For circles: horizontal radial error and altitude
/// error combined in quadrature.
double distance_to_path(const ReferencePath& path, const Vec3& p);

// Generators. Headings follow the direction of travel; samples every
// `sample_period` seconds starting at `start_time`.
Trajectory make_circle(const Vec3& center, double radius, double speed, double laps,
                       double start_time, double sample_period, double start_angle = 0.0);
Trajectory make_figure_eight(const Vec3& center, double size, double speed, double laps,
                             double start_time, double sample_period);
Trajectory make_polyline_loop(std::span<const Vec3> vertices, double speed, double laps,
                              double start_time, double sample_period);

/// Dense closed polyline tracing one lap of the figure-eight.
PolylinePath figure_eight_path(const Vec3& center, double size);

}  // namespace coop
