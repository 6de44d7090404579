#pragma once

#include <Eigen/Core>

#include <span>
#include <stdexcept>
#include <string>
#include <string_view>

namespace coop {

/// Thrown for contract violations (bad inputs, stale queries, missing state).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Reference frames.
///  W: world, L: primary LiDAR-SLAM frame, V: secondary VIO frame,
///  P: primary body, S: secondary body.
enum class FrameId { W, L, V, P, S };

std::string_view to_string(FrameId f);
FrameId frame_from_string(std::string_view s);

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Wraps an angle to (-pi, pi]. Throws on non-finite input.
double wrap_heading(double angle);

/// Signed shortest angular difference a - b, wrapped to (-pi, pi].
inline double heading_diff(double a, double b) { return wrap_heading(a - b); }

/// Rotation about +z by `heading`.
Mat3 yaw_rotation(double heading);

/// d/dθ of yaw_rotation(θ).
Mat3 yaw_rotation_derivative(double heading);

/**
 * Gravity-aligned 4-DOF transform mapping points expressed in `source` to
 * `target`:  x_target = R(heading) * x_source + translation.
 *
 * final_cost / min_eigenvalue carry the diagnostics of the estimate that
 * produced the transform; they are zero for constructed transforms.
 */
struct RelativeTransform {
  Vec3 translation = Vec3::Zero();
  double heading = 0.0;
  FrameId source = FrameId::L;
  FrameId target = FrameId::V;
  double stamp = 0.0;
  bool valid = true;
  double final_cost = 0.0;
  double min_eigenvalue = 0.0;

  static RelativeTransform identity(FrameId source, FrameId target);
  static RelativeTransform from(FrameId source, FrameId target, const Vec3& translation,
                                double heading, double stamp = 0.0);

  Mat3 rotation() const { return yaw_rotation(heading); }
  RelativeTransform inverse() const;
};

/// R(θ)·x + t. Throws if the transform is not valid.
Vec3 apply_transform(const RelativeTransform& T, const Vec3& x);

/// Rotation part only, for velocities and other free vectors.
Vec3 rotate_vector(const RelativeTransform& T, const Vec3& v);

/// outer ∘ inner (apply inner first). Frames must chain: inner.target == outer.source.
RelativeTransform compose(const RelativeTransform& outer, const RelativeTransform& inner);

struct TimedPose {
  double stamp = 0.0;
  FrameId frame = FrameId::V;
  Vec3 position = Vec3::Zero();
  double heading = 0.0;
  Vec3 velocity = Vec3::Zero();
  double heading_rate = 0.0;
};

/// Re-expresses a pose in T.target. The pose must be in T.source.
TimedPose transform_pose(const RelativeTransform& T, const TimedPose& pose);

/// Default allowed extrapolation beyond a buffer's span, one LiDAR frame.
inline constexpr double kDefaultExtrapolationTolerance = 0.1;

/**
 * Interpolates a time-sorted pose buffer at `t`.
 *
 * Position, velocity and heading rate are linear in time; heading follows the
 * shortest arc. A query at a stored stamp returns that pose unchanged. Queries
 * outside the span by at most `tolerance` are linearly extrapolated from the
 * end segment; further out throws Error("stale query").
 */
TimedPose interpolate(std::span<const TimedPose> buffer, double t,
                      double tolerance = kDefaultExtrapolationTolerance);

}  // namespace coop
