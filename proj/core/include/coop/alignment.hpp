#pragma once

#include "coop/detection.hpp"
#include "coop/geometry.hpp"

#include <optional>
#include <span>
#include <vector>

namespace coop {

/// A LiDAR detection (frame L) paired with the VIO position (frame V) at the same stamp.
struct Correspondence {
  double stamp = 0.0;
  Vec3 lidar_position = Vec3::Zero();
  Vec3 vio_position = Vec3::Zero();
};

struct AlignmentConfig {
  double window = 15.0;             ///< seconds of history used per solve
  std::size_t min_correspondences = 10;
  double min_path_length = 1.0;     ///< m, see AlignmentResult::path_length
  double max_final_cost = 0.09;     ///< threshold on the mean soft-L1 residual
  /// m; residuals are robustified as a²·ρ(s/a²). a = 1 gives the bare soft-L1.
  double loss_scale = 0.1;
  double min_eigenvalue = 1.0;      ///< threshold on λ_min of the Fisher information
  double interpolation_tolerance = kDefaultExtrapolationTolerance;
  double max_detection_gap = 0.5;   ///< s; VIO stamps inside a wider detection gap are skipped
  /// Also fit a constant drift velocity of V over the window, so that
  /// p_i = R(θ)·d_i + t + v·(stamp_i − stamp_last). Off: the plain 4-DOF model.
  bool estimate_drift_rate = false;

  // Levenberg-Marquardt
  double initial_damping = 1e-4;
  double damping_up = 2.0;
  double damping_down = 3.0;
  int max_iterations = 100;
  double gradient_tolerance = 1e-10;
  double step_tolerance = 1e-12;
};

struct CorrespondenceSet {
  std::vector<Correspondence> items;
  bool sufficient = false;
};

/**
 * Pairs every VIO pose inside the trailing `window` with the detection track
 * linearly interpolated to the VIO stamp.
 *
 * VIO stamps outside the detection span (beyond the interpolation tolerance)
 * or inside a detection gap wider than `max_detection_gap` are skipped. Fewer
 * than `min_correspondences` pairs yields an empty, insufficient set.
 */
CorrespondenceSet build_correspondences(std::span<const Detection> detections,
                                        std::span<const TimedPose> vio_buffer, double window,
                                        const AlignmentConfig& config = {});

/// Soft-L1 robust loss ρ(s) = 2(√(1+s) − 1) on a squared residual.
double soft_l1(double s);
/// ρ'(s) = 1/√(1+s).
double soft_l1_derivative(double s);

struct AlignmentResult {
  RelativeTransform transform;   ///< maps L into V, at the newest correspondence stamp
  Vec3 drift_rate = Vec3::Zero();  ///< m/s, zero unless estimate_drift_rate
  bool converged = false;
  double final_cost = 0.0;       ///< mean ρ over correspondences
  double min_eigenvalue = 0.0;
  int iterations = 0;
  double path_length = 0.0;
  std::vector<double> cost_history;  ///< objective after each accepted step, starting with the initial cost
};

/// Centroid-difference translation with zero heading.
RelativeTransform initial_guess(std::span<const Correspondence> corrs);

/**
 * Minimizes ½ Σ ρ(‖R(θ)·d_i + t − p_i‖²) over (t, θ) with Levenberg-Marquardt
 * (plus the drift velocity when config.estimate_drift_rate is set).
 *
 * The robust loss enters through per-residual weights ρ'(s_i) recomputed at
 * every linearization. `converged` requires both the optimizer tolerances and
 * final_cost <= config.max_final_cost. Throws if there are fewer than
 * config.min_correspondences pairs.
 */
AlignmentResult solve_alignment(std::span<const Correspondence> corrs,
                                const RelativeTransform& initial,
                                const AlignmentConfig& config = {});

/**
 * Smallest eigenvalue of JᵀJ for the residual Jacobian, with the rotation
 * parameterized about the centroid of the LiDAR points. Zero for a single
 * point; equals min(N, Σ‖d_i − d̄‖²_xy) otherwise. With `drift_rate` the
 * Jacobian also carries the drift-velocity columns (centered stamps).
 */
double fisher_min_eigenvalue(std::span<const Correspondence> corrs, bool drift_rate = false);

/// min(path length of the LiDAR polyline, path length of the VIO polyline).
double window_path_length(std::span<const Correspondence> corrs);

/// Accept iff converged, path_length >= min_path_length and min_eigenvalue >= min_eig.
bool degeneracy_check(const AlignmentResult& result, double min_path_length, double min_eig);

/**
 * Closed-form least-squares 4-DOF alignment: finds (t, θ) minimizing
 * Σ‖R(θ)·a_i + t − b_i‖². Heading comes from the cross/dot sums of the
 * centered horizontal coordinates. Requires at least one pair.
 */
RelativeTransform closed_form_yaw_alignment(std::span<const Vec3> from, std::span<const Vec3> to,
                                            FrameId source = FrameId::L,
                                            FrameId target = FrameId::V);

}  // namespace coop
