#pragma once

#include "coop/event_log.hpp"
#include "coop/trajectory.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace coop {

/// Alignment window used for ATE, seconds from the start of the overlap.
inline constexpr double kAteAlignmentWindow = 20.0;

/**
 * Closed-form 4-DOF alignment of `traj` onto `ground_truth` using only the
 * samples of `traj` within the first `window` seconds of the overlap. Ground
 * truth is linearly interpolated to the sample stamps. Throws Error when the
 * overlap is shorter than the window.
 */
RelativeTransform align_first_window(const Trajectory& traj, const Trajectory& ground_truth,
                                     double window = kAteAlignmentWindow);

/// Every point of `traj` mapped through T (frames are relabelled to T.target).
Trajectory apply_alignment(const Trajectory& traj, const RelativeTransform& T);

struct AteResult {
  double ate_2d = 0.0;
  double ate_3d = 0.0;
  std::size_t samples = 0;
};

/// RMSE over samples of `aligned` inside the ground-truth span. Throws on empty overlap.
AteResult absolute_trajectory_error(const Trajectory& aligned, const Trajectory& ground_truth);

/// Mean point-to-path distance; 0 for no samples.
double mean_path_deviation(std::span<const Vec3> actual, const ReferencePath& path);

/// Unaligned estimate-minus-truth error at one logged stamp.
struct SampleError {
  double t = 0.0;
  double error_2d = 0.0;
  double error_3d = 0.0;
  bool visible = true;
};

/// Start of the evaluated interval: guidance start plus the settle time, or
/// -inf when the log has no guidance phase.
double evaluation_start(const EventLog& log);

/// Estimate vs truth at every stamp carrying both, from `from` onwards.
std::vector<SampleError> relative_errors(const EventLog& log, double from);

double rmse_3d(std::span<const SampleError> samples);

struct TrackedSplit {
  std::optional<double> tracked;
  std::optional<double> untracked;  ///< absent when the secondary never left sight
};

/// Relative-localization RMSE inside and outside visibility, over the evaluated interval.
TrackedSplit split_tracked_rmse(const EventLog& log);

/// Seconds from each regain of visibility until the 3D error drops below
/// `threshold`; infinity when it never does.
std::vector<double> recovery_times(std::span<const SampleError> samples, double threshold);

struct ErrorReport {
  double ate_2d = 0.0;
  double ate_3d = 0.0;
  double mean_path_deviation = 0.0;
  double rel_loc_rmse = 0.0;
  std::optional<double> tracked_rmse;
  std::optional<double> untracked_rmse;
  bool failure = false;
  double evaluation_start = 0.0;
  std::vector<SampleError> per_sample_errors;
};

/// Full report for a simulated run.
ErrorReport evaluate(const EventLog& log);

/// Estimated and true secondary trajectories from a log, both in L.
Trajectory estimate_trajectory(const EventLog& log);
Trajectory truth_trajectory(const EventLog& log);

/// key=value lines.
std::string format_report(const ErrorReport& report);
/// Columns t,error_2d,error_3d,visible_flag.
std::string format_sample_csv(std::span<const SampleError> samples);

/// CSV with columns t,x,y,z and an optional yaw; a header line is skipped.
Trajectory load_trajectory_csv(const std::string& path, FrameId frame = FrameId::L);

}  // namespace coop
