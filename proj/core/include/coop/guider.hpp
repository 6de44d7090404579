#pragma once

#include "coop/alignment.hpp"
#include "coop/detection.hpp"
#include "coop/tracker.hpp"
#include "coop/trajectory.hpp"

#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace coop {

enum class GuiderStatus {
  Uninitialized,
  Tracking,
  DeadReckoningVio,  ///< no recent detections; position carried by VIO
  HeadingFrozen,     ///< no recent VIO; heading states not updated
  TransformFrozen,   ///< latest re-alignment rejected; V←L transform held
};

std::string_view to_string(GuiderStatus s);
GuiderStatus guider_status_from_string(std::string_view s);

struct GuiderConfig {
  AlignmentConfig alignment;
  TrackerConfig tracker;
  double alignment_period = 1.0;     ///< s between windowed re-alignments
  double detection_staleness = 1.0;  ///< s
  double vio_staleness = 0.5;        ///< s
  int reinit_after_rejections = 3;   ///< consecutive gated-out frames of the locked track
  double stream_period = 0.2;        ///< 5 Hz reference streaming
  double stream_horizon = 0.0;       ///< s of future references per message, 0 = whole suffix
};

struct GuiderOutput {
  double stamp = 0.0;
  TimedPose secondary_pose_in_L;
  RelativeTransform transform_L_to_S;  ///< L points into the secondary body frame
  RelativeTransform transform_L_to_V;  ///< drift-compensated L → V used for references
  GuiderStatus status = GuiderStatus::Uninitialized;
};

/// Diagnostic events raised while ingesting, drained by the caller.
struct GuiderEvent {
  enum class Kind { Initialized, Associated, Rejected, Reinitialized, AlignmentAccepted, AlignmentRejected };
  Kind kind = Kind::Associated;
  double stamp = 0.0;
  TrackId track = -1;
  double value = 0.0;  ///< δ² for association events, final cost for alignment events
};

/**
 * Fuses LiDAR detections of all tracked objects with the secondary agent's
 * VIO stream into a drift-compensated pose estimate in L, and maps desired
 * trajectories into the secondary's VIO frame.
 *
 * Single-writer: calls must be serialized by the caller.
 */
class Guider {
 public:
  explicit Guider(GuiderConfig config = {});

  /// One LiDAR scan worth of detections (frame L). Groups by stamp.
  void ingest_detections(std::span<const Detection> detections);
  /// One VIO sample (frame V).
  void ingest_vio(const TimedPose& pose);

  bool initialized() const { return filter_.has_value(); }
  GuiderStatus status(double t) const;

  /// Throws Error when uninitialized.
  GuiderOutput current_output(double t) const;

  /// Remaining part of `desired` (frame L) from t onward, mapped into V.
  Trajectory transform_and_stream(const Trajectory& desired, double t) const;

  const std::optional<RelativeTransform>& alignment() const { return alignment_; }
  TrackId locked_track() const { return locked_; }
  const GuiderConfig& config() const { return config_; }
  std::span<const TimedPose> vio_buffer() const { return vio_; }
  const std::map<TrackId, std::vector<Detection>>& track_buffers() const { return tracks_; }
  const HistoryBuffer& filter() const;

  std::vector<GuiderEvent> drain_events();

 private:
  struct LidarAnchor {
    Detection detection;
    std::optional<TimedPose> vio_at_detection;
  };

  void process_scan(std::span<const Detection> scan);
  void remember(const Detection& d);
  void maybe_initialize(double now);
  void maybe_realign(double now);
  void reset_filter(const Detection& newest, double theta, TrackId track);
  std::optional<TimedPose> vio_at(double stamp) const;

  GuiderConfig config_;
  std::vector<TimedPose> vio_;
  std::map<TrackId, std::vector<Detection>> tracks_;
  std::optional<HistoryBuffer> filter_;
  std::optional<RelativeTransform> alignment_;
  std::optional<LidarAnchor> last_lidar_;
  TrackId locked_ = -1;
  double last_detection_stamp_ = -std::numeric_limits<double>::infinity();
  double last_vio_stamp_ = -std::numeric_limits<double>::infinity();
  double last_alignment_attempt_ = -std::numeric_limits<double>::infinity();
  bool transform_frozen_ = false;
  int rejections_ = 0;
  std::vector<GuiderEvent> events_;
};

/// Emits transformed reference suffixes at the configured period (5 Hz by default).
class ReferenceStreamer {
 public:
  ReferenceStreamer(Trajectory desired, double period = 0.2, double horizon = 0.0);

  /// A new message when `period` has elapsed since the last one and the guider
  /// is initialized; empty otherwise.
  std::optional<Trajectory> poll(const Guider& guider, double t);

  const Trajectory& desired() const { return desired_; }
  bool finished(double t) const { return desired_.empty() || t > desired_.end(); }

 private:
  Trajectory desired_;
  double period_;
  double horizon_;
  double last_emit_ = -std::numeric_limits<double>::infinity();
};

}  // namespace coop
