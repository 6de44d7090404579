#pragma once

#include "coop/alignment.hpp"
#include "coop/detection.hpp"
#include "coop/geometry.hpp"

#include <Eigen/Core>

#include <limits>
#include <map>
#include <optional>
#include <span>
#include <vector>

namespace coop {

using StateVector = Eigen::Matrix<double, 8, 1>;
using StateCovariance = Eigen::Matrix<double, 8, 8>;

/// Layout of the 4-DOF constant-velocity state.
namespace state_index {
inline constexpr int kPosition = 0;  // 3
inline constexpr int kVelocity = 3;  // 3
inline constexpr int kHeading = 6;
inline constexpr int kHeadingRate = 7;
}  // namespace state_index

/// Pose estimate of the secondary agent in frame L.
struct TrackerState {
  double stamp = 0.0;
  StateVector mean = StateVector::Zero();
  StateCovariance covariance = StateCovariance::Identity();

  Vec3 position() const { return mean.segment<3>(state_index::kPosition); }
  Vec3 velocity() const { return mean.segment<3>(state_index::kVelocity); }
  double heading() const { return mean(state_index::kHeading); }
  double heading_rate() const { return mean(state_index::kHeadingRate); }

  TimedPose as_pose() const;
};

enum class MeasurementKind {
  LidarPosition,   ///< 3: position
  VioFull,         ///< 8: position, velocity, heading, heading rate
  VioHeadingOnly,  ///< 2: heading, heading rate
};

struct Measurement {
  double stamp = 0.0;
  MeasurementKind kind = MeasurementKind::LidarPosition;
  Eigen::VectorXd value;
  Eigen::MatrixXd covariance;

  static int dimension(MeasurementKind kind);
};

/// Continuous white-acceleration noise densities.
struct ProcessNoise {
  double acceleration_sigma = 1.0;      ///< m/s²
  double yaw_acceleration_sigma = 0.5;  ///< rad/s²
};

struct TrackerConfig {
  ProcessNoise process;

  double lidar_sigma = 0.15;             ///< m, isotropic
  double vio_delta_sigma = 0.05;         ///< m, added to the detection noise for propagated positions
  double vio_delta_rate_sigma = 0.1;     ///< m/√s, grows with time since the anchoring detection
  double vio_velocity_sigma = 0.1;       ///< m/s
  double heading_sigma = 0.05;           ///< rad
  double heading_rate_sigma = 0.05;      ///< rad/s

  double euclidean_gate = 2.0;           ///< m
  double gate_confidence = 0.95;
  double history_span = 2.0;             ///< s

  double prior_position_sigma = 0.3;
  double prior_velocity_sigma = 0.5;
  double prior_heading_sigma = 0.1;
  double prior_heading_rate_sigma = 0.1;
};

/// Constant-velocity prediction over dt >= 0.
TrackerState predict(const TrackerState& state, double dt, const ProcessNoise& noise);

/// Kalman correction (Joseph form). Heading innovations are wrapped.
/// z.stamp must equal state.stamp.
TrackerState update(const TrackerState& state, const Measurement& z);

Measurement make_lidar_measurement(const Detection& detection);

/**
 * Builds the 8-dim VIO measurement in frame L:
 *   z_x = d(t_k) + R(θ)ᵀ (p(t_l) − p(t_k)),  z_v = R(θ)ᵀ v,  z_φ = φ − θ,  z_ω = ω
 * where θ is the L→V heading from the latest accepted alignment.
 * Throws "transform unavailable" when theta is empty.
 */
Measurement make_vio_measurement(const TimedPose& vio, const Detection& last_detection,
                                 const TimedPose& vio_at_detection, std::optional<double> theta,
                                 const TrackerConfig& config = {});

/// 2-dim heading / heading-rate measurement for VIO older than the newest detection.
Measurement make_heading_measurement(const TimedPose& vio, double theta,
                                     const TrackerConfig& config = {});

struct GateDecision {
  std::optional<std::size_t> chosen;  ///< index into the detection set
  TrackId chosen_track = -1;
  double mahalanobis_sq = std::numeric_limits<double>::infinity();
  double critical = 0.0;
  bool accepted = false;
};

/// Squared Mahalanobis distance of a detection from the predicted position.
double mahalanobis_sq(const Detection& detection, const TrackerState& state);

/**
 * Picks the detection with the lowest δ² among those within `euclidean_gate`
 * of the predicted position; accepts it iff δ² <= χ²(confidence, 3).
 */
GateDecision associate(std::span<const Detection> detections, const TrackerState& state,
                       double euclidean_gate, double confidence);

/**
 * Recalculating history buffer: measurements sorted by stamp plus an anchor
 * state at or before the oldest of them. A late measurement is slotted into
 * place and everything after it is re-filtered. Entries older than `span`
 * behind the newest are folded into the anchor.
 */
class HistoryBuffer {
 public:
  HistoryBuffer(TrackerState anchor, ProcessNoise noise, double span = 2.0);

  /// Inserts z and returns the state at the newest entry.
  /// Throws Error("too stale") when z predates the anchor.
  TrackerState insert_and_replay(const Measurement& z);

  /// State at t >= anchor stamp: replay through entries <= t, then predict.
  TrackerState estimate_at(double t) const;

  const TrackerState& anchor() const { return anchor_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  double span() const { return span_; }
  double newest_stamp() const;
  std::vector<Measurement> measurements() const;

 private:
  struct Entry {
    Measurement z;
    TrackerState posterior;
  };

  void prune();

  TrackerState anchor_;
  ProcessNoise noise_;
  double span_;
  std::vector<Entry> entries_;
};

struct Initialization {
  TrackId track = -1;
  TrackerState state;
  AlignmentResult alignment;
};

/// Initial state from the newest detection and the VIO pose at its stamp.
TrackerState initial_state(const Detection& newest, const TimedPose& vio_at_detection, double theta,
                           const TrackerConfig& config);

/**
 * Runs the windowed alignment against every track buffer (in id order) and
 * initializes from the first one that passes the degeneracy check.
 */
std::optional<Initialization> try_initialize(
    const std::map<TrackId, std::vector<Detection>>& tracks, std::span<const TimedPose> vio_buffer,
    const AlignmentConfig& alignment, const TrackerConfig& tracker,
    const std::optional<RelativeTransform>& previous = std::nullopt);

}  // namespace coop
