#pragma once

#include "coop/detection.hpp"
#include "coop/event_log.hpp"
#include "coop/scenario.hpp"
#include "coop/trajectory.hpp"

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace coop {

using Rng = std::mt19937_64;

/// Independent generator for one noise source, derived from the scenario seed.
Rng make_stream(std::uint64_t seed, std::uint64_t stream);

/// Accumulated drift of the secondary's VIO frame: the true L→V transform over time.
class DriftProcess {
 public:
  DriftProcess(const VioConfig& config, Rng rng);

  /// Advances by dt (the random-walk model draws one increment per call).
  void advance(double dt);
  /// The current L→V transform, stamped with the current time.
  RelativeTransform transform() const;
  double time() const { return t_; }

 private:
  VioConfig config_;
  Rng rng_;
  double t_ = 0.0;
  Vec3 offset_ = Vec3::Zero();
  double heading_ = 0.0;
};

/// Truth (frame L) mapped through the drift transform into V, plus white position noise.
TimedPose vio_sample(const TimedPose& truth, const RelativeTransform& drift, double noise, Rng& rng);

/// True when the segment primary → target crosses no wall within the wall's height range.
bool line_of_sight(const Vec3& primary, const Vec3& target, std::span<const Wall> walls);

struct DetectionTarget {
  TrackId id = 0;
  Vec3 position = Vec3::Zero();
  bool hidden = false;  ///< forced out of sight (NLOS window)
};

/// One scan at `stamp`: a noisy detection per target visible from the primary.
std::vector<Detection> lidar_detect(double stamp, const Vec3& primary,
                                    std::span<const DetectionTarget> targets,
                                    std::span<const Wall> walls, double noise,
                                    const Mat3& covariance, Rng& rng);

/// Secondary agent as it perceives itself, in V.
struct PlantState {
  double stamp = 0.0;
  Vec3 position = Vec3::Zero();
  double heading = 0.0;
  Vec3 velocity = Vec3::Zero();
  double heading_rate = 0.0;
};

/// First-order lag toward the reference interpolated at stamp + dt, with speed
/// and yaw-rate saturation. An empty reference holds position.
PlantState plant_step(const PlantState& state, const Trajectory& reference, double dt,
                      const PlantConfig& config);

/// Position of the primary agent at time t.
Vec3 primary_position(const PrimaryMotionConfig& config, double t);

/// Runs the closed loop to completion. Throws Error on an invalid config.
EventLog run_scenario(const ScenarioConfig& config);

}  // namespace coop
