#pragma once

#include "coop/guider.hpp"
#include "coop/trajectory.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace coop {

enum class PrimaryPattern { Square, Line, Static };
enum class DesiredPattern { Circle, FigureEight, Waypoints };
enum class DriftModel { None, ConstantVelocity, RandomWalk };

struct PrimaryMotionConfig {
  PrimaryPattern pattern = PrimaryPattern::Square;
  Vec3 center = Vec3(0.0, 0.0, 2.0);
  double size = 3.0;   ///< square side length (m)
  double speed = 0.5;  ///< m/s
  Vec3 line_from = Vec3(-2.0, 0.0, 2.0);
  Vec3 line_to = Vec3(2.0, 0.0, 2.0);
};

struct DesiredTrajectoryConfig {
  DesiredPattern pattern = DesiredPattern::Circle;
  Vec3 center = Vec3(0.0, 0.0, 2.0);
  double radius = 4.0;  ///< circle radius, figure-eight half-width
  double speed = 0.5;
  double laps = 10.0;
  std::vector<Vec3> waypoints;  ///< closed loop for the waypoint pattern
  double sample_period = 0.5;
  double start_time = 0.0;
};

struct DriftConfig {
  DriftModel model = DriftModel::None;
  Vec3 velocity = Vec3::Zero();  ///< m/s, constant-velocity model, in V axes
  double sigma = 0.0;            ///< m/√s per axis, random-walk model
  double heading_rate = 0.0;     ///< rad/s
  double heading_sigma = 0.0;    ///< rad/√s
};

struct VioConfig {
  double rate = 30.0;
  Vec3 origin_translation = Vec3::Zero();  ///< initial translation of the L→V transform
  double origin_heading = 0.0;             ///< initial heading of the L→V transform
  DriftConfig drift;
  double noise = 0.0;  ///< m, white position noise on reported poses
};

struct DelayConfig {
  double mean = 0.0;
  double jitter = 0.0;  ///< delay uniformly in [mean − jitter, mean + jitter], clamped at 0
};

/// Vertical wall between two horizontal points.
struct Wall {
  Eigen::Vector2d from = Eigen::Vector2d::Zero();
  Eigen::Vector2d to = Eigen::Vector2d::Zero();
  double z_min = -std::numeric_limits<double>::infinity();
  double z_max = std::numeric_limits<double>::infinity();
};

struct DetectionConfig {
  double rate = 10.0;
  double noise = 0.1;  ///< m, true isotropic noise of the simulated detector
  DelayConfig delay{0.05, 0.02};
  std::vector<Vec3> false_targets;
  std::vector<std::pair<double, double>> nlos_windows;
  std::vector<Wall> occluders;
};

struct PlantConfig {
  double tau = 0.5;           ///< s, first-order time constant
  double max_speed = 2.0;     ///< m/s
  double max_yaw_rate = 1.0;  ///< rad/s
};

struct ScenarioConfig {
  std::uint64_t seed = 1;
  double duration = 0.0;  ///< s; 0 derives it from the desired trajectory
  double step = 0.01;     ///< s, 100 Hz loop
  double tail = 2.0;      ///< s simulated past the end of the desired trajectory
  double log_period = 0.1;
  double settle_time = 10.0;  ///< s after guidance starts before metrics and aborts apply
  double abort_radius = 3.0;  ///< m

  PrimaryMotionConfig primary;
  DesiredTrajectoryConfig desired;
  VioConfig vio;
  DetectionConfig detection;
  DelayConfig comm{0.02, 0.01};
  PlantConfig plant;
  GuiderConfig guider;
};

/// Throws Error naming the offending field.
void validate(const ScenarioConfig& config);

Trajectory desired_trajectory(const ScenarioConfig& config);
ReferencePath reference_path(const ScenarioConfig& config);
double scenario_end_time(const ScenarioConfig& config);

/// A dotted-path assignment such as {"vio.drift.velocity.x", "0.3"}.
struct ConfigOverride {
  std::string path;
  std::string value;
};

/// Parses a YAML scenario. Unknown keys and missing required keys are errors.
ScenarioConfig parse_scenario(std::string_view yaml_text,
                              std::span<const ConfigOverride> overrides = {});
ScenarioConfig load_scenario(const std::string& path,
                             std::span<const ConfigOverride> overrides = {});

/// Effective configuration, every field spelled out, as YAML.
std::string dump_scenario(const ScenarioConfig& config);

}  // namespace coop
