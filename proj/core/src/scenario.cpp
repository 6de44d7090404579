#include "coop/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace coop {

namespace {

void require(bool ok, const std::string& field, const std::string& what) {
  if (!ok) {
    throw Error("config field '" + field + "': " + what);
  }
}

void require_delay(const DelayConfig& d, const std::string& field) {
  require(std::isfinite(d.mean) && d.mean >= 0.0, field + ".mean", "must be >= 0");
  require(std::isfinite(d.jitter) && d.jitter >= 0.0, field + ".jitter", "must be >= 0");
}

}  // namespace

void validate(const ScenarioConfig& c) {
  require(c.step > 0.0 && std::isfinite(c.step), "step", "must be > 0");
  require(c.duration >= 0.0 && std::isfinite(c.duration), "duration", "must be >= 0");
  require(c.tail >= 0.0, "tail", "must be >= 0");
  require(c.log_period >= c.step, "log_period", "must be >= step");
  require(c.settle_time >= 0.0, "settle_time", "must be >= 0");
  require(c.abort_radius > 0.0, "abort_radius", "must be > 0");

  require(c.primary.speed > 0.0 || c.primary.pattern == PrimaryPattern::Static, "primary.speed",
          "must be > 0");
  require(c.primary.size > 0.0 || c.primary.pattern != PrimaryPattern::Square, "primary.size",
          "must be > 0");

  const auto& d = c.desired;
  require(d.speed > 0.0, "desired.speed", "must be > 0");
  require(d.laps > 0.0, "desired.laps", "must be > 0");
  require(d.sample_period > 0.0, "desired.sample_period", "must be > 0");
  require(d.radius > 0.0 || d.pattern == DesiredPattern::Waypoints, "desired.radius",
          "must be > 0");
  require(d.waypoints.size() >= 2 || d.pattern != DesiredPattern::Waypoints, "desired.waypoints",
          "need at least two waypoints");

  require(c.vio.rate > 0.0, "vio.rate", "must be > 0");
  require(c.vio.noise >= 0.0, "vio.noise", "must be >= 0");
  require(c.vio.drift.sigma >= 0.0, "vio.drift.sigma", "must be >= 0");
  require(c.vio.drift.heading_sigma >= 0.0, "vio.drift.heading_sigma", "must be >= 0");
  require(c.detection.rate > 0.0, "detection.rate", "must be > 0");
  require(c.detection.noise >= 0.0, "detection.noise", "must be >= 0");
  require_delay(c.detection.delay, "detection.delay");
  require_delay(c.comm, "comm");
  for (const auto& [a, b] : c.detection.nlos_windows) {
    require(a <= b, "detection.nlos_windows", "start must not exceed end");
  }

  require(c.plant.tau > 0.0, "plant.tau", "must be > 0");
  require(c.plant.max_speed > 0.0, "plant.max_speed", "must be > 0");
  require(c.plant.max_yaw_rate > 0.0, "plant.max_yaw_rate", "must be > 0");

  const auto& g = c.guider;
  require(g.alignment.window > 0.0, "guider.alignment.window", "must be > 0");
  require(g.alignment.loss_scale > 0.0, "guider.alignment.loss_scale", "must be > 0");
  require(g.alignment.min_correspondences >= 2, "guider.alignment.min_correspondences",
          "must be >= 2");
  require(g.alignment.max_iterations > 0, "guider.alignment.max_iterations", "must be > 0");
  require(g.alignment_period > 0.0, "guider.alignment_period", "must be > 0");
  require(g.stream_period > 0.0, "guider.stream_period", "must be > 0");
  require(g.tracker.history_span > 0.0, "guider.tracker.history_span", "must be > 0");
  require(g.tracker.gate_confidence > 0.0 && g.tracker.gate_confidence < 1.0,
          "guider.tracker.gate_confidence", "must be in (0, 1)");
  require(g.tracker.lidar_sigma > 0.0, "guider.tracker.lidar_sigma", "must be > 0");
  require(g.reinit_after_rejections >= 1, "guider.reinit_after_rejections", "must be >= 1");
}

Trajectory desired_trajectory(const ScenarioConfig& c) {
  const auto& d = c.desired;
  switch (d.pattern) {
    case DesiredPattern::Circle:
      return make_circle(d.center, d.radius, d.speed, d.laps, d.start_time, d.sample_period);
    case DesiredPattern::FigureEight:
      return make_figure_eight(d.center, d.radius, d.speed, d.laps, d.start_time, d.sample_period);
    case DesiredPattern::Waypoints:
      return make_polyline_loop(d.waypoints, d.speed, d.laps, d.start_time, d.sample_period);
  }
  throw Error("desired_trajectory: unknown pattern");
}

ReferencePath reference_path(const ScenarioConfig& c) {
  const auto& d = c.desired;
  switch (d.pattern) {
    case DesiredPattern::Circle:
      return CirclePath{d.center, d.radius};
    case DesiredPattern::FigureEight:
      return figure_eight_path(d.center, d.radius);
    case DesiredPattern::Waypoints:
      return PolylinePath{d.waypoints, true};
  }
  throw Error("reference_path: unknown pattern");
}

double scenario_end_time(const ScenarioConfig& c) {
  if (c.duration > 0.0) {
    return c.duration;
  }
  return desired_trajectory(c).end() + c.tail;
}

}  // namespace coop
