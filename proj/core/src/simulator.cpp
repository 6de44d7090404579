#include "coop/simulator.hpp"

#include "coop/guider.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <utility>
#include <variant>

namespace coop {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

enum Stream : std::uint64_t {
  kDriftStream = 1,
  kVioNoiseStream = 2,
  kDetectionNoiseStream = 3,
  kDetectionDelayStream = 4,
  kUplinkDelayStream = 5,
  kDownlinkDelayStream = 6,
};

double draw_delay(const DelayConfig& d, Rng& rng) {
  if (d.jitter <= 0.0) {
    return d.mean;
  }
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  return std::max(0.0, d.mean + d.jitter * u(rng));
}

double cross2(const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
  return a.x() * b.y() - a.y() * b.x();
}

bool in_windows(double t, std::span<const std::pair<double, double>> windows) {
  return std::any_of(windows.begin(), windows.end(),
                     [t](const auto& w) { return t >= w.first && t <= w.second; });
}

struct VioMessage {
  TimedPose pose;
};
struct ScanMessage {
  std::vector<Detection> detections;
};
struct ReferenceMessage {
  Trajectory reference;
};
using Message = std::variant<VioMessage, ScanMessage, ReferenceMessage>;

/// Delayed delivery, ordered by (delivery time, send order).
class DeliveryQueue {
 public:
  void push(double deliver, Message m) { queue_.emplace(std::make_pair(deliver, seq_++), std::move(m)); }

  template <class F>
  void drain(double now, F&& handle) {
    while (!queue_.empty() && queue_.begin()->first.first <= now + 1e-12) {
      Message m = std::move(queue_.begin()->second);
      queue_.erase(queue_.begin());
      handle(m);
    }
  }

 private:
  std::map<std::pair<double, std::uint64_t>, Message> queue_;
  std::uint64_t seq_ = 0;
};

}  // namespace

Rng make_stream(std::uint64_t seed, std::uint64_t stream) {
  return Rng(splitmix64(splitmix64(seed) ^ splitmix64(stream * 0x632be59bd9b4e019ULL)));
}

DriftProcess::DriftProcess(const VioConfig& config, Rng rng)
    : config_(config), rng_(std::move(rng)), heading_(config.origin_heading) {}

void DriftProcess::advance(double dt) {
  t_ += dt;
  const auto& d = config_.drift;
  heading_ += d.heading_rate * dt;
  switch (d.model) {
    case DriftModel::None:
      break;
    case DriftModel::ConstantVelocity:
      offset_ += d.velocity * dt;
      break;
    case DriftModel::RandomWalk: {
      std::normal_distribution<double> n(0.0, d.sigma * std::sqrt(dt));
      const double x = n(rng_);
      const double y = n(rng_);
      const double z = n(rng_);
      offset_ += Vec3(x, y, z);
      break;
    }
  }
  if (d.heading_sigma > 0.0) {
    std::normal_distribution<double> n(0.0, d.heading_sigma * std::sqrt(dt));
    heading_ += n(rng_);
  }
}

RelativeTransform DriftProcess::transform() const {
  return RelativeTransform::from(FrameId::L, FrameId::V, config_.origin_translation + offset_,
                                 wrap_heading(heading_), t_);
}

TimedPose vio_sample(const TimedPose& truth, const RelativeTransform& drift, double noise,
                     Rng& rng) {
  TimedPose out = transform_pose(drift, truth);
  if (noise > 0.0) {
    std::normal_distribution<double> n(0.0, noise);
    const double x = n(rng);
    const double y = n(rng);
    const double z = n(rng);
    out.position += Vec3(x, y, z);
  }
  return out;
}

bool line_of_sight(const Vec3& primary, const Vec3& target, std::span<const Wall> walls) {
  const Eigen::Vector2d p = primary.head<2>();
  const Eigen::Vector2d r = target.head<2>() - p;
  for (const auto& w : walls) {
    const Eigen::Vector2d s = w.to - w.from;
    const double denom = cross2(r, s);
    if (std::abs(denom) < 1e-12) {
      continue;
    }
    const Eigen::Vector2d q = w.from - p;
    const double u = cross2(q, s) / denom;  // along primary → target
    const double v = cross2(q, r) / denom;  // along the wall
    if (u < 0.0 || u > 1.0 || v < 0.0 || v > 1.0) {
      continue;
    }
    const double z = primary.z() + u * (target.z() - primary.z());
    if (z >= w.z_min && z <= w.z_max) {
      return false;
    }
  }
  return true;
}

std::vector<Detection> lidar_detect(double stamp, const Vec3& primary,
                                    std::span<const DetectionTarget> targets,
                                    std::span<const Wall> walls, double noise,
                                    const Mat3& covariance, Rng& rng) {
  std::vector<Detection> out;
  std::normal_distribution<double> n(0.0, 1.0);
  for (const auto& target : targets) {
    if (target.hidden || !line_of_sight(primary, target.position, walls)) {
      continue;
    }
    Detection d;
    d.stamp = stamp;
    d.track_id = target.id;
    d.covariance = covariance;
    d.frame = FrameId::L;
    const double x = n(rng);
    const double y = n(rng);
    const double z = n(rng);
    d.position = target.position + noise * Vec3(x, y, z);
    out.push_back(d);
  }
  return out;
}

PlantState plant_step(const PlantState& state, const Trajectory& reference, double dt,
                      const PlantConfig& config) {
  if (!(dt > 0.0)) {
    throw Error("plant_step: dt must be positive");
  }
  PlantState next = state;
  next.stamp = state.stamp + dt;
  if (reference.empty()) {
    next.velocity.setZero();
    next.heading_rate = 0.0;
    return next;
  }
  const TrajectoryPoint ref = sample(reference, next.stamp);
  const double alpha = 1.0 - std::exp(-dt / config.tau);

  Vec3 step = alpha * (ref.position - state.position);
  const double max_step = config.max_speed * dt;
  if (step.norm() > max_step) {
    step *= max_step / step.norm();
  }
  next.position = state.position + step;
  next.velocity = step / dt;

  const double max_turn = config.max_yaw_rate * dt;
  const double turn = std::clamp(alpha * heading_diff(ref.heading, state.heading), -max_turn, max_turn);
  next.heading = wrap_heading(state.heading + turn);
  next.heading_rate = turn / dt;
  return next;
}

Vec3 primary_position(const PrimaryMotionConfig& c, double t) {
  switch (c.pattern) {
    case PrimaryPattern::Static:
      return c.center;
    case PrimaryPattern::Line: {
      const Vec3 span = c.line_to - c.line_from;
      const double len = span.norm();
      if (len <= 0.0) {
        return c.line_from;
      }
      const double s = std::fmod(c.speed * t, 2.0 * len);
      const double a = s <= len ? s : 2.0 * len - s;
      return c.line_from + span * (a / len);
    }
    case PrimaryPattern::Square: {
      const double h = 0.5 * c.size;
      const Vec3 corners[4] = {c.center + Vec3(-h, -h, 0.0), c.center + Vec3(h, -h, 0.0),
                               c.center + Vec3(h, h, 0.0), c.center + Vec3(-h, h, 0.0)};
      const double s = std::fmod(c.speed * t, 4.0 * c.size);
      const int side = std::min(3, static_cast<int>(s / c.size));
      const double a = (s - side * c.size) / c.size;
      return corners[side] + a * (corners[(side + 1) % 4] - corners[side]);
    }
  }
  return c.center;
}

EventLog run_scenario(const ScenarioConfig& config) {
  validate(config);
  const Trajectory desired = desired_trajectory(config);
  const ReferencePath path = reference_path(config);
  const double dt = config.step;
  const auto steps = static_cast<std::int64_t>(std::llround(scenario_end_time(config) / dt));
  const auto log_every = std::max<std::int64_t>(1, std::llround(config.log_period / dt));

  Rng vio_rng = make_stream(config.seed, kVioNoiseStream);
  Rng det_rng = make_stream(config.seed, kDetectionNoiseStream);
  Rng det_delay_rng = make_stream(config.seed, kDetectionDelayStream);
  Rng uplink_rng = make_stream(config.seed, kUplinkDelayStream);
  Rng downlink_rng = make_stream(config.seed, kDownlinkDelayStream);
  DriftProcess drift(config.vio, make_stream(config.seed, kDriftStream));

  Guider guider(config.guider);
  ReferenceStreamer streamer(desired, config.guider.stream_period, config.guider.stream_horizon);
  const Mat3 det_cov = Mat3::Identity() * config.guider.tracker.lidar_sigma *
                       config.guider.tracker.lidar_sigma;

  std::vector<DetectionTarget> targets;
  EventLog log;
  log.header.seed = config.seed;
  log.header.settle_time = config.settle_time;
  log.header.path = path;
  for (std::size_t i = 0; i < config.detection.false_targets.size(); ++i) {
    const auto id = static_cast<TrackId>(i + 1);
    targets.push_back({id, config.detection.false_targets[i], false});
    log.header.target_roles[id] = "false";
  }
  const auto secondary_id = static_cast<TrackId>(targets.size() + 1);
  targets.push_back({secondary_id, Vec3::Zero(), false});
  log.header.target_roles[secondary_id] = "secondary";

  // Until references arrive the secondary flies the desired path through the
  // nominal initial frame offset.
  Trajectory plan = transform_trajectory(desired, drift.transform());
  PlantState plant;
  {
    const TrajectoryPoint start = sample(plan, 0.0);
    plant.position = start.position;
    plant.heading = start.heading;
  }

  DeliveryQueue to_primary;
  DeliveryQueue to_secondary;
  std::int64_t vio_count = 0;
  std::int64_t scan_count = 0;
  bool guided = false;
  double guided_at = 0.0;
  double t = 0.0;
  Vec3 prev_truth = Vec3::Zero();
  double prev_truth_heading = 0.0;

  for (std::int64_t k = 0; k <= steps; ++k) {
    t = static_cast<double>(k) * dt;
    if (k > 0) {
      drift.advance(dt);
      plant = plant_step(plant, plan, dt, config.plant);
    }
    plant.stamp = t;
    const RelativeTransform T = drift.transform();
    const RelativeTransform T_inv = T.inverse();
    TimedPose truth;
    truth.stamp = t;
    truth.frame = FrameId::L;
    truth.position = apply_transform(T_inv, plant.position);
    truth.heading = wrap_heading(plant.heading - T.heading);
    if (k > 0) {
      truth.velocity = (truth.position - prev_truth) / dt;
      truth.heading_rate = heading_diff(truth.heading, prev_truth_heading) / dt;
    }
    prev_truth = truth.position;
    prev_truth_heading = truth.heading;
    const Vec3 primary = primary_position(config.primary, t);
    const bool nlos = in_windows(t, config.detection.nlos_windows);
    const bool visible = !nlos && line_of_sight(primary, truth.position, config.detection.occluders);

    if (static_cast<double>(vio_count) / config.vio.rate <= t + 1e-9) {
      while (static_cast<double>(vio_count) / config.vio.rate <= t + 1e-9) ++vio_count;
      VioRecord r;
      r.t = t;
      r.deliver = t + draw_delay(config.comm, uplink_rng);
      r.pose = vio_sample(truth, T, config.vio.noise, vio_rng);
      r.truth_position = truth.position;
      r.truth_heading = truth.heading;
      r.true_L_to_V = T;
      to_primary.push(r.deliver, VioMessage{r.pose});
      log.records.emplace_back(r);
    }

    if (static_cast<double>(scan_count) / config.detection.rate <= t + 1e-9) {
      while (static_cast<double>(scan_count) / config.detection.rate <= t + 1e-9) ++scan_count;
      targets.back().position = truth.position;
      targets.back().hidden = nlos;
      auto dets = lidar_detect(t, primary, targets, config.detection.occluders,
                               config.detection.noise, det_cov, det_rng);
      const double deliver = t + draw_delay(config.detection.delay, det_delay_rng);
      for (const auto& d : dets) {
        log.records.emplace_back(DetectionRecord{t, deliver, d});
      }
      if (!dets.empty()) {
        to_primary.push(deliver, ScanMessage{std::move(dets)});
      }
    }

    to_primary.drain(t, [&](Message& m) {
      if (auto* v = std::get_if<VioMessage>(&m)) {
        guider.ingest_vio(v->pose);
      } else if (auto* s = std::get_if<ScanMessage>(&m)) {
        guider.ingest_detections(s->detections);
      }
    });
    for (const auto& e : guider.drain_events()) {
      switch (e.kind) {
        case GuiderEvent::Kind::Associated:
        case GuiderEvent::Kind::Rejected:
          log.records.emplace_back(
              AssociationRecord{t, e.track, e.value, e.kind == GuiderEvent::Kind::Associated});
          break;
        case GuiderEvent::Kind::Initialized:
        case GuiderEvent::Kind::Reinitialized:
          log.records.emplace_back(
              InitRecord{t, e.track, e.value, e.kind == GuiderEvent::Kind::Reinitialized});
          break;
        default:
          break;
      }
    }

    if (auto msg = streamer.poll(guider, t); msg && !msg->empty()) {
      if (!guided) {
        guided = true;
        guided_at = t;
        log.records.emplace_back(PhaseRecord{t, "guided"});
      }
      ReferenceRecord r;
      r.t = t;
      r.deliver = t + draw_delay(config.comm, downlink_rng);
      r.count = msg->size();
      r.first = msg->points.front();
      log.records.emplace_back(r);
      to_secondary.push(r.deliver, ReferenceMessage{std::move(*msg)});
    }
    to_secondary.drain(t, [&](Message& m) {
      if (auto* r = std::get_if<ReferenceMessage>(&m)) {
        plan = std::move(r->reference);
      }
    });

    if (k % log_every == 0) {
      log.records.emplace_back(TruthRecord{t, truth.position, truth.heading, primary, visible});
      if (guider.initialized()) {
        const GuiderOutput out = guider.current_output(t);
        log.records.emplace_back(EstimateRecord{t, out.status, out.secondary_pose_in_L.position,
                                                out.secondary_pose_in_L.heading});
      }
    }

    if (guided && t >= guided_at + config.settle_time) {
      const double deviation = distance_to_path(path, truth.position);
      if (deviation > config.abort_radius) {
        log.records.emplace_back(FailRecord{t, deviation});
        log.records.emplace_back(EndRecord{t});
        return log;
      }
    }
  }
  if (!guided) {
    log.records.emplace_back(FailRecord{t, std::numeric_limits<double>::infinity()});
  }
  log.records.emplace_back(EndRecord{t});
  return log;
}

}  // namespace coop
