#include "coop/guider.hpp"

#include <algorithm>
#include <string>

namespace coop {

std::string_view to_string(GuiderStatus s) {
  switch (s) {
    case GuiderStatus::Uninitialized: return "uninitialized";
    case GuiderStatus::Tracking: return "tracking";
    case GuiderStatus::DeadReckoningVio: return "dead_reckoning_vio";
    case GuiderStatus::HeadingFrozen: return "heading_frozen";
    case GuiderStatus::TransformFrozen: return "transform_frozen";
  }
  return "?";
}

GuiderStatus guider_status_from_string(std::string_view s) {
  for (auto st : {GuiderStatus::Uninitialized, GuiderStatus::Tracking,
                  GuiderStatus::DeadReckoningVio, GuiderStatus::HeadingFrozen,
                  GuiderStatus::TransformFrozen}) {
    if (to_string(st) == s) {
      return st;
    }
  }
  throw Error("unknown guider status '" + std::string(s) + "'");
}

Guider::Guider(GuiderConfig config) : config_(std::move(config)) {}

const HistoryBuffer& Guider::filter() const {
  if (!filter_) {
    throw Error("guider is not initialized");
  }
  return *filter_;
}

std::vector<GuiderEvent> Guider::drain_events() {
  std::vector<GuiderEvent> out;
  out.swap(events_);
  return out;
}

void Guider::ingest_detections(std::span<const Detection> detections) {
  if (detections.empty()) {
    return;
  }
  std::vector<Detection> sorted(detections.begin(), detections.end());
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const Detection& a, const Detection& b) { return a.stamp < b.stamp; });
  for (const auto& d : sorted) {
    if (d.frame != FrameId::L) {
      throw Error("ingest_detections: detection not in frame L");
    }
  }
  std::size_t begin = 0;
  while (begin < sorted.size()) {
    std::size_t end = begin + 1;
    while (end < sorted.size() && sorted[end].stamp == sorted[begin].stamp) {
      ++end;
    }
    process_scan(std::span<const Detection>(sorted).subspan(begin, end - begin));
    begin = end;
  }
}

void Guider::remember(const Detection& d) {
  auto& buf = tracks_[d.track_id];
  const auto pos = std::lower_bound(buf.begin(), buf.end(), d.stamp,
                                    [](const Detection& x, double t) { return x.stamp < t; });
  if (pos != buf.end() && pos->stamp == d.stamp) {
    return;
  }
  buf.insert(pos, d);

  const double horizon = d.stamp - config_.alignment.window - 1.0;
  for (auto it = tracks_.begin(); it != tracks_.end();) {
    auto& v = it->second;
    v.erase(v.begin(), std::lower_bound(v.begin(), v.end(), horizon,
                                        [](const Detection& x, double t) { return x.stamp < t; }));
    it = v.empty() ? tracks_.erase(it) : std::next(it);
  }
}

std::optional<TimedPose> Guider::vio_at(double stamp) const {
  if (vio_.empty() || stamp < vio_.front().stamp || stamp > vio_.back().stamp) {
    return std::nullopt;
  }
  return interpolate(vio_, stamp, 0.0);
}

void Guider::reset_filter(const Detection& newest, double theta, TrackId track) {
  std::optional<TimedPose> at = vio_at(newest.stamp);
  const TimedPose vio_pose = at ? *at : vio_.back();
  filter_.emplace(initial_state(newest, vio_pose, theta, config_.tracker), config_.tracker.process,
                  config_.tracker.history_span);
  last_lidar_ = LidarAnchor{newest, at};
  last_detection_stamp_ = newest.stamp;
  locked_ = track;
  rejections_ = 0;
}

void Guider::process_scan(std::span<const Detection> scan) {
  for (const auto& d : scan) {
    remember(d);
  }
  const double stamp = scan.front().stamp;
  if (!filter_) {
    maybe_initialize(stamp);
    return;
  }
  if (stamp < filter_->anchor().stamp) {
    return;
  }

  const TrackerState predicted = filter_->estimate_at(stamp);
  const GateDecision decision = associate(scan, predicted, config_.tracker.euclidean_gate,
                                          config_.tracker.gate_confidence);
  if (decision.accepted) {
    const Detection& det = scan[*decision.chosen];
    filter_->insert_and_replay(make_lidar_measurement(det));
    if (!last_lidar_ || det.stamp >= last_lidar_->detection.stamp) {
      last_lidar_ = LidarAnchor{det, vio_at(det.stamp)};
    }
    last_detection_stamp_ = std::max(last_detection_stamp_, det.stamp);
    locked_ = det.track_id;
    rejections_ = 0;
    events_.push_back({GuiderEvent::Kind::Associated, stamp, det.track_id, decision.mahalanobis_sq});
    return;
  }

  const auto locked = std::find_if(scan.begin(), scan.end(),
                                   [&](const Detection& d) { return d.track_id == locked_; });
  if (locked == scan.end()) {
    return;
  }
  ++rejections_;
  events_.push_back(
      {GuiderEvent::Kind::Rejected, stamp, locked_, mahalanobis_sq(*locked, predicted)});
  if (rejections_ >= config_.reinit_after_rejections && alignment_) {
    reset_filter(*locked, alignment_->heading, locked_);
    events_.push_back({GuiderEvent::Kind::Reinitialized, stamp, locked_, 0.0});
  }
}

void Guider::maybe_initialize(double now) {
  if (now - last_alignment_attempt_ < config_.alignment_period || vio_.empty()) {
    return;
  }
  last_alignment_attempt_ = now;
  auto init = try_initialize(tracks_, vio_, config_.alignment, config_.tracker);
  if (!init) {
    return;
  }
  alignment_ = init->alignment.transform;
  transform_frozen_ = false;
  reset_filter(tracks_.at(init->track).back(), alignment_->heading, init->track);
  events_.push_back(
      {GuiderEvent::Kind::Initialized, now, init->track, init->alignment.final_cost});
}

void Guider::maybe_realign(double now) {
  if (!filter_ || now - last_alignment_attempt_ < config_.alignment_period) {
    return;
  }
  last_alignment_attempt_ = now;
  bool accepted = false;
  double cost = 0.0;
  if (const auto it = tracks_.find(locked_); it != tracks_.end()) {
    const auto corrs =
        build_correspondences(it->second, vio_, config_.alignment.window, config_.alignment);
    if (corrs.sufficient) {
      const RelativeTransform guess = alignment_ ? *alignment_ : initial_guess(corrs.items);
      const AlignmentResult result = solve_alignment(corrs.items, guess, config_.alignment);
      cost = result.final_cost;
      accepted = degeneracy_check(result, config_.alignment.min_path_length,
                                  config_.alignment.min_eigenvalue);
      if (accepted) {
        alignment_ = result.transform;
      }
    }
  }
  transform_frozen_ = !accepted;
  events_.push_back({accepted ? GuiderEvent::Kind::AlignmentAccepted
                              : GuiderEvent::Kind::AlignmentRejected,
                     now, locked_, cost});
}

void Guider::ingest_vio(const TimedPose& pose) {
  if (pose.frame != FrameId::V) {
    throw Error("ingest_vio: pose not in frame V");
  }
  const auto pos = std::lower_bound(vio_.begin(), vio_.end(), pose.stamp,
                                    [](const TimedPose& p, double t) { return p.stamp < t; });
  if (pos != vio_.end() && pos->stamp == pose.stamp) {
    return;
  }
  vio_.insert(pos, pose);
  const double horizon = vio_.back().stamp - config_.alignment.window - 1.0;
  vio_.erase(vio_.begin(),
             std::lower_bound(vio_.begin(), vio_.end(), horizon,
                              [](const TimedPose& p, double t) { return p.stamp < t; }));
  last_vio_stamp_ = std::max(last_vio_stamp_, pose.stamp);

  if (!filter_ || !alignment_) {
    return;
  }
  if (pose.stamp >= filter_->anchor().stamp) {
    const double theta = alignment_->heading;
    std::optional<Measurement> z;
    if (last_lidar_ && pose.stamp > last_lidar_->detection.stamp) {
      if (!last_lidar_->vio_at_detection) {
        last_lidar_->vio_at_detection = vio_at(last_lidar_->detection.stamp);
      }
      if (last_lidar_->vio_at_detection) {
        z = make_vio_measurement(pose, last_lidar_->detection, *last_lidar_->vio_at_detection,
                                 theta, config_.tracker);
      }
    }
    if (!z) {
      z = make_heading_measurement(pose, theta, config_.tracker);
    }
    filter_->insert_and_replay(*z);
  }
  maybe_realign(pose.stamp);
}

GuiderStatus Guider::status(double t) const {
  if (!filter_) {
    return GuiderStatus::Uninitialized;
  }
  if (t - last_detection_stamp_ > config_.detection_staleness) {
    return GuiderStatus::DeadReckoningVio;
  }
  if (t - last_vio_stamp_ > config_.vio_staleness) {
    return GuiderStatus::HeadingFrozen;
  }
  if (transform_frozen_) {
    return GuiderStatus::TransformFrozen;
  }
  return GuiderStatus::Tracking;
}

GuiderOutput Guider::current_output(double t) const {
  if (!filter_) {
    throw Error("guider is not initialized");
  }
  GuiderOutput out;
  out.stamp = t;
  out.status = status(t);
  const TrackerState est = filter_->estimate_at(t);
  out.secondary_pose_in_L = est.as_pose();
  out.transform_L_to_S =
      RelativeTransform::from(FrameId::S, FrameId::L, est.position(), est.heading(), t).inverse();

  if (vio_.empty()) {
    out.transform_L_to_V = alignment_ ? *alignment_ : RelativeTransform::identity(FrameId::L, FrameId::V);
    return out;
  }
  // Compose V←S (latest VIO pose) with S←L (estimate) at a common stamp.
  const double tv = std::max(std::min(t, vio_.back().stamp), filter_->anchor().stamp);
  TimedPose vio_pose;
  try {
    vio_pose = interpolate(vio_, tv, config_.alignment.interpolation_tolerance);
  } catch (const Error&) {
    vio_pose = vio_.back();
  }
  const TrackerState est_v = filter_->estimate_at(tv);
  const double theta = wrap_heading(vio_pose.heading - est_v.heading());
  const Vec3 trans = vio_pose.position - yaw_rotation(theta) * est_v.position();
  out.transform_L_to_V = RelativeTransform::from(FrameId::L, FrameId::V, trans, theta, t);
  return out;
}

Trajectory Guider::transform_and_stream(const Trajectory& desired, double t) const {
  const GuiderOutput out = current_output(t);
  return transform_trajectory(remaining(desired, t), out.transform_L_to_V);
}

ReferenceStreamer::ReferenceStreamer(Trajectory desired, double period, double horizon)
    : desired_(std::move(desired)), period_(period), horizon_(horizon) {
  validate(desired_);
  if (!(period_ > 0.0)) {
    throw Error("ReferenceStreamer: period must be positive");
  }
}

std::optional<Trajectory> ReferenceStreamer::poll(const Guider& guider, double t) {
  if (!guider.initialized() || t - last_emit_ < period_ - 1e-9) {
    return std::nullopt;
  }
  last_emit_ = t;
  if (horizon_ <= 0.0) {
    return guider.transform_and_stream(desired_, t);
  }
  // Cut the window [t, t + horizon] (plus one point each side) before transforming.
  const auto& pts = desired_.points;
  const auto by_stamp = [](const TrajectoryPoint& p, double v) { return p.stamp < v; };
  auto first = std::lower_bound(pts.begin(), pts.end(), t, by_stamp);
  if (first != pts.begin()) {
    --first;
  }
  auto last = std::lower_bound(first, pts.end(), t + horizon_, by_stamp);
  if (last != pts.end()) {
    ++last;
  }
  Trajectory window;
  window.frame = desired_.frame;
  window.points.assign(first, last);
  return guider.transform_and_stream(window, t);
}

}  // namespace coop
