#include "coop/tracker.hpp"

#include "coop/chi_square.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <cmath>

namespace coop {

namespace si = state_index;

TimedPose TrackerState::as_pose() const {
  TimedPose p;
  p.stamp = stamp;
  p.frame = FrameId::L;
  p.position = position();
  p.velocity = velocity();
  p.heading = heading();
  p.heading_rate = heading_rate();
  return p;
}

int Measurement::dimension(MeasurementKind kind) {
  switch (kind) {
    case MeasurementKind::LidarPosition: return 3;
    case MeasurementKind::VioFull: return 8;
    case MeasurementKind::VioHeadingOnly: return 2;
  }
  return 0;
}

TrackerState predict(const TrackerState& state, double dt, const ProcessNoise& noise) {
  if (dt < 0.0) {
    throw Error("predict: negative dt");
  }
  if (dt == 0.0) {
    return state;
  }
  StateCovariance F = StateCovariance::Identity();
  F.block<3, 3>(si::kPosition, si::kVelocity).setIdentity() *= dt;
  F(si::kHeading, si::kHeadingRate) = dt;

  const double dt2 = dt * dt;
  const double dt3 = dt2 * dt;
  StateCovariance Q = StateCovariance::Zero();
  const double qa = noise.acceleration_sigma * noise.acceleration_sigma;
  for (int i = 0; i < 3; ++i) {
    Q(si::kPosition + i, si::kPosition + i) = qa * dt3 / 3.0;
    Q(si::kPosition + i, si::kVelocity + i) = qa * dt2 / 2.0;
    Q(si::kVelocity + i, si::kPosition + i) = qa * dt2 / 2.0;
    Q(si::kVelocity + i, si::kVelocity + i) = qa * dt;
  }
  const double qy = noise.yaw_acceleration_sigma * noise.yaw_acceleration_sigma;
  Q(si::kHeading, si::kHeading) = qy * dt3 / 3.0;
  Q(si::kHeading, si::kHeadingRate) = qy * dt2 / 2.0;
  Q(si::kHeadingRate, si::kHeading) = qy * dt2 / 2.0;
  Q(si::kHeadingRate, si::kHeadingRate) = qy * dt;

  TrackerState out;
  out.stamp = state.stamp + dt;
  out.mean = F * state.mean;
  out.mean(si::kHeading) = wrap_heading(out.mean(si::kHeading));
  out.covariance = F * state.covariance * F.transpose() + Q;
  out.covariance = 0.5 * (out.covariance + out.covariance.transpose()).eval();
  return out;
}

namespace {

// Observation matrix and, per measurement row, whether it observes heading.
Eigen::MatrixXd observation_matrix(MeasurementKind kind) {
  switch (kind) {
    case MeasurementKind::LidarPosition: {
      Eigen::MatrixXd H = Eigen::MatrixXd::Zero(3, 8);
      H.block<3, 3>(0, si::kPosition).setIdentity();
      return H;
    }
    case MeasurementKind::VioFull:
      return Eigen::MatrixXd::Identity(8, 8);
    case MeasurementKind::VioHeadingOnly: {
      Eigen::MatrixXd H = Eigen::MatrixXd::Zero(2, 8);
      H(0, si::kHeading) = 1.0;
      H(1, si::kHeadingRate) = 1.0;
      return H;
    }
  }
  throw Error("observation_matrix: unknown measurement kind");
}

int heading_row(MeasurementKind kind) {
  switch (kind) {
    case MeasurementKind::LidarPosition: return -1;
    case MeasurementKind::VioFull: return si::kHeading;
    case MeasurementKind::VioHeadingOnly: return 0;
  }
  return -1;
}

}  // namespace

TrackerState update(const TrackerState& state, const Measurement& z) {
  const int m = Measurement::dimension(z.kind);
  if (z.value.size() != m || z.covariance.rows() != m || z.covariance.cols() != m) {
    throw Error("update: measurement dimension does not match its kind");
  }
  if (std::abs(z.stamp - state.stamp) > 1e-9) {
    throw Error("update: measurement stamp differs from state stamp; predict first");
  }

  const Eigen::MatrixXd H = observation_matrix(z.kind);
  Eigen::VectorXd y = z.value - H * state.mean;
  if (const int hr = heading_row(z.kind); hr >= 0) {
    y(hr) = wrap_heading(y(hr));
  }
  const Eigen::MatrixXd PHt = state.covariance * H.transpose();
  const Eigen::MatrixXd S = H * PHt + z.covariance;
  const Eigen::LLT<Eigen::MatrixXd> llt(S);
  if (llt.info() != Eigen::Success) {
    throw Error("update: singular innovation covariance");
  }
  // K = P Hᵀ S⁻¹
  const Eigen::MatrixXd K = llt.solve(PHt.transpose()).transpose();

  TrackerState out;
  out.stamp = state.stamp;
  out.mean = state.mean + K * y;
  out.mean(si::kHeading) = wrap_heading(out.mean(si::kHeading));
  const StateCovariance IKH = StateCovariance::Identity() - K * H;
  out.covariance = IKH * state.covariance * IKH.transpose() + K * z.covariance * K.transpose();
  out.covariance = 0.5 * (out.covariance + out.covariance.transpose()).eval();
  return out;
}

Measurement make_lidar_measurement(const Detection& detection) {
  Measurement z;
  z.stamp = detection.stamp;
  z.kind = MeasurementKind::LidarPosition;
  z.value = detection.position;
  z.covariance = detection.covariance;
  return z;
}

Measurement make_vio_measurement(const TimedPose& vio, const Detection& last_detection,
                                 const TimedPose& vio_at_detection, std::optional<double> theta,
                                 const TrackerConfig& config) {
  if (!theta) {
    throw Error("transform unavailable");
  }
  if (vio.stamp < last_detection.stamp) {
    throw Error("make_vio_measurement: VIO pose older than the detection");
  }
  // Rotation from V into L is R(θ)ᵀ = R(−θ).
  const Mat3 R_lv = yaw_rotation(-*theta);
  const double elapsed = vio.stamp - last_detection.stamp;

  Measurement z;
  z.stamp = vio.stamp;
  z.kind = MeasurementKind::VioFull;
  z.value.resize(8);
  z.value.segment<3>(si::kPosition) =
      last_detection.position + R_lv * (vio.position - vio_at_detection.position);
  z.value.segment<3>(si::kVelocity) = R_lv * vio.velocity;
  z.value(si::kHeading) = wrap_heading(vio.heading - *theta);
  z.value(si::kHeadingRate) = vio.heading_rate;

  const double delta_var = config.vio_delta_sigma * config.vio_delta_sigma +
                           config.vio_delta_rate_sigma * config.vio_delta_rate_sigma * elapsed;
  z.covariance = Eigen::MatrixXd::Zero(8, 8);
  z.covariance.block<3, 3>(si::kPosition, si::kPosition) =
      last_detection.covariance + Mat3::Identity() * delta_var;
  z.covariance.block<3, 3>(si::kVelocity, si::kVelocity) =
      Mat3::Identity() * config.vio_velocity_sigma * config.vio_velocity_sigma;
  z.covariance(si::kHeading, si::kHeading) = config.heading_sigma * config.heading_sigma;
  z.covariance(si::kHeadingRate, si::kHeadingRate) =
      config.heading_rate_sigma * config.heading_rate_sigma;
  return z;
}

Measurement make_heading_measurement(const TimedPose& vio, double theta,
                                     const TrackerConfig& config) {
  Measurement z;
  z.stamp = vio.stamp;
  z.kind = MeasurementKind::VioHeadingOnly;
  z.value.resize(2);
  z.value << wrap_heading(vio.heading - theta), vio.heading_rate;
  z.covariance = Eigen::MatrixXd::Zero(2, 2);
  z.covariance(0, 0) = config.heading_sigma * config.heading_sigma;
  z.covariance(1, 1) = config.heading_rate_sigma * config.heading_rate_sigma;
  return z;
}

double mahalanobis_sq(const Detection& detection, const TrackerState& state) {
  const Vec3 y = detection.position - state.position();
  const Mat3 S = state.covariance.block<3, 3>(si::kPosition, si::kPosition) + detection.covariance;
  const Eigen::LLT<Mat3> llt(S);
  if (llt.info() != Eigen::Success) {
    throw Error("mahalanobis_sq: singular innovation covariance");
  }
  return y.dot(llt.solve(y));
}

GateDecision associate(std::span<const Detection> detections, const TrackerState& state,
                       double euclidean_gate, double confidence) {
  GateDecision decision;
  decision.critical = chi_square_critical(confidence, 3);
  for (std::size_t i = 0; i < detections.size(); ++i) {
    const auto& d = detections[i];
    if ((d.position - state.position()).norm() > euclidean_gate) {
      continue;
    }
    const double d2 = mahalanobis_sq(d, state);
    if (d2 < decision.mahalanobis_sq) {
      decision.mahalanobis_sq = d2;
      decision.chosen = i;
      decision.chosen_track = d.track_id;
    }
  }
  decision.accepted = decision.chosen.has_value() && decision.mahalanobis_sq <= decision.critical;
  return decision;
}

TrackerState initial_state(const Detection& newest, const TimedPose& vio_at_detection, double theta,
                           const TrackerConfig& config) {
  TrackerState s;
  s.stamp = newest.stamp;
  s.mean.segment<3>(si::kPosition) = newest.position;
  s.mean.segment<3>(si::kVelocity) = yaw_rotation(-theta) * vio_at_detection.velocity;
  s.mean(si::kHeading) = wrap_heading(vio_at_detection.heading - theta);
  s.mean(si::kHeadingRate) = vio_at_detection.heading_rate;

  StateVector sig;
  sig << Vec3::Constant(config.prior_position_sigma), Vec3::Constant(config.prior_velocity_sigma),
      config.prior_heading_sigma, config.prior_heading_rate_sigma;
  s.covariance = sig.cwiseAbs2().asDiagonal();
  return s;
}

std::optional<Initialization> try_initialize(
    const std::map<TrackId, std::vector<Detection>>& tracks, std::span<const TimedPose> vio_buffer,
    const AlignmentConfig& alignment, const TrackerConfig& tracker,
    const std::optional<RelativeTransform>& previous) {
  for (const auto& [id, dets] : tracks) {
    if (dets.empty()) {
      continue;
    }
    const auto corrs = build_correspondences(dets, vio_buffer, alignment.window, alignment);
    if (!corrs.sufficient) {
      continue;
    }
    const RelativeTransform guess = previous ? *previous : initial_guess(corrs.items);
    AlignmentResult result = solve_alignment(corrs.items, guess, alignment);
    if (!degeneracy_check(result, alignment.min_path_length, alignment.min_eigenvalue)) {
      continue;
    }
    const Detection& newest = dets.back();
    TimedPose vio_at;
    try {
      vio_at = interpolate(vio_buffer, newest.stamp, alignment.interpolation_tolerance);
    } catch (const Error&) {
      vio_at = vio_buffer.back();
    }
    Initialization init;
    init.track = id;
    init.state = initial_state(newest, vio_at, result.transform.heading, tracker);
    init.alignment = std::move(result);
    return init;
  }
  return std::nullopt;
}

}  // namespace coop
