#include "coop/alignment.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace coop {

namespace {

// Linear interpolation of the detection track at t. Empty when t is outside
// the span (beyond tolerance) or falls in a gap wider than max_gap.
std::optional<Vec3> detection_at(std::span<const Detection> dets, double t, double tolerance,
                                 double max_gap) {
  if (dets.empty() || t < dets.front().stamp - tolerance || t > dets.back().stamp + tolerance) {
    return std::nullopt;
  }
  auto it = std::lower_bound(dets.begin(), dets.end(), t,
                             [](const Detection& d, double v) { return d.stamp < v; });
  if (it != dets.end() && it->stamp == t) {
    return it->position;
  }
  if (dets.size() == 1) {
    return dets.front().position;
  }
  const Detection* a;
  const Detection* b;
  if (it == dets.begin()) {
    a = &dets[0];
    b = &dets[1];
  } else if (it == dets.end()) {
    a = &dets[dets.size() - 2];
    b = &dets.back();
  } else {
    a = &*(it - 1);
    b = &*it;
    if (b->stamp - a->stamp > max_gap) {
      return std::nullopt;
    }
  }
  const double span = b->stamp - a->stamp;
  if (span <= 0.0) {
    return a->position;
  }
  const double s = (t - a->stamp) / span;
  return Vec3(a->position + s * (b->position - a->position));
}

// Parameters: t (3), θ, and with drift estimation the velocity v (3).
// Residual r_i = R(θ)·d_i + t + v·τ_i − p_i with τ_i = stamp_i − reference stamp.
template <int N>
struct Model {
  using Vec = Eigen::Matrix<double, N, 1>;
  using Mat = Eigen::Matrix<double, N, N>;
  using Jac = Eigen::Matrix<double, 3, N>;

  std::span<const Correspondence> corrs;
  double reference_stamp = 0.0;
  double scale_sq = 1.0;

  double loss(double s) const { return scale_sq * soft_l1(s / scale_sq); }
  double weight(double s) const { return soft_l1_derivative(s / scale_sq); }

  Vec3 residual(const Correspondence& c, const Vec& x, const Mat3& R) const {
    Vec3 r = R * c.lidar_position + x.template head<3>() - c.vio_position;
    if constexpr (N == 7) {
      r += x.template tail<3>() * (c.stamp - reference_stamp);
    }
    return r;
  }

  double objective(const Vec& x) const {
    const Mat3 R = yaw_rotation(x(3));
    double cost = 0.0;
    for (const auto& c : corrs) cost += loss(residual(c, x, R).squaredNorm());
    return 0.5 * cost;
  }

  struct Linearization {
    double cost = 0.0;  // ½ Σ ρ(s_i)
    Vec gradient = Vec::Zero();
    Mat hessian = Mat::Zero();
  };

  Linearization linearize(const Vec& x) const {
    const Mat3 R = yaw_rotation(x(3));
    const Mat3 dR = yaw_rotation_derivative(x(3));
    Linearization lin;
    Jac J = Jac::Zero();
    J.template leftCols<3>().setIdentity();
    for (const auto& c : corrs) {
      const Vec3 r = residual(c, x, R);
      const double s = r.squaredNorm();
      const double w = weight(s);
      J.col(3) = dR * c.lidar_position;
      if constexpr (N == 7) {
        J.template rightCols<3>() = Mat3::Identity() * (c.stamp - reference_stamp);
      }
      lin.cost += loss(s);
      lin.gradient.noalias() += w * J.transpose() * r;
      lin.hessian.noalias() += w * J.transpose() * J;
    }
    lin.cost *= 0.5;
    return lin;
  }
};

template <int N>
AlignmentResult solve(std::span<const Correspondence> corrs, const RelativeTransform& initial,
                      const AlignmentConfig& config) {
  using M = Model<N>;
  const M model{corrs, corrs.back().stamp, config.loss_scale * config.loss_scale};
  typename M::Vec x = M::Vec::Zero();
  x.template head<3>() = initial.translation;
  x(3) = wrap_heading(initial.heading);
  double lambda = config.initial_damping;
  bool tolerance_met = false;

  AlignmentResult result;
  auto lin = model.linearize(x);
  result.cost_history.push_back(lin.cost);

  int iter = 0;
  for (; iter < config.max_iterations; ++iter) {
    if (lin.cost == 0.0 || lin.gradient.template lpNorm<Eigen::Infinity>() <= config.gradient_tolerance) {
      tolerance_met = true;
      break;
    }
    typename M::Mat damped = lin.hessian;
    for (int i = 0; i < N; ++i) {
      damped(i, i) += lambda * std::max(lin.hessian(i, i), 1e-12);
    }
    const typename M::Vec step = damped.ldlt().solve(-lin.gradient);
    typename M::Vec trial = x + step;
    trial(3) = wrap_heading(trial(3));
    const double step_limit = config.step_tolerance * (x.norm() + config.step_tolerance);

    const double trial_cost = model.objective(trial);
    if (trial_cost < lin.cost) {
      x = trial;
      lambda = std::max(lambda / config.damping_down, 1e-15);
      lin = model.linearize(x);
      result.cost_history.push_back(lin.cost);
      if (step.norm() <= step_limit) {
        tolerance_met = true;
        ++iter;
        break;
      }
    } else {
      // No decrease: either at numerical optimum (tiny step) or needs more damping.
      if (step.norm() <= step_limit) {
        tolerance_met = true;
        ++iter;
        break;
      }
      lambda *= config.damping_up;
      if (lambda > 1e16) {
        ++iter;
        break;
      }
    }
  }

  const double n = static_cast<double>(corrs.size());
  result.iterations = iter;
  result.final_cost = 2.0 * lin.cost / n;
  result.min_eigenvalue = fisher_min_eigenvalue(corrs, N == 7);
  result.path_length = window_path_length(corrs);
  result.converged = tolerance_met && std::isfinite(result.final_cost) &&
                     result.final_cost <= config.max_final_cost;
  if constexpr (N == 7) {
    result.drift_rate = x.template tail<3>();
  }

  result.transform =
      RelativeTransform::from(FrameId::L, FrameId::V, x.template head<3>(), x(3), corrs.back().stamp);
  result.transform.final_cost = result.final_cost;
  result.transform.min_eigenvalue = result.min_eigenvalue;
  result.transform.valid = result.converged;
  return result;
}

}  // namespace

CorrespondenceSet build_correspondences(std::span<const Detection> detections,
                                        std::span<const TimedPose> vio_buffer, double window,
                                        const AlignmentConfig& config) {
  if (!(window > 0.0)) {
    throw Error("build_correspondences: window must be positive");
  }
  CorrespondenceSet out;
  if (vio_buffer.empty() || detections.empty()) {
    return out;
  }
  const double start = vio_buffer.back().stamp - window;
  for (const auto& pose : vio_buffer) {
    if (pose.stamp < start) {
      continue;
    }
    const auto d = detection_at(detections, pose.stamp, config.interpolation_tolerance,
                                config.max_detection_gap);
    if (!d) {
      continue;
    }
    out.items.push_back({pose.stamp, *d, pose.position});
  }
  if (out.items.size() < config.min_correspondences) {
    out.items.clear();
    return out;
  }
  out.sufficient = true;
  return out;
}

double soft_l1(double s) {
  if (s < 0.0) {
    throw Error("soft_l1: negative squared residual");
  }
  return 2.0 * (std::sqrt(1.0 + s) - 1.0);
}

double soft_l1_derivative(double s) { return 1.0 / std::sqrt(1.0 + s); }

RelativeTransform initial_guess(std::span<const Correspondence> corrs) {
  Vec3 lidar = Vec3::Zero();
  Vec3 vio = Vec3::Zero();
  for (const auto& c : corrs) {
    lidar += c.lidar_position;
    vio += c.vio_position;
  }
  const double n = static_cast<double>(std::max<std::size_t>(corrs.size(), 1));
  return RelativeTransform::from(FrameId::L, FrameId::V, (vio - lidar) / n, 0.0);
}

AlignmentResult solve_alignment(std::span<const Correspondence> corrs,
                                const RelativeTransform& initial, const AlignmentConfig& config) {
  if (corrs.size() < config.min_correspondences || corrs.empty()) {
    throw Error("solve_alignment: insufficient correspondences (" + std::to_string(corrs.size()) +
                ")");
  }
  if (!(config.loss_scale > 0.0)) {
    throw Error("solve_alignment: loss_scale must be positive");
  }
  return config.estimate_drift_rate ? solve<7>(corrs, initial, config)
                                    : solve<4>(corrs, initial, config);
}

double fisher_min_eigenvalue(std::span<const Correspondence> corrs, bool drift_rate) {
  if (corrs.empty()) {
    return 0.0;
  }
  Vec3 centroid = Vec3::Zero();
  double mean_stamp = 0.0;
  for (const auto& c : corrs) {
    centroid += c.lidar_position;
    mean_stamp += c.stamp;
  }
  centroid /= static_cast<double>(corrs.size());
  mean_stamp /= static_cast<double>(corrs.size());

  // θ enters only through R'(θ)(d_i − d̄), whose norm is independent of θ.
  const Mat3 dR = yaw_rotation_derivative(0.0);
  const int n = drift_rate ? 7 : 4;
  Eigen::MatrixXd F = Eigen::MatrixXd::Zero(n, n);
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(3, n);
  J.leftCols<3>().setIdentity();
  for (const auto& c : corrs) {
    J.col(3) = dR * (c.lidar_position - centroid);
    if (drift_rate) {
      J.rightCols<3>() = Mat3::Identity() * (c.stamp - mean_stamp);
    }
    F.noalias() += J.transpose() * J;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(F, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().minCoeff();
}

double window_path_length(std::span<const Correspondence> corrs) {
  double lidar = 0.0;
  double vio = 0.0;
  for (std::size_t i = 1; i < corrs.size(); ++i) {
    lidar += (corrs[i].lidar_position - corrs[i - 1].lidar_position).norm();
    vio += (corrs[i].vio_position - corrs[i - 1].vio_position).norm();
  }
  return std::min(lidar, vio);
}

bool degeneracy_check(const AlignmentResult& result, double min_path_length, double min_eig) {
  return result.converged && result.path_length >= min_path_length &&
         result.min_eigenvalue >= min_eig;
}

RelativeTransform closed_form_yaw_alignment(std::span<const Vec3> from, std::span<const Vec3> to,
                                            FrameId source, FrameId target) {
  if (from.size() != to.size() || from.empty()) {
    throw Error("closed_form_yaw_alignment: need equally sized, non-empty point sets");
  }
  const double n = static_cast<double>(from.size());
  Vec3 ca = Vec3::Zero();
  Vec3 cb = Vec3::Zero();
  for (std::size_t i = 0; i < from.size(); ++i) {
    ca += from[i];
    cb += to[i];
  }
  ca /= n;
  cb /= n;
  double cross = 0.0;
  double dot = 0.0;
  for (std::size_t i = 0; i < from.size(); ++i) {
    const Vec3 a = from[i] - ca;
    const Vec3 b = to[i] - cb;
    cross += a.x() * b.y() - a.y() * b.x();
    dot += a.x() * b.x() + a.y() * b.y();
  }
  const double theta = (cross == 0.0 && dot == 0.0) ? 0.0 : std::atan2(cross, dot);
  const Vec3 t = cb - yaw_rotation(theta) * ca;
  return RelativeTransform::from(source, target, t, theta);
}

}  // namespace coop
