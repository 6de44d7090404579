#pragma once

// Reference implementations used only by tests. Each one computes its answer
// by a different route than the library code it checks.

#include "coop/geometry.hpp"
#include "coop/tracker.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <random>
#include <span>
#include <vector>

namespace coop::oracle {

// Regularized lower incomplete gamma P(a, x): series below a + 1, Lentz
// continued fraction above.
inline double regularized_gamma_p(double a, double x) {
  if (x <= 0.0) return 0.0;
  const double log_prefix = a * std::log(x) - x - std::lgamma(a);
  if (x < a + 1.0) {
    double term = 1.0 / a;
    double sum = term;
    for (int n = 1; n < 1000; ++n) {
      term *= x / (a + n);
      sum += term;
      if (std::abs(term) < std::abs(sum) * 1e-17) break;
    }
    return sum * std::exp(log_prefix);
  }
  constexpr double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 1000; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < 1e-17) break;
  }
  return 1.0 - std::exp(log_prefix) * h;
}

inline double chi_square_cdf(double x, int dof) { return regularized_gamma_p(0.5 * dof, 0.5 * x); }

// Inverse CDF by bisection.
inline double chi_square_quantile(double p, int dof) {
  double lo = 0.0;
  double hi = 1000.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (chi_square_cdf(mid, dof) < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

// 2D Procrustes through an SVD of the horizontal cross-covariance, with z
// fitted as a mean offset.
struct YawFit {
  Vec3 translation;
  double heading;
};

inline YawFit procrustes_yaw(std::span<const Vec3> from, std::span<const Vec3> to) {
  Vec3 ca = Vec3::Zero();
  Vec3 cb = Vec3::Zero();
  for (std::size_t i = 0; i < from.size(); ++i) {
    ca += from[i];
    cb += to[i];
  }
  ca /= static_cast<double>(from.size());
  cb /= static_cast<double>(from.size());
  Eigen::Matrix2d H = Eigen::Matrix2d::Zero();
  for (std::size_t i = 0; i < from.size(); ++i) {
    H += (from[i] - ca).head<2>() * (to[i] - cb).head<2>().transpose();
  }
  const Eigen::JacobiSVD<Eigen::Matrix2d> svd(H, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix2d D = Eigen::Matrix2d::Identity();
  D(1, 1) = (svd.matrixV() * svd.matrixU().transpose()).determinant() < 0.0 ? -1.0 : 1.0;
  const Eigen::Matrix2d R = svd.matrixV() * D * svd.matrixU().transpose();
  YawFit out;
  out.heading = std::atan2(R(1, 0), R(0, 0));
  Mat3 R3 = Mat3::Identity();
  R3.topLeftCorner<2, 2>() = R;
  out.translation = cb - R3 * ca;
  return out;
}

// Explicit 3N×4 Jacobian of R(θ)·d + t − p at θ, smallest eigenvalue of JᵀJ
// via SVD of J. Rotation is taken about the LiDAR centroid.
inline double fisher_min_eigenvalue_svd(std::span<const Vec3> lidar, double heading) {
  Vec3 c = Vec3::Zero();
  for (const auto& d : lidar) c += d;
  c /= static_cast<double>(lidar.size());
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(3 * static_cast<Eigen::Index>(lidar.size()), 4);
  const double s = std::sin(heading);
  const double co = std::cos(heading);
  for (std::size_t i = 0; i < lidar.size(); ++i) {
    const Vec3 d = lidar[i] - c;
    const auto r = 3 * static_cast<Eigen::Index>(i);
    J.block<3, 3>(r, 0).setIdentity();
    J(r, 3) = -s * d.x() - co * d.y();
    J(r + 1, 3) = co * d.x() - s * d.y();
  }
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(J);
  const double smin = svd.singularValues().minCoeff();
  return smin * smin;
}

// Batch least squares over the whole state sequence x_0..x_K of a linear
// constant-velocity model, built in information form. The marginal of the
// last state equals the filtered posterior.
struct BatchStep {
  double dt = 0.0;  // from the previous state (ignored for k = 0)
  Eigen::MatrixXd H;
  Eigen::VectorXd z;
  Eigen::MatrixXd R;
};

inline Eigen::Matrix<double, 8, 8> cv_transition(double dt) {
  Eigen::Matrix<double, 8, 8> F = Eigen::Matrix<double, 8, 8>::Identity();
  for (int i = 0; i < 3; ++i) F(i, 3 + i) = dt;
  F(6, 7) = dt;
  return F;
}

inline Eigen::Matrix<double, 8, 8> cv_process_noise(double dt, double qa, double qy) {
  Eigen::Matrix<double, 8, 8> Q = Eigen::Matrix<double, 8, 8>::Zero();
  const auto block = [&](int p, int v, double q) {
    Q(p, p) = q * dt * dt * dt / 3.0;
    Q(p, v) = Q(v, p) = q * dt * dt / 2.0;
    Q(v, v) = q * dt;
  };
  for (int i = 0; i < 3; ++i) block(i, 3 + i, qa);
  block(6, 7, qy);
  return Q;
}

struct Gaussian8 {
  Eigen::Matrix<double, 8, 1> mean;
  Eigen::Matrix<double, 8, 8> covariance;
};

inline Gaussian8 batch_last_state(const Eigen::Matrix<double, 8, 1>& prior_mean,
                                  const Eigen::Matrix<double, 8, 8>& prior_cov, double prior_dt,
                                  std::span<const BatchStep> steps, double qa, double qy) {
  // x_{-1} is the prior state; x_0 follows after prior_dt.
  const auto K = static_cast<Eigen::Index>(steps.size());
  const Eigen::Index n = 8 * (K + 1);
  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(n, n);
  Eigen::VectorXd eta = Eigen::VectorXd::Zero(n);

  const Eigen::MatrixXd P0inv = prior_cov.inverse();
  L.block<8, 8>(0, 0) += P0inv;
  eta.segment<8>(0) += P0inv * prior_mean;

  for (Eigen::Index k = 0; k < K; ++k) {
    const double dt = k == 0 ? prior_dt : steps[static_cast<std::size_t>(k)].dt;
    const Eigen::Matrix<double, 8, 8> F = cv_transition(dt);
    const Eigen::MatrixXd Qinv = cv_process_noise(dt, qa, qy).inverse();
    // Residual x_{k+1} − F x_k with blocks [−F, I].
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(8, n);
    A.block<8, 8>(0, 8 * k) = -F;
    A.block<8, 8>(0, 8 * (k + 1)).setIdentity();
    L += A.transpose() * Qinv * A;

    const auto& s = steps[static_cast<std::size_t>(k)];
    Eigen::MatrixXd Hk = Eigen::MatrixXd::Zero(s.H.rows(), n);
    Hk.block(0, 8 * (k + 1), s.H.rows(), 8) = s.H;
    const Eigen::MatrixXd Rinv = s.R.inverse();
    L += Hk.transpose() * Rinv * Hk;
    eta += Hk.transpose() * Rinv * s.z;
  }
  const Eigen::MatrixXd cov = L.inverse();
  const Eigen::VectorXd mean = cov * eta;
  Gaussian8 out;
  out.mean = mean.tail<8>();
  out.covariance = cov.bottomRightCorner<8, 8>();
  return out;
}

inline std::vector<Vec3> circle_points(const Vec3& center, double radius, int n, double z_wave = 0.0) {
  std::vector<Vec3> out;
  for (int i = 0; i < n; ++i) {
    const double a = 2.0 * std::numbers::pi * i / n;
    out.emplace_back(center.x() + radius * std::cos(a), center.y() + radius * std::sin(a),
                     center.z() + z_wave * std::sin(2.0 * a));
  }
  return out;
}

}  // namespace coop::oracle
