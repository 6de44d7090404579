// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include "coop/alignment.hpp"
#include "coop/evaluation.hpp"
#include "coop/simulator.hpp"
#include "coop/tracker.hpp"
#include "coopguide/commands.hpp"

#include "oracles.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <functional>
#include <map>
#include <numbers>
#include <random>
#include <string>
#include <thread>
#include <vector>

using namespace coop;

namespace {

constexpr double kPi = std::numbers::pi;

struct Verdict {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::vector<Correspondence> circle_correspondences(const RelativeTransform& T, int n, double radius) {
  std::vector<Correspondence> out;
  for (int i = 0; i < n; ++i) {
    const double a = 2.0 * kPi * i / n;
    const Vec3 d(radius * std::cos(a), radius * std::sin(a), 2.0);
    out.push_back({0.1 * i, d, apply_transform(T, d)});
  }
  return out;
}

// 1. Noiseless exact recovery, checked against an independent closed-form fit.
Verdict exact_recovery() {
  std::mt19937_64 rng(1001);
  std::uniform_real_distribution<double> ut(-10.0, 10.0);
  std::uniform_real_distribution<double> uh(-kPi, kPi);
  double worst_t = 0.0;
  double worst_h = 0.0;
  double worst_oracle = 0.0;
  const auto t0 = Clock::now();
  int converged = 0;
  for (int k = 0; k < 100; ++k) {
    const Vec3 t(ut(rng), ut(rng), ut(rng));
    const double th = wrap_heading(uh(rng));
    const auto T = RelativeTransform::from(FrameId::L, FrameId::V, t, th);
    const auto corrs = circle_correspondences(T, 50, 4.0);
    const auto r = solve_alignment(corrs, initial_guess(corrs));
    converged += r.converged ? 1 : 0;
    std::vector<Vec3> a;
    std::vector<Vec3> b;
    for (const auto& c : corrs) {
      a.push_back(c.lidar_position);
      b.push_back(c.vio_position);
    }
    const auto fit = oracle::procrustes_yaw(a, b);
    worst_t = std::max(worst_t, (r.transform.translation - t).norm());
    worst_h = std::max(worst_h, std::abs(heading_diff(r.transform.heading, th)));
    worst_oracle = std::max({worst_oracle, (r.transform.translation - fit.translation).norm(),
                             std::abs(heading_diff(r.transform.heading, fit.heading))});
  }
  const double elapsed = seconds_since(t0);
  return {converged == 100 && worst_t < 1e-6 && worst_h < 1e-8 && worst_oracle < 1e-6 && elapsed < 2.0,
          fmt::format("converged {}/100, max |dt| {:.2e} m, max |dθ| {:.2e} rad, max oracle gap {:.2e}, {:.3f} s",
                      converged, worst_t, worst_h, worst_oracle, elapsed)};
}

// 2. Robust recovery with 20% gross outliers.
Verdict robust_recovery() {
  std::mt19937_64 rng(2002);
  std::uniform_real_distribution<double> ut(-10.0, 10.0);
  std::uniform_real_distribution<double> uh(-kPi, kPi);
  std::uniform_real_distribution<double> dir(0.0, 2.0 * kPi);
  std::normal_distribution<double> noise(0.0, 0.05);
  int ok = 0;
  for (int k = 0; k < 100; ++k) {
    const auto T = RelativeTransform::from(FrameId::L, FrameId::V, Vec3(ut(rng), ut(rng), ut(rng)), uh(rng));
    auto corrs = circle_correspondences(T, 50, 4.0);
    for (std::size_t i = 0; i < corrs.size(); ++i) {
      corrs[i].vio_position += Vec3(noise(rng), noise(rng), noise(rng));
      if (i % 5 == 0) {
        const double a = dir(rng);
        corrs[i].vio_position += 5.0 * Vec3(std::cos(a), std::sin(a), 0.0);
      }
    }
    const auto r = solve_alignment(corrs, initial_guess(corrs));
    ok += (r.transform.translation - T.translation).norm() < 0.05 &&
                  std::abs(heading_diff(r.transform.heading, T.heading)) < 0.01
              ? 1
              : 0;
  }
  return {ok >= 95, fmt::format("{}/100 within 0.05 m / 0.01 rad", ok)};
}

// 3. Out-of-order arrival gives the chronological result.
Verdict replay_equivalence() {
  std::mt19937_64 rng(3003);
  std::normal_distribution<double> n(0.0, 0.1);
  std::uniform_real_distribution<double> delay(0.0, 0.5);
  const ProcessNoise q;
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    TrackerState anchor;
    anchor.mean << n(rng), n(rng), 2.0, 0.5, 0.0, 0.0, 0.1, 0.05;
    anchor.covariance *= 0.2;
    struct Arrival {
      double at;
      Measurement z;
    };
    std::vector<Arrival> arrivals;
    for (int i = 1; i <= 15; ++i) {
      const double t = 0.1 * i;
      Measurement z;
      z.stamp = t;
      switch (i % 3) {
        case 0:
          z.kind = MeasurementKind::VioHeadingOnly;
          z.value = Eigen::Vector2d(0.1 + 0.05 * t + n(rng), 0.05 + n(rng));
          z.covariance = Eigen::Matrix2d::Identity() * 0.0025;
          break;
        case 1:
          z.kind = MeasurementKind::LidarPosition;
          z.value = Vec3(0.5 * t + n(rng), n(rng), 2.0 + n(rng));
          z.covariance = Eigen::Matrix3d::Identity() * 0.0225;
          break;
        default:
          z.kind = MeasurementKind::VioFull;
          z.value.resize(8);
          z.value << 0.5 * t + n(rng), n(rng), 2.0 + n(rng), 0.5 + n(rng), n(rng), n(rng),
              0.1 + 0.05 * t + n(rng), 0.05 + n(rng);
          z.covariance = Eigen::MatrixXd::Identity(8, 8) * 0.01;
          break;
      }
      arrivals.push_back({t + delay(rng), z});
    }
    TrackerState expected = anchor;
    for (const auto& a : arrivals) expected = update(predict(expected, a.z.stamp - expected.stamp, q), a.z);
    std::stable_sort(arrivals.begin(), arrivals.end(), [](const auto& a, const auto& b) { return a.at < b.at; });
    HistoryBuffer buf(anchor, q, 2.0);
    for (const auto& a : arrivals) buf.insert_and_replay(a.z);
    const TrackerState got = buf.estimate_at(buf.newest_stamp());
    worst = std::max({worst, (got.mean - expected.mean).cwiseAbs().maxCoeff(),
                      (got.covariance - expected.covariance).cwiseAbs().maxCoeff()});
  }
  return {worst <= 1e-9, fmt::format("1000 interleavings, max deviation {:.2e}", worst)};
}

// 4. χ² gate acceptance rate for correctly modelled detections.
Verdict gate_calibration() {
  std::mt19937_64 rng(4004);
  std::normal_distribution<double> n(0.0, 1.0);
  TrackerState s;
  s.mean.head<3>() = Vec3(1, 2, 2);
  s.covariance = StateCovariance::Identity() * 0.01;
  s.covariance(0, 1) = s.covariance(1, 0) = 0.004;
  Detection d;
  d.covariance = Mat3::Identity() * 0.0225;
  const Eigen::LLT<Mat3> llt(s.covariance.topLeftCorner<3, 3>() + d.covariance);
  int accepted = 0;
  const int trials = 10000;
  for (int i = 0; i < trials; ++i) {
    d.position = s.position() + llt.matrixL() * Vec3(n(rng), n(rng), n(rng));
    const std::vector<Detection> scan = {d};
    accepted += associate(scan, s, 1e9, 0.95).accepted ? 1 : 0;
  }
  const double rate = static_cast<double>(accepted) / trials;
  return {rate >= 0.93 && rate <= 0.97, fmt::format("acceptance rate {:.4f} over {} trials", rate, trials)};
}

// 5. Drift sweep on the circle scenario.
Verdict drift_sweep() {
  const auto t0 = Clock::now();
  const std::string yaml = cli::read_text_file(std::string(COOP_SCENARIO_DIR) + "/drift_sweep.yaml");
  cli::SweepSpec spec;
  spec.parameter = "vio.drift.velocity.x";
  spec.values = cli::parse_range("0:0.8:0.1");
  spec.runs_per_value = 10;
  const int jobs = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  const auto rows = cli::run_sweep(yaml, spec, {}, jobs);

  std::map<double, std::vector<const cli::SweepRow*>> by_value;
  for (const auto& r : rows) by_value[r.value].push_back(&r);
  std::vector<double> dev;
  std::vector<double> rmse;
  bool ok = true;
  std::string table;
  for (const auto& [v, rs] : by_value) {
    int failed = 0;
    double sd = 0.0;
    double sr = 0.0;
    for (const auto* r : rs) {
      failed += r->failed ? 1 : 0;
      sd += r->mean_path_deviation;
      sr += r->rel_loc_rmse;
    }
    dev.push_back(sd / static_cast<double>(rs.size()));
    rmse.push_back(sr / static_cast<double>(rs.size()));
    if (v <= 0.7 + 1e-9 && failed > 0) ok = false;
    if (dev.back() > 0.9 || rmse.back() > 0.6 || !std::isfinite(dev.back()) || !std::isfinite(rmse.back())) {
      ok = false;
    }
    table += fmt::format(" [{:.1f}: dev {:.3f} rmse {:.3f} fail {}]", v, dev.back(), rmse.back(), failed);
  }
  const double dev_floor = dev.front();
  const double rmse_floor = rmse.front();
  for (std::size_t i = 1; i < dev.size(); ++i) {
    if (dev[i] < dev[i - 1] - 2.0 * dev_floor || rmse[i] < rmse[i - 1] - 2.0 * rmse_floor) ok = false;
  }
  const double elapsed = seconds_since(t0);
  ok = ok && elapsed < 300.0;
  return {ok, fmt::format("{} runs in {:.1f} s;{}", rows.size(), elapsed, table)};
}

// 6. Occluded loop with hovering false targets.
Verdict nlos() {
  const auto c = load_scenario(std::string(COOP_SCENARIO_DIR) + "/nlos.yaml");
  const EventLog log = run_scenario(c);
  const ErrorReport rep = evaluate(log);
  TrackId secondary = -1;
  for (const auto& [id, role] : log.header.target_roles) {
    if (role == "secondary") secondary = id;
  }
  bool captured = false;
  for (const auto& i : log.collect<InitRecord>()) captured = captured || i.track != secondary;
  for (const auto& a : log.collect<AssociationRecord>()) captured = captured || (a.accepted && a.track != secondary);
  const auto rec = recovery_times(rep.per_sample_errors, 0.25);
  const double worst_rec = rec.empty() ? INFINITY : *std::max_element(rec.begin(), rec.end());
  const bool have = rep.tracked_rmse.has_value() && rep.untracked_rmse.has_value();
  const bool ok = have && !rep.failure && *rep.tracked_rmse < *rep.untracked_rmse &&
                  *rep.tracked_rmse <= 0.25 && !rec.empty() && worst_rec < 5.0 && !captured;
  return {ok, fmt::format("tracked {:.3f} m, untracked {:.3f} m, {} restorations, worst recovery {:.2f} s, "
                          "false-target capture {}",
                          rep.tracked_rmse.value_or(NAN), rep.untracked_rmse.value_or(NAN), rec.size(), worst_rec,
                          captured ? "yes" : "no")};
}

// 7. Evaluation of a synthetic log with known injected drift.
Verdict synthetic_ate() {
  EventLog log;
  const auto M = RelativeTransform::from(FrameId::L, FrameId::L, Vec3(1.2, -0.4, 0.3), 0.9);
  const auto Minv = M.inverse();
  const Vec3 v(0.04, -0.03, 0.02);
  double s2 = 0.0;
  double s3 = 0.0;
  int n = 0;
  for (int i = 0; i <= 600; ++i) {
    const double t = 0.1 * i;
    const double a = 0.125 * t;
    const Vec3 truth(4 * std::cos(a), 4 * std::sin(a), 2.0 + 0.3 * std::sin(0.2 * t));
    const double e = std::max(0.0, t - 20.0);
    const Vec3 est = apply_transform(Minv, truth) + Minv.rotation() * (v * e);
    log.records.emplace_back(TruthRecord{t, truth, 0.0, Vec3::Zero(), true});
    log.records.emplace_back(EstimateRecord{t, GuiderStatus::Tracking, est, 0.0});
    s2 += (v.x() * v.x() + v.y() * v.y()) * e * e;
    s3 += (v.x() * v.x() + v.y() * v.y() + v.z() * v.z()) * e * e;
    ++n;
  }
  log.records.emplace_back(EndRecord{60.0});
  const double ate2 = std::sqrt(s2 / n);
  const double ate3 = std::sqrt(s3 / n);
  const ErrorReport rep = evaluate(log);
  const double gap = std::max(std::abs(rep.ate_2d - ate2), std::abs(rep.ate_3d - ate3));
  return {gap <= 1e-9, fmt::format("ate_2d {:.12f} vs {:.12f}, ate_3d {:.12f} vs {:.12f}, gap {:.2e}", rep.ate_2d,
                                   ate2, rep.ate_3d, ate3, gap)};
}

// 8. Fixed seed gives identical bytes.
Verdict determinism() {
  bool ok = true;
  std::string detail;
  for (const char* name : {"circle.yaml", "nlos.yaml"}) {
    const auto c = load_scenario(std::string(COOP_SCENARIO_DIR) + "/" + name,
                                 std::vector<ConfigOverride>{{"desired.laps", "1"}});
    const EventLog a = run_scenario(c);
    const EventLog b = run_scenario(c);
    const std::string la = serialize_event_log(a);
    const std::string lb = serialize_event_log(b);
    const std::string ma = format_report(evaluate(a)) + format_sample_csv(evaluate(a).per_sample_errors);
    const std::string mb = format_report(evaluate(b)) + format_sample_csv(evaluate(b).per_sample_errors);
    const bool same = la == lb && ma == mb && ma == format_report(evaluate(parse_event_log(la))) +
                                                       format_sample_csv(evaluate(parse_event_log(la)).per_sample_errors);
    ok = ok && same;
    detail += fmt::format("{}: {} log bytes {}; ", name, la.size(), same ? "identical" : "DIFFER");
  }
  return {ok, detail};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria = {
      {"1 alignment exact recovery", exact_recovery},
      {"2 robust alignment", robust_recovery},
      {"3 replay equivalence", replay_equivalence},
      {"4 gate calibration", gate_calibration},
      {"5 drift sweep", drift_sweep},
      {"6 NLOS tracking", nlos},
      {"7 synthetic-log ATE", synthetic_ate},
      {"8 determinism", determinism},
  };
  int failed = 0;
  for (const auto& [name, fn] : criteria) {
    Verdict v;
    try {
      v = fn();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    failed += v.pass ? 0 : 1;
    fmt::print("{} criterion {}: {}\n", v.pass ? "PASS" : "FAIL", name, v.detail);
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
