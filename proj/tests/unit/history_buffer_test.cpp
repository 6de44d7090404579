#include "coop/tracker.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <vector>

using namespace coop;

namespace {

Measurement lidar(double stamp, const Vec3& p) {
  Measurement z;
  z.stamp = stamp;
  z.kind = MeasurementKind::LidarPosition;
  z.value = p;
  z.covariance = Eigen::Matrix3d::Identity() * 0.02;
  return z;
}

Measurement heading(double stamp, double phi, double omega) {
  Measurement z;
  z.stamp = stamp;
  z.kind = MeasurementKind::VioHeadingOnly;
  z.value = Eigen::Vector2d(phi, omega);
  z.covariance = Eigen::Matrix2d::Identity() * 0.003;
  return z;
}

TrackerState anchor() {
  TrackerState s;
  s.mean(3) = 0.5;
  s.covariance *= 0.5;
  return s;
}

TrackerState sequential(const TrackerState& start, std::vector<Measurement> zs, const ProcessNoise& q) {
  std::stable_sort(zs.begin(), zs.end(), [](const auto& a, const auto& b) { return a.stamp < b.stamp; });
  TrackerState s = start;
  for (const auto& z : zs) s = update(predict(s, z.stamp - s.stamp, q), z);
  return s;
}

double max_diff(const TrackerState& a, const TrackerState& b) {
  return std::max((a.mean - b.mean).cwiseAbs().maxCoeff(),
                  (a.covariance - b.covariance).cwiseAbs().maxCoeff());
}

}  // namespace

TEST(HistoryBuffer, InOrderMatchesStreaming) {
  const ProcessNoise q;
  HistoryBuffer buf(anchor(), q);
  std::vector<Measurement> zs;
  TrackerState last;
  for (int i = 1; i <= 10; ++i) {
    zs.push_back(lidar(0.1 * i, Vec3(0.05 * i, 0.01 * i, 0)));
    last = buf.insert_and_replay(zs.back());
  }
  EXPECT_EQ(max_diff(last, sequential(anchor(), zs, q)), 0.0);
}

TEST(HistoryBuffer, DelayedMiddleMeasurement) {
  const ProcessNoise q;
  const auto z1 = lidar(0.1, Vec3(0.05, 0, 0));
  const auto z2 = lidar(0.2, Vec3(0.1, 0.02, 0));
  const auto z3 = lidar(0.3, Vec3(0.16, 0.01, 0));
  HistoryBuffer buf(anchor(), q);
  buf.insert_and_replay(z1);
  buf.insert_and_replay(z3);
  const auto out = buf.insert_and_replay(z2);
  EXPECT_DOUBLE_EQ(out.stamp, 0.3);
  EXPECT_LT(max_diff(out, sequential(anchor(), {z1, z2, z3}, q)), 1e-9);
  EXPECT_EQ(buf.size(), 3u);
}

TEST(HistoryBuffer, StaleMeasurementRejected) {
  HistoryBuffer buf(anchor(), ProcessNoise{}, 2.0);
  for (int i = 1; i <= 40; ++i) buf.insert_and_replay(lidar(0.1 * i, Vec3::Zero()));
  EXPECT_GT(buf.anchor().stamp, 1.0);
  EXPECT_LE(buf.anchor().stamp, buf.measurements().front().stamp);
  EXPECT_LE(buf.newest_stamp() - buf.measurements().front().stamp, 2.0 + 1e-9);
  EXPECT_THROW(buf.insert_and_replay(lidar(0.5, Vec3::Zero())), Error);
  EXPECT_THROW(buf.estimate_at(0.5), Error);
}

TEST(HistoryBuffer, PruningPreservesTheState) {
  const ProcessNoise q;
  HistoryBuffer buf(anchor(), q, 0.5);
  std::vector<Measurement> zs;
  TrackerState last;
  for (int i = 1; i <= 30; ++i) {
    zs.push_back(lidar(0.1 * i, Vec3(0.05 * i, 0, 0)));
    last = buf.insert_and_replay(zs.back());
  }
  EXPECT_LT(buf.size(), 30u);
  EXPECT_LT(max_diff(last, sequential(anchor(), zs, q)), 1e-12);
}

TEST(HistoryBuffer, RandomInterleavingsMatchChronological) {
  const ProcessNoise q;
  std::mt19937_64 rng(77);
  std::normal_distribution<double> n(0.0, 0.1);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<Measurement> zs;
    for (int i = 1; i <= 12; ++i) {
      const double t = 0.15 * i;
      zs.push_back(i % 3 == 0 ? heading(t, 0.1 * i + n(rng), 0.2 + n(rng))
                              : lidar(t, Vec3(0.5 * t + n(rng), n(rng), n(rng))));
    }
    const TrackerState expected = sequential(anchor(), zs, q);
    std::shuffle(zs.begin(), zs.end(), rng);
    HistoryBuffer buf(anchor(), q, 2.0);
    for (const auto& z : zs) buf.insert_and_replay(z);
    ASSERT_LT(max_diff(buf.estimate_at(buf.newest_stamp()), expected), 1e-9) << "trial " << trial;
  }
}

TEST(HistoryBuffer, EstimateAt) {
  const ProcessNoise q;
  HistoryBuffer empty(anchor(), q);
  EXPECT_LT(max_diff(empty.estimate_at(0.7), predict(anchor(), 0.7, q)), 1e-15);

  HistoryBuffer buf(anchor(), q);
  buf.insert_and_replay(lidar(0.1, Vec3(0.05, 0, 0)));
  const auto newest = buf.insert_and_replay(lidar(0.2, Vec3(0.1, 0, 0)));
  EXPECT_EQ(max_diff(buf.estimate_at(0.2), newest), 0.0);
  EXPECT_LT(max_diff(buf.estimate_at(0.7), predict(newest, 0.5, q)), 1e-15);
  const auto mid = buf.estimate_at(0.15);
  EXPECT_DOUBLE_EQ(mid.stamp, 0.15);
}

TEST(HistoryBuffer, FailedUpdateLeavesBufferIntact) {
  HistoryBuffer buf(anchor(), ProcessNoise{});
  buf.insert_and_replay(lidar(0.1, Vec3::Zero()));
  Measurement bad = lidar(0.2, Vec3::Zero());
  bad.covariance = -100.0 * Eigen::Matrix3d::Identity();
  EXPECT_ANY_THROW(buf.insert_and_replay(bad));
  EXPECT_EQ(buf.size(), 1u);
}
