#include "coop/tracker.hpp"

#include <benchmark/benchmark.h>

#include <random>

using namespace coop;

static void BM_DelayedReplay(benchmark::State& state) {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> n(0.0, 0.1);
  std::vector<Measurement> zs;
  for (int i = 1; i <= 200; ++i) {
    Measurement z;
    z.stamp = 0.01 * i;
    z.kind = MeasurementKind::LidarPosition;
    z.value = Vec3(0.005 * i + n(rng), n(rng), 2.0 + n(rng));
    z.covariance = Eigen::Matrix3d::Identity() * 0.0225;
    zs.push_back(z);
  }
  // Swap neighbours so every other insert replays one entry.
  for (std::size_t i = 0; i + 1 < zs.size(); i += 2) std::swap(zs[i], zs[i + 1]);
  for (auto _ : state) {
    HistoryBuffer buf(TrackerState{}, ProcessNoise{}, 2.0);
    for (const auto& z : zs) benchmark::DoNotOptimize(buf.insert_and_replay(z));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(zs.size()));
}
BENCHMARK(BM_DelayedReplay);

static void BM_PredictUpdate(benchmark::State& state) {
  Measurement z;
  z.kind = MeasurementKind::LidarPosition;
  z.value = Vec3(1, 2, 3);
  z.covariance = Eigen::Matrix3d::Identity() * 0.0225;
  TrackerState s;
  for (auto _ : state) {
    s = predict(s, 0.01, ProcessNoise{});
    z.stamp = s.stamp;
    s = update(s, z);
    benchmark::DoNotOptimize(s);
  }
}
BENCHMARK(BM_PredictUpdate);
