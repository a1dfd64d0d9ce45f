#include <benchmark/benchmark.h>

#include <random>

#include "egoemg/emg_dsp.hpp"
#include "egoemg/featurizer.hpp"
#include "egoemg/ik_solver.hpp"
#include "egoemg/occlusion.hpp"
#include "egoemg/transformer.hpp"

namespace egoemg {
namespace {

EmgWindow noise_window(Eigen::Index n) {
  std::mt19937_64 gen(1);
  std::normal_distribution<double> dist(0.0, 0.05);
  EmgWindow w;
  w.samples.resize(n, kEmgChannels);
  for (Eigen::Index i = 0; i < w.samples.size(); ++i) w.samples.data()[i] = dist(gen);
  return w;
}

void BM_FilterWindow(benchmark::State& state) {
  const EmgWindow w = noise_window(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(filter_emg(w));
}
BENCHMARK(BM_FilterWindow)->Arg(4096)->Arg(kDefaultWindowSamples)->Unit(benchmark::kMillisecond);

void BM_Featurize(benchmark::State& state) {
  const EmgWindow w = noise_window(kDefaultWindowSamples);
  const auto weights = FeaturizerWeights::seeded(1);
  for (auto _ : state) benchmark::DoNotOptimize(tds_featurize(w, weights));
}
BENCHMARK(BM_Featurize)->Unit(benchmark::kMillisecond);

void BM_TransformerS(benchmark::State& state) {
  const auto config = TransformerConfig::small();
  const auto weights = TransformerWeights::seeded(config, 1);
  FeatureSequence f = tds_featurize(noise_window(kDefaultWindowSamples), FeaturizerWeights::seeded(1));
  for (auto _ : state) benchmark::DoNotOptimize(transformer_forward(f, config, weights));
}
BENCHMARK(BM_TransformerS)->Unit(benchmark::kMillisecond);

void BM_IkColdFit(benchmark::State& state) {
  const auto skeleton = HandSkeleton::default_right();
  JointAngles22 pose = JointAngles22::zero();
  for (int i = 0; i < kNumDofs; ++i) {
    pose[i] = skeleton.limit(i).min_deg + 0.37 * skeleton.limit(i).span();
  }
  const LandmarkSet targets = forward_kinematics(skeleton, pose);
  for (auto _ : state) benchmark::DoNotOptimize(fit_joint_angles(targets, skeleton));
}
BENCHMARK(BM_IkColdFit)->Unit(benchmark::kMillisecond);

void BM_Rasterize(benchmark::State& state) {
  const int cells = 40;
  TriangleMesh m;
  for (int j = 0; j <= cells; ++j)
    for (int i = 0; i <= cells; ++i)
      m.vertices.push_back({-150.0 + 300.0 * i / cells, -150.0 + 300.0 * j / cells, 500.0 + 2.0 * i});
  for (int j = 0; j < cells; ++j)
    for (int i = 0; i < cells; ++i) {
      const int a = j * (cells + 1) + i;
      m.triangles.push_back({a, a + 1, a + cells + 2});
      m.triangles.push_back({a, a + cells + 2, a + cells + 1});
    }
  PinholeCamera cam;
  cam.fx = cam.fy = 400.0;
  cam.width = cam.height = static_cast<int>(state.range(0));
  cam.cx = cam.cy = cam.width / 2.0;
  for (auto _ : state) benchmark::DoNotOptimize(self_occlusion_score(m, cam));
}
BENCHMARK(BM_Rasterize)->Arg(256)->Arg(512)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace egoemg

BENCHMARK_MAIN();
