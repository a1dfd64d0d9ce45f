#include <gtest/gtest.h>

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <unsupported/Eigen/FFT>

#include "egoemg/augment.hpp"
#include "test_support.hpp"

namespace egoemg {
namespace {

EmgWindow clean_window(Eigen::Index n = 2048) {
  EmgWindow w;
  w.samples.resize(n, kEmgChannels);
  for (Eigen::Index t = 0; t < n; ++t)
    for (int c = 0; c < kEmgChannels; ++c)
      w.samples(t, c) = std::sin(2.0 * test::kPi * (40.0 + 13.0 * c) * static_cast<double>(t) / kEmgSampleRate) +
                        0.3 * std::cos(2.0 * test::kPi * 211.0 * static_cast<double>(t) / kEmgSampleRate);
  return w;
}

MarkerSet hand_markers(double scale = 1.0) {
  const auto lm = forward_kinematics(HandSkeleton::default_right(), JointAngles22::zero());
  MarkerSet m;
  m[0] = Vec3::Zero();
  for (int i = 0; i < kNumLandmarks; ++i) m[static_cast<std::size_t>(i + 1)] = scale * lm.points[static_cast<std::size_t>(i)];
  return m;
}

bool same(const MarkerSet& a, const MarkerSet& b) {
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i] != b[i]) return false;
  return true;
}

const AppliedOp* find_op(const MarkerAugResult& r, MarkerOp op) {
  for (const auto& a : r.applied)
    if (a.op == op) return &a;
  return nullptr;
}

// ---- EMG ------------------------------------------------------------------

TEST(AugmentEmg, DisabledConfigIsIdentity) {
  const auto w = clean_window();
  const auto out = augment_emg(w, 99, EmgAugConfig::disabled());
  EXPECT_TRUE((out.samples.array() == w.samples.array()).all());
}

TEST(AugmentEmg, SameSeedBitIdentical) {
  const auto w = clean_window();
  const auto a = augment_emg(w, 5);
  const auto b = augment_emg(w, 5);
  EXPECT_TRUE((a.samples.array() == b.samples.array()).all());
  const auto c = augment_emg(w, 6);
  EXPECT_FALSE((a.samples.array() == c.samples.array()).all());
}

TEST(AugmentEmg, ShapePreserved) {
  const auto w = clean_window(7790);
  const auto out = augment_emg(w, 1);
  EXPECT_EQ(out.samples.rows(), w.samples.rows());
  EXPECT_EQ(out.samples.cols(), w.samples.cols());
}

TEST(AugmentEmg, NoiseAtFixedSnr) {
  const auto w = clean_window();
  auto cfg = EmgAugConfig::disabled();
  cfg.noise_p = 1.0;
  cfg.noise_snr_db_min = cfg.noise_snr_db_max = 25.0;
  double sum_db = 0.0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto out = augment_emg(w, seed, cfg);
    const double signal = w.samples.squaredNorm();
    const double noise = (out.samples - w.samples).squaredNorm();
    sum_db += 10.0 * std::log10(signal / noise);
  }
  EXPECT_NEAR(sum_db / 100.0, 25.0, 1.0);
}

TEST(AugmentEmg, DropoutRateCalibrated) {
  EmgWindow w;
  w.samples = Eigen::MatrixXd::Ones(8, kEmgChannels);
  auto cfg = EmgAugConfig::disabled();
  cfg.channel_dropout_p = 0.25;
  long dropped = 0;
  for (std::uint64_t seed = 0; seed < 10000; ++seed) {
    EmgAugTrace t;
    augment_emg(w, seed, cfg, 0, &t);
    dropped += static_cast<long>(t.dropped_channels.size());
  }
  EXPECT_NEAR(static_cast<double>(dropped) / (10000.0 * kEmgChannels), 0.25, 0.02);
}

TEST(AugmentEmg, DroppedChannelsAreZero) {
  const auto w = clean_window();
  auto cfg = EmgAugConfig::disabled();
  cfg.channel_dropout_p = 0.5;
  EmgAugTrace t;
  const auto out = augment_emg(w, 3, cfg, 0, &t);
  ASSERT_FALSE(t.dropped_channels.empty());
  for (int c = 0; c < kEmgChannels; ++c) {
    const bool dropped = std::find(t.dropped_channels.begin(), t.dropped_channels.end(), c) != t.dropped_channels.end();
    if (dropped) EXPECT_EQ(out.samples.col(c).cwiseAbs().maxCoeff(), 0.0);
    else EXPECT_TRUE((out.samples.col(c).array() == w.samples.col(c).array()).all());
  }
}

TEST(AugmentEmg, MaskCapsRespected) {
  const auto w = clean_window();
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    EmgAugTrace t;
    augment_emg(w, seed, {}, 0, &t);
    ASSERT_LE(t.masks.size(), 3u);
    int total = 0;
    for (const auto& m : t.masks) {
      ASSERT_LE(m.width, 128);
      ASSERT_GE(m.first, 0);
      ASSERT_LE(m.first + m.width, static_cast<int>(w.length() / 2 + 1));
      total += m.width;
    }
    ASSERT_LE(total, 3 * 128);
    ASSERT_LE(std::abs(t.shift_samples), 80);
  }
}

TEST(AugmentEmg, UnmaskedBinsUntouched) {
  std::mt19937_64 gen(1);
  const Eigen::VectorXd x = test::random_matrix(gen, 1024, 1);
  Eigen::FFT<double> fft;
  std::vector<double> column(x.data(), x.data() + x.size());
  std::vector<std::complex<double>> spectrum;
  fft.fwd(spectrum, column);
  auto masked = spectrum;
  const std::vector<FrequencyMask> masks{{10, 20}, {400, 128}, {0, 3}};
  apply_frequency_masks(masked, masks);
  const int n = 1024;
  for (int k = 0; k < n; ++k) {
    const int one_sided = k <= n / 2 ? k : n - k;
    bool inside = false;
    for (const auto& m : masks) inside = inside || (one_sided >= m.first && one_sided < m.first + m.width);
    if (inside) EXPECT_EQ(masked[static_cast<std::size_t>(k)], std::complex<double>(0.0, 0.0)) << k;
    else EXPECT_EQ(masked[static_cast<std::size_t>(k)], spectrum[static_cast<std::size_t>(k)]) << k;
  }
}

TEST(AugmentEmg, StagesDrawFromIndependentStreams) {
  const auto w = clean_window();
  auto noise_only = EmgAugConfig::disabled();
  noise_only.noise_p = 1.0;
  auto both = noise_only;
  both.channel_dropout_p = 0.25;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    EmgAugTrace t;
    const auto a = augment_emg(w, seed, noise_only);
    const auto b = augment_emg(w, seed, both, 0, &t);
    for (int c = 0; c < kEmgChannels; ++c) {
      if (std::find(t.dropped_channels.begin(), t.dropped_channels.end(), c) != t.dropped_channels.end()) continue;
      ASSERT_TRUE((a.samples.col(c).array() == b.samples.col(c).array()).all());
    }
  }
}

TEST(AugmentEmg, JitterShiftsWithEdgeReplication) {
  const auto w = clean_window();
  auto cfg = EmgAugConfig::disabled();
  cfg.jitter_ms = 40.0;
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    EmgAugTrace t;
    const auto out = augment_emg(w, seed, cfg, 0, &t);
    const int s = t.shift_samples;
    ASSERT_LE(std::abs(s), 80);
    for (Eigen::Index i = 0; i < w.length(); ++i) {
      const Eigen::Index src = std::clamp<Eigen::Index>(i - s, 0, w.length() - 1);
      ASSERT_TRUE((out.samples.row(i).array() == w.samples.row(src).array()).all());
    }
  }
}

TEST(AugmentEmg, InvalidConfigRejected) {
  EmgAugConfig cfg;
  cfg.channel_dropout_p = 1.5;
  EXPECT_EQ(test::error_kind_of([&] { cfg.validate(); }), ErrorKind::kConfiguration);
  EmgAugConfig snr;
  snr.noise_snr_db_min = 40.0;
  EXPECT_EQ(test::error_kind_of([&] { snr.validate(); }), ErrorKind::kConfiguration);
}

// ---- markers --------------------------------------------------------------

TEST(AugmentMarkers, BypassLeavesInputAndRecordsNothing) {
  const auto graph = SkeletonGraph::default_hand();
  const auto m = hand_markers();
  MarkerAugConfig cfg;
  cfg.bypass_p = 1.0;
  const auto r = augment_markers(m, graph, 180.0, 7, cfg);
  EXPECT_TRUE(r.bypassed);
  EXPECT_TRUE(r.applied.empty());
  EXPECT_TRUE(same(r.markers, m));
}

TEST(AugmentMarkers, BypassRateCalibrated) {
  const auto graph = SkeletonGraph::default_hand();
  const auto m = hand_markers();
  int bypassed = 0;
  for (std::uint64_t seed = 0; seed < 10000; ++seed) {
    const auto r = augment_markers(m, graph, 180.0, seed);
    if (r.bypassed) {
      ++bypassed;
      ASSERT_TRUE(r.applied.empty());
      ASSERT_TRUE(same(r.markers, m));
    }
  }
  EXPECT_NEAR(bypassed / 10000.0, 0.5, 0.02);
}

TEST(AugmentMarkers, SpikeMovesExactlyOneMarker) {
  const auto graph = SkeletonGraph::default_hand();
  const auto m = hand_markers();
  const double scale = 180.0;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const auto r = augment_markers(m, graph, scale, seed, MarkerAugConfig::only(MarkerOp::kSpike));
    int moved = 0;
    for (std::size_t i = 0; i < m.size(); ++i) {
      const double d = (r.markers[i] - m[i]).norm();
      if (d == 0.0) continue;
      ++moved;
      EXPECT_GE(d, 2.0 * scale - 1e-9);
      EXPECT_LE(d, 5.0 * scale + 1e-9);
    }
    ASSERT_EQ(moved, 1);
  }
}

TEST(AugmentMarkers, SwapIsLocalPermutation) {
  const auto graph = SkeletonGraph::default_hand();
  const auto m = hand_markers(0.4);
  int total_swaps = 0;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const auto r = augment_markers(m, graph, 180.0, seed, MarkerAugConfig::only(MarkerOp::kSwap));
    std::vector<int> perm(m.size(), -1);
    for (std::size_t i = 0; i < m.size(); ++i) {
      for (std::size_t j = 0; j < m.size(); ++j) {
        if (r.markers[i] == m[j]) perm[i] = static_cast<int>(j);
      }
      ASSERT_GE(perm[i], 0) << "output marker " << i << " is not an input marker";
    }
    auto sorted = perm;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < sorted.size(); ++i) ASSERT_EQ(sorted[i], static_cast<int>(i));
    int swaps = 0;
    for (std::size_t i = 0; i < m.size(); ++i) {
      if (perm[i] == static_cast<int>(i)) continue;
      ++swaps;
      EXPECT_LE((m[i] - m[static_cast<std::size_t>(perm[i])]).norm(), 15.0);
    }
    ASSERT_LE(swaps / 2, 3);
    total_swaps += swaps / 2;
  }
  EXPECT_GT(total_swaps, 0);
}

TEST(AugmentMarkers, GlobalScaleIsSimilarity) {
  const auto graph = SkeletonGraph::default_hand();
  const auto m = hand_markers();
  const auto r = augment_markers(m, graph, 180.0, 3, MarkerAugConfig::only(MarkerOp::kGlobalScale));
  const auto* op = find_op(r, MarkerOp::kGlobalScale);
  ASSERT_NE(op, nullptr);
  const double s = op->values.at(0);
  EXPECT_GE(s, 0.6);
  EXPECT_LE(s, 1.4);
  for (std::size_t i = 0; i < m.size(); ++i)
    for (std::size_t j = i + 1; j < m.size(); ++j)
      EXPECT_NEAR((r.markers[i] - r.markers[j]).norm(), s * (m[i] - m[j]).norm(), 1e-9);
}

TEST(AugmentMarkers, BoneScalingBounded) {
  const auto graph = SkeletonGraph::default_hand();
  const auto m = hand_markers();
  const auto r = augment_markers(m, graph, 180.0, 4, MarkerAugConfig::only(MarkerOp::kBoneLength));
  for (const auto& [a, b] : graph.edges) {
    const double before = (m[static_cast<std::size_t>(a)] - m[static_cast<std::size_t>(b)]).norm();
    const double after = (r.markers[static_cast<std::size_t>(a)] - r.markers[static_cast<std::size_t>(b)]).norm();
    EXPECT_GE(after, 0.95 * before - 1e-9);
    EXPECT_LE(after, 1.05 * before + 1e-9);
  }
}

TEST(AugmentMarkers, DropoutUsesNeighbourMean) {
  const auto graph = SkeletonGraph::default_hand();
  const auto adj = graph.adjacency();
  const auto m = hand_markers();
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto r = augment_markers(m, graph, 180.0, seed, MarkerAugConfig::only(MarkerOp::kDropout));
    const auto* op = find_op(r, MarkerOp::kDropout);
    if (op == nullptr) continue;
    ASSERT_LE(op->markers.size(), 3u);
    for (int i : op->markers) {
      Vec3 mean = Vec3::Zero();
      for (int j : adj[static_cast<std::size_t>(i)]) mean += m[static_cast<std::size_t>(j)];
      mean /= static_cast<double>(adj[static_cast<std::size_t>(i)].size());
      EXPECT_LT((r.markers[static_cast<std::size_t>(i)] - mean).norm(), 1e-12);
    }
  }
}

TEST(AugmentMarkers, CapsNeverViolated) {
  const auto graph = SkeletonGraph::default_hand();
  const auto m = hand_markers(0.4);
  MarkerAugConfig cfg;
  cfg.swap_p = 1.0;
  cfg.per_marker_dropout_p = 0.5;
  for (std::uint64_t seed = 0; seed < 10000; ++seed) {
    const auto r = augment_markers(m, graph, 180.0, seed, cfg);
    std::size_t dropouts = 0;
    for (const auto& op : r.applied) {
      switch (op.op) {
        case MarkerOp::kSwap: ASSERT_LE(op.markers.size() / 2, 3u); break;
        case MarkerOp::kDropout:
        case MarkerOp::kGaussianNoise: dropouts += op.markers.size(); break;
        case MarkerOp::kDrift: ASSERT_LE(op.markers.size(), 3u); break;
        case MarkerOp::kSpike: ASSERT_EQ(op.markers.size(), 1u); break;
        default: break;
      }
    }
    ASSERT_LE(dropouts, 3u);
  }
}

TEST(AugmentMarkers, DeterministicAndSeedSensitive) {
  const auto graph = SkeletonGraph::default_hand();
  const auto m = hand_markers();
  MarkerAugConfig cfg;
  cfg.bypass_p = 0.0;
  const auto a = augment_markers(m, graph, 180.0, 11, cfg);
  const auto b = augment_markers(m, graph, 180.0, 11, cfg);
  const auto c = augment_markers(m, graph, 180.0, 12, cfg);
  EXPECT_TRUE(same(a.markers, b.markers));
  EXPECT_FALSE(same(a.markers, c.markers));
}

TEST(AugmentMarkers, TogglingSpikeLeavesDriftDraws) {
  const auto graph = SkeletonGraph::default_hand();
  const auto m = hand_markers();
  auto drift = MarkerAugConfig::only(MarkerOp::kDrift);
  auto both = drift;
  both.enabled[static_cast<std::size_t>(MarkerOp::kSpike)] = true;
  both.spike_p = 1.0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto a = augment_markers(m, graph, 180.0, seed, drift);
    const auto b = augment_markers(m, graph, 180.0, seed, both);
    const int spiked = find_op(b, MarkerOp::kSpike)->markers.at(0);
    for (std::size_t i = 0; i < m.size(); ++i) {
      if (static_cast<int>(i) == spiked) continue;
      ASSERT_EQ(a.markers[i], b.markers[i]);
    }
  }
}

TEST(AugmentMarkers, BadInputsRejected) {
  const auto graph = SkeletonGraph::default_hand();
  EXPECT_EQ(test::error_kind_of([&] { augment_markers(hand_markers(), graph, 0.0, 1); }), ErrorKind::kInvalidInput);
  MarkerAugConfig cfg;
  cfg.global_scale_min = 2.0;
  EXPECT_EQ(test::error_kind_of([&] { cfg.validate(); }), ErrorKind::kConfiguration);
}

}  // namespace
}  // namespace egoemg
