#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "egoemg/ik_solver.hpp"
#include "test_support.hpp"

namespace egoemg {
namespace {

const HandSkeleton& skeleton() {
  static const HandSkeleton sk = HandSkeleton::default_right();
  return sk;
}

DofVector random_z(std::mt19937_64& gen) {
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  DofVector z;
  for (int i = 0; i < kNumDofs; ++i) z[i] = u(gen);
  return z;
}

void expect_strictly_inside(const JointAngles22& a) {
  for (int i = 0; i < kNumDofs; ++i) {
    EXPECT_GT(a[i], skeleton().limit(i).min_deg) << dof::name(i);
    EXPECT_LT(a[i], skeleton().limit(i).max_deg) << dof::name(i);
  }
}

TEST(SigmoidReparam, MidpointAndSaturation) {
  const auto& sk = skeleton();
  const DofVector mid = sigmoid_reparam(DofVector::Zero(), sk);
  const DofVector top = sigmoid_reparam(DofVector::Constant(40.0), sk);
  for (int i = 0; i < kNumDofs; ++i) {
    EXPECT_NEAR(mid[i], 0.5 * (sk.limit(i).min_deg + sk.limit(i).max_deg), 1e-12);
    EXPECT_NEAR(top[i], sk.limit(i).max_deg, 1e-12);
  }
}

TEST(SigmoidReparam, LogThreeGivesThreeQuarters) {
  const auto& base = skeleton();
  std::array<JointLimit, kNumDofs> limits;
  limits.fill(JointLimit{0.0, 40.0});
  const HandSkeleton sk(base.bones(), limits, base.landmarks(), base.fingertips());
  const DofVector a = sigmoid_reparam(DofVector::Constant(std::log(3.0)), sk);
  for (int i = 0; i < kNumDofs; ++i) EXPECT_NEAR(a[i], 30.0, 1e-12);
}

TEST(SigmoidReparam, InverseRoundTrip) {
  const auto& sk = skeleton();
  EXPECT_LT(inverse_sigmoid_reparam(sigmoid_reparam(DofVector::Zero(), sk), sk).cwiseAbs().maxCoeff(), 1e-12);
  std::mt19937_64 gen(1);
  std::uniform_real_distribution<double> u(0.001, 0.999);
  double worst = 0.0;
  for (int n = 0; n < 1000 / kNumDofs + 1; ++n) {
    DofVector a;
    for (int i = 0; i < kNumDofs; ++i) a[i] = sk.limit(i).min_deg + u(gen) * sk.limit(i).span();
    const DofVector back = sigmoid_reparam(inverse_sigmoid_reparam(a, sk), sk);
    worst = std::max(worst, (back - a).cwiseAbs().maxCoeff());
  }
  EXPECT_LT(worst, 1e-10);
}

TEST(SigmoidReparam, InverseAtBoundaryIsDomainError) {
  const auto& sk = skeleton();
  DofVector a = sigmoid_reparam(DofVector::Zero(), sk);
  a[3] = sk.limit(3).min_deg;
  EXPECT_EQ(test::error_kind_of([&] { inverse_sigmoid_reparam(a, sk); }), ErrorKind::kDomain);
}

TEST(IkLoss, PerfectFitIsZero) {
  std::mt19937_64 gen(2);
  const DofVector z = random_z(gen);
  const auto targets = forward_kinematics(skeleton(), to_angles(sigmoid_reparam(z, skeleton())));
  const auto [loss, grad] = ik_loss_and_gradient(z, targets, skeleton());
  EXPECT_LT(loss, 1e-20);
  EXPECT_LT(grad.cwiseAbs().maxCoeff(), 1e-10);
}

TEST(IkLoss, GradientMatchesCentralDifferences) {
  std::mt19937_64 gen(3);
  const double h = 1e-5;
  for (int trial = 0; trial < 50; ++trial) {
    const DofVector z = random_z(gen);
    const auto targets = forward_kinematics(skeleton(), to_angles(sigmoid_reparam(random_z(gen), skeleton())));
    const auto [loss, grad] = ik_loss_and_gradient(z, targets, skeleton());
    DofVector fd;
    for (int i = 0; i < kNumDofs; ++i) {
      DofVector zp = z;
      DofVector zm = z;
      zp[i] += h;
      zm[i] -= h;
      fd[i] = (ik_loss_and_gradient(zp, targets, skeleton()).first - ik_loss_and_gradient(zm, targets, skeleton()).first) / (2 * h);
    }
    EXPECT_LT((grad - fd).norm() / fd.norm(), 1e-5) << "trial " << trial;
  }
}

TEST(IkLoss, UnitTranslationAddsOne) {
  std::mt19937_64 gen(4);
  const DofVector z = random_z(gen);
  auto targets = forward_kinematics(skeleton(), to_angles(sigmoid_reparam(z, skeleton())));
  for (auto& p : targets.points) p.x() += 1.0;
  EXPECT_NEAR(ik_loss_and_gradient(z, targets, skeleton()).first, 1.0, 1e-9);
}

TEST(IkLoss, ChainRuleThroughReparameterization) {
  std::mt19937_64 gen(5);
  const DofVector z = random_z(gen);
  const auto targets = forward_kinematics(skeleton(), to_angles(sigmoid_reparam(random_z(gen), skeleton())));
  const auto a = to_angles(sigmoid_reparam(z, skeleton()));
  const auto pred = forward_kinematics(skeleton(), a);
  const auto jac = landmark_jacobian(skeleton(), a);
  DofVector dl_da = DofVector::Zero();
  for (int l = 0; l < kNumLandmarks; ++l) {
    const Vec3 r = pred.points[static_cast<std::size_t>(l)] - targets.points[static_cast<std::size_t>(l)];
    dl_da += (2.0 / kNumLandmarks) * jac.block<3, kNumDofs>(3 * l, 0).transpose() * r;
  }
  const DofVector expect = dl_da.cwiseProduct(sigmoid_reparam_derivative(z, skeleton()));
  const auto grad = ik_loss_and_gradient(z, targets, skeleton()).second;
  EXPECT_LT((grad - expect).norm(), 1e-10 * (1.0 + expect.norm()));
  const int d = dof::kMiddlePipFe;
  const double s = 1.0 / (1.0 + std::exp(-z[d]));
  EXPECT_NEAR(sigmoid_reparam_derivative(z, skeleton())[d], skeleton().limit(d).span() * s * (1.0 - s), 1e-12);
}

TEST(FitJointAngles, RoundTripRecoversLandmarks) {
  std::mt19937_64 gen(6);
  for (int trial = 0; trial < 100; ++trial) {
    const auto truth = test::random_pose(gen, skeleton());
    const auto r = fit_joint_angles(forward_kinematics(skeleton(), truth), skeleton());
    EXPECT_LT(std::sqrt(r.residual_mse), 0.5) << "trial " << trial;
    expect_strictly_inside(r.angles);
  }
}

TEST(FitJointAngles, ResidualBookkeeping) {
  std::mt19937_64 gen(7);
  auto targets = forward_kinematics(skeleton(), test::random_pose(gen, skeleton()));
  std::normal_distribution<double> n(0.0, 2.0);
  for (auto& p : targets.points) p += Vec3(n(gen), n(gen), n(gen));
  const auto r = fit_joint_angles(targets, skeleton());
  double sum = 0.0;
  for (double e : r.per_landmark_error) sum += e * e;
  EXPECT_NEAR(r.residual_mse, sum / kNumLandmarks, 1e-12);
}

TEST(FitJointAngles, NoiseFloorMedian) {
  std::mt19937_64 gen(8);
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<double> residuals;
  for (int trial = 0; trial < 100; ++trial) {
    auto targets = forward_kinematics(skeleton(), test::random_pose(gen, skeleton()));
    for (auto& p : targets.points) p += Vec3(n(gen), n(gen), n(gen));
    residuals.push_back(fit_joint_angles(targets, skeleton()).residual_mse);
  }
  std::nth_element(residuals.begin(), residuals.begin() + 50, residuals.end());
  EXPECT_GE(residuals[50], 0.3);
  EXPECT_LE(residuals[50], 3.0);
}

TEST(FitJointAngles, AdversarialTargetsStayInsideLimits) {
  std::mt19937_64 gen(9);
  const double far = 10.0 * skeleton().max_chain_length();
  for (int trial = 0; trial < 10; ++trial) {
    LandmarkSet targets;
    for (auto& p : targets.points) p = far * Vec3(test::random_matrix(gen, 3, 1)).normalized();
    IkConfig cfg;
    cfg.outer_steps = 10;
    expect_strictly_inside(fit_joint_angles(targets, skeleton(), cfg).angles);
  }
}

TEST(FitJointAngles, SimilarityAlignmentIsApplied) {
  std::mt19937_64 gen(10);
  const auto truth = test::random_pose(gen, skeleton());
  const auto clean = forward_kinematics(skeleton(), truth);
  Similarity sim;
  sim.scale = 2.0;
  sim.translation = Vec3(5, -3, 1);
  LandmarkSet raw;
  for (int l = 0; l < kNumLandmarks; ++l) {
    raw.points[static_cast<std::size_t>(l)] = (clean.points[static_cast<std::size_t>(l)] - sim.translation) / sim.scale;
  }
  const auto r = fit_joint_angles(raw, skeleton(), {}, std::nullopt, sim);
  EXPECT_LT(std::sqrt(r.residual_mse), 0.5);
}

TEST(FitJointAngles, ScaleEquivariantResidual) {
  std::mt19937_64 gen(11);
  const double s = 1.3;
  const auto scaled = skeleton().scaled(s);
  for (int trial = 0; trial < 10; ++trial) {
    const auto truth = test::random_pose(gen, skeleton());
    const auto targets = forward_kinematics(skeleton(), truth);
    LandmarkSet big = targets;
    for (auto& p : big.points) p *= s;
    const double r1 = fit_joint_angles(targets, skeleton()).residual_mse;
    const double r2 = fit_joint_angles(big, scaled).residual_mse;
    EXPECT_LE(r2, s * s * r1 + 1e-6);
  }
}

std::vector<LandmarkSet> smooth_sequence(int frames, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  const auto a0 = test::random_pose(gen, skeleton(), 0.2);
  const auto a1 = test::random_pose(gen, skeleton(), 0.2);
  std::vector<LandmarkSet> out;
  for (int f = 0; f < frames; ++f) {
    const double w = 0.5 - 0.5 * std::cos(test::kPi * f / (frames - 1));
    auto a = a0;
    for (int i = 0; i < kNumDofs; ++i) a[i] = (1 - w) * a0[i] + w * a1[i];
    out.push_back(forward_kinematics(skeleton(), a));
  }
  return out;
}

TEST(FitBatch, SingleFrameEqualsSingleFit) {
  const auto seq = smooth_sequence(2, 12);
  const auto batch = fit_batch({{seq[0]}}, skeleton(), {}, 1);
  const auto single = fit_joint_angles(seq[0], skeleton());
  ASSERT_EQ(batch.size(), 1u);
  ASSERT_EQ(batch[0].size(), 1u);
  EXPECT_EQ(batch[0][0].angles, single.angles);
  EXPECT_EQ(batch[0][0].residual_mse, single.residual_mse);
}

TEST(FitBatch, ChunkSizeDoesNotChangeResults) {
  const auto seq = smooth_sequence(20, 13);
  IkConfig big;
  IkConfig small;
  small.chunk_size = 7;
  const auto a = fit_batch({seq}, skeleton(), big, 1);
  const auto b = fit_batch({seq}, skeleton(), small, 1);
  for (std::size_t f = 0; f < seq.size(); ++f) {
    EXPECT_EQ(a[0][f].angles, b[0][f].angles);
    EXPECT_EQ(a[0][f].residual_mse, b[0][f].residual_mse);
  }
}

TEST(FitBatch, ThreadCountDoesNotChangeResults) {
  std::vector<std::vector<LandmarkSet>> seqs{smooth_sequence(6, 14), smooth_sequence(6, 15), smooth_sequence(6, 16)};
  const auto one = fit_batch(seqs, skeleton(), {}, 1);
  const auto many = fit_batch(seqs, skeleton(), {}, 4);
  for (std::size_t s = 0; s < seqs.size(); ++s)
    for (std::size_t f = 0; f < seqs[s].size(); ++f) EXPECT_EQ(one[s][f].angles, many[s][f].angles);
}

TEST(FitBatch, WarmStartHalvesIterations) {
  const auto seq = smooth_sequence(30, 17);
  const auto warm = fit_sequence(seq, skeleton());
  double warm_iters = 0.0;
  double cold_iters = 0.0;
  for (std::size_t f = 1; f < seq.size(); ++f) {
    warm_iters += warm[f].iterations_used;
    cold_iters += fit_joint_angles(seq[f], skeleton()).iterations_used;
  }
  EXPECT_LE(warm_iters, 0.5 * cold_iters);
}

TEST(IkConfig, InvalidCountsRejected) {
  IkConfig cfg;
  cfg.outer_steps = 0;
  EXPECT_EQ(test::error_kind_of([&] { cfg.validate(); }), ErrorKind::kConfiguration);
  IkConfig lr;
  lr.learning_rate = 0.0;
  EXPECT_EQ(test::error_kind_of([&] { lr.validate(); }), ErrorKind::kConfiguration);
}

}  // namespace
}  // namespace egoemg
