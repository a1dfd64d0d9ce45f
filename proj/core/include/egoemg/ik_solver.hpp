#pragma once

#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "egoemg/hand_model.hpp"
#include "egoemg/lbfgs.hpp"

namespace egoemg {

using DofVector = Eigen::Matrix<double, kNumDofs, 1>;

struct IkConfig {
  int outer_steps = 100;
  // Quasi-Newton iterations per outer step.
  int max_inner_iters = 50;
  double learning_rate = 0.1;
  int history_size = 10;
  double gradient_tolerance = 1e-8;
  // Frames per chunk in fit_batch; chunks are a memory bound only and never
  // break the warm-start chain.
  int chunk_size = 256;

  void validate() const;
  LbfgsOptions optimizer_options() const;
};

/// Similarity transform applied to targets before fitting:
/// p' = scale * rotation * p + translation.
struct Similarity {
  double scale = 1.0;
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  Vec3 apply(const Vec3& p) const { return scale * (rotation * p) + translation; }
};

struct IkResult {
  JointAngles22 angles;
  double residual_mse = 0.0;  // mm^2, mean of squared per-landmark distances
  std::array<double, kNumLandmarks> per_landmark_error{};  // mm
  bool converged = false;
  int iterations_used = 0;  // accepted quasi-Newton iterations
  int evaluations = 0;
};

/// a = a_min + (a_max - a_min) * sigmoid(z), element-wise.
DofVector sigmoid_reparam(const DofVector& z, const HandSkeleton& skeleton);
/// Inverse of sigmoid_reparam. Throws ErrorKind::kDomain unless every entry
/// lies strictly inside its limit interval.
DofVector inverse_sigmoid_reparam(const DofVector& a, const HandSkeleton& skeleton);
/// da/dz for each DoF.
DofVector sigmoid_reparam_derivative(const DofVector& z, const HandSkeleton& skeleton);

JointAngles22 to_angles(const DofVector& a, Handedness hand = Handedness::kRight);
DofVector to_vector(const JointAngles22& angles);

/// Mean squared landmark error of FK(sigmoid_reparam(z)) and its exact
/// gradient with respect to z.
std::pair<double, DofVector> ik_loss_and_gradient(const DofVector& z, const LandmarkSet& targets,
                                                  const HandSkeleton& skeleton);

/// Cold start is z = 0 (mid-range pose). A warm start is pulled 1% of the
/// range inside each limit before inversion.
IkResult fit_joint_angles(const LandmarkSet& targets, const HandSkeleton& skeleton,
                          const IkConfig& config = {},
                          const std::optional<JointAngles22>& warm_start = std::nullopt,
                          const std::optional<Similarity>& alignment = std::nullopt);

/// Fits every frame of every sequence. Frames within a sequence are solved in
/// order, each warm-started from the previous frame's angles; independent
/// sequences run concurrently on up to `max_threads` threads (0 = hardware concurrency).
std::vector<std::vector<IkResult>> fit_batch(const std::vector<std::vector<LandmarkSet>>& sequences,
                                             const HandSkeleton& skeleton, const IkConfig& config = {},
                                             unsigned max_threads = 0);

/// Single-sequence convenience overload.
std::vector<IkResult> fit_sequence(const std::vector<LandmarkSet>& frames, const HandSkeleton& skeleton,
                                   const IkConfig& config = {});

}  // namespace egoemg
