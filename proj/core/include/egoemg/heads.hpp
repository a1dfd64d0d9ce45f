#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>

#include "egoemg/featurizer.hpp"
#include "egoemg/hand_model.hpp"
#include "egoemg/layers.hpp"

namespace egoemg {

inline constexpr int kFusionFeatureDim = 256;
inline constexpr double kFingertipLossWeight = 0.01;

/// Per-frame linear map from features to the 22 joint angles (degrees).
struct PoseHead {
  Linear linear;  // [22 x d]

  static PoseHead seeded(std::uint64_t seed, Eigen::Index d_model);
  static PoseHead import_from(const WeightArchive& archive, Eigen::Index d_model, const std::string& prefix = "pose_head");
  void export_to(WeightArchive& archive, const std::string& prefix = "pose_head") const;
};

/// Returns [T x 22].
Eigen::MatrixXd pose_head(const FeatureSequence& features, const PoseHead& head);

/// Scores s_t = u . tanh(W h_t).
struct AttentionPoolWeights {
  Eigen::MatrixXd w;  // [a x d]
  Eigen::VectorXd u;  // [a]

  static AttentionPoolWeights seeded(std::uint64_t seed, Eigen::Index d, Eigen::Index attn_dim = kFusionFeatureDim);
};

/// Softmax-weighted sum of frames. `frame_weights` receives the softmax.
Eigen::VectorXd attention_pool(const FeatureSequence& features, const AttentionPoolWeights& weights,
                               Eigen::VectorXd* frame_weights = nullptr);

/// 256 -> 512 -> ReLU -> 22.
struct VisionHead {
  Linear fc1;
  Linear fc2;
  static VisionHead seeded(std::uint64_t seed);
};

/// [vision, emg] (512) -> 256 -> ReLU -> 22. Seeding leaves fc2 at zero so
/// the combined prediction starts at the vision-only one.
struct FusionHead {
  Linear fc1;
  Linear fc2;
  static FusionHead seeded(std::uint64_t seed);
};

struct FusionOutput {
  Eigen::VectorXd y;
  Eigen::VectorXd y_vision;
  Eigen::VectorXd delta;
};

/// y = y_vision + delta.
FusionOutput fusion_predict(const Eigen::VectorXd& vision_feature, const Eigen::VectorXd& emg_feature,
                            const VisionHead& vision_head, const FusionHead& fusion_head);

/// mean |pred - gt| + weight * mean fingertip distance (mm) over the 5 tips
/// of every frame. pred and gt are [T x 22] degrees for right hands.
double loss_l1_fingertip(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& gt, const HandSkeleton& skeleton,
                         double fingertip_weight = kFingertipLossWeight);

}  // namespace egoemg
