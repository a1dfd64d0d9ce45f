#include "egoemg/heads.hpp"

#include <cmath>

#include "egoemg/error.hpp"

namespace egoemg {

namespace {

void check_vector(const Eigen::VectorXd& v, Eigen::Index n, const char* what) {
  if (v.size() != n) {
    fail(ErrorKind::kShapeMismatch, std::string(what) + " must have " + std::to_string(n) + " entries, got " +
                                        std::to_string(v.size()));
  }
}

JointAngles22 row_angles(const Eigen::MatrixXd& m, Eigen::Index t) {
  JointAngles22 a;
  for (int j = 0; j < kNumDofs; ++j) a[j] = m(t, j);
  return a;
}

}  // namespace

PoseHead PoseHead::seeded(std::uint64_t seed, Eigen::Index d_model) {
  return {Linear::seeded(ParamInit(seed), "pose_head", kNumDofs, d_model)};
}

PoseHead PoseHead::import_from(const WeightArchive& archive, Eigen::Index d_model, const std::string& prefix) {
  return {Linear::import_from(archive, prefix, kNumDofs, d_model)};
}

void PoseHead::export_to(WeightArchive& archive, const std::string& prefix) const {
  linear.export_to(archive, prefix);
}

Eigen::MatrixXd pose_head(const FeatureSequence& features, const PoseHead& head) {
  if (head.linear.out_features() != kNumDofs) fail(ErrorKind::kShapeMismatch, "pose head must output 22 angles");
  return head.linear.forward(features.data).transpose();
}

AttentionPoolWeights AttentionPoolWeights::seeded(std::uint64_t seed, Eigen::Index d, Eigen::Index attn_dim) {
  const ParamInit init(seed);
  const double bound = 1.0 / std::sqrt(static_cast<double>(d));
  return {init.uniform("attention_pool.w", attn_dim, d, bound),
          init.uniform("attention_pool.u", attn_dim, 1, 1.0 / std::sqrt(static_cast<double>(attn_dim)))};
}

Eigen::VectorXd attention_pool(const FeatureSequence& features, const AttentionPoolWeights& weights,
                               Eigen::VectorXd* frame_weights) {
  const Eigen::Index frames = features.frames();
  if (frames < 1) fail(ErrorKind::kInvalidInput, "attention pooling needs at least one frame");
  if (weights.w.cols() != features.dim() || weights.u.size() != weights.w.rows()) {
    fail(ErrorKind::kShapeMismatch, "attention pooling weights do not match the feature width");
  }
  const Eigen::VectorXd scores = ((weights.w * features.data).array().tanh().matrix().transpose() * weights.u);
  Eigen::VectorXd p = (scores.array() - scores.maxCoeff()).exp().matrix();
  p /= p.sum();
  Eigen::VectorXd out = features.data * p;
  if (frame_weights) *frame_weights = std::move(p);
  return out;
}

VisionHead VisionHead::seeded(std::uint64_t seed) {
  const ParamInit init(seed);
  return {Linear::seeded(init, "vision_head.fc1", 2 * kFusionFeatureDim, kFusionFeatureDim),
          Linear::seeded(init, "vision_head.fc2", kNumDofs, 2 * kFusionFeatureDim)};
}

FusionHead FusionHead::seeded(std::uint64_t seed) {
  const ParamInit init(seed);
  return {Linear::seeded(init, "fusion_head.fc1", kFusionFeatureDim, 2 * kFusionFeatureDim),
          Linear::zeros(kNumDofs, kFusionFeatureDim)};
}

FusionOutput fusion_predict(const Eigen::VectorXd& vision_feature, const Eigen::VectorXd& emg_feature,
                            const VisionHead& vision_head, const FusionHead& fusion_head) {
  check_vector(vision_feature, kFusionFeatureDim, "vision feature");
  check_vector(emg_feature, kFusionFeatureDim, "EMG feature");
  FusionOutput out;
  out.y_vision = vision_head.fc2.forward(vision_head.fc1.forward(vision_feature).cwiseMax(0.0)).col(0);
  Eigen::VectorXd joint(2 * kFusionFeatureDim);
  joint << vision_feature, emg_feature;
  out.delta = fusion_head.fc2.forward(fusion_head.fc1.forward(joint).cwiseMax(0.0)).col(0);
  check_vector(out.y_vision, kNumDofs, "vision head output");
  check_vector(out.delta, kNumDofs, "fusion head output");
  out.y = out.y_vision + out.delta;
  return out;
}

double loss_l1_fingertip(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& gt, const HandSkeleton& skeleton,
                         double fingertip_weight) {
  if (pred.rows() != gt.rows() || pred.cols() != kNumDofs || gt.cols() != kNumDofs) {
    fail(ErrorKind::kShapeMismatch, "prediction and target must both be [T x 22]");
  }
  if (pred.rows() == 0) fail(ErrorKind::kShapeMismatch, "loss needs at least one frame");
  const double l1 = (pred - gt).cwiseAbs().mean();
  if (fingertip_weight == 0.0) return l1;
  double tip_sum = 0.0;
  for (Eigen::Index t = 0; t < pred.rows(); ++t) {
    const auto a = fingertip_positions(skeleton, row_angles(pred, t));
    const auto b = fingertip_positions(skeleton, row_angles(gt, t));
    for (int i = 0; i < kNumFingertips; ++i) tip_sum += (a[static_cast<std::size_t>(i)] - b[static_cast<std::size_t>(i)]).norm();
  }
  return l1 + fingertip_weight * tip_sum / static_cast<double>(pred.rows() * kNumFingertips);
}

}  // namespace egoemg
