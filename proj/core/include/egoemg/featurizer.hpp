#pragma once

#include <Eigen/Core>
#include <array>
#include <cstdint>

#include "egoemg/emg_dsp.hpp"
#include "egoemg/layers.hpp"

namespace egoemg {

inline constexpr int kFeatureDim = 256;
inline constexpr int kTdsGridChannels = 8;
inline constexpr int kTdsGridWidth = 32;
inline constexpr int kSeReduction = 4;
inline constexpr Eigen::Index kDefaultWindowSamples = 7790;

/// [d x T] features with the frame rate they were produced at.
struct FeatureSequence {
  Eigen::MatrixXd data;
  double frame_rate = 0.0;

  Eigen::Index dim() const { return data.rows(); }
  Eigen::Index frames() const { return data.cols(); }
};

/// One TDS encoder block. The 256 feature channels are read as an
/// [8 x 32] grid (channel-major). A temporal convolution mixes the 8 grid
/// channels with one [8 x 8 x k] kernel shared by all 32 columns, followed
/// by ReLU, a residual from the centre-cropped input and LayerNorm; then a
/// two-layer fully connected block with residual and LayerNorm.
struct TdsBlockWeights {
  Conv1d conv;  // 8 -> 8, stride 1
  LayerNorm conv_norm;
  Linear fc1;
  Linear fc2;
  LayerNorm fc_norm;
};

/// Squeeze-and-excitation: 256 -> 64 -> 256.
struct SeWeights {
  Linear reduce;
  Linear expand;
};

struct FeaturizerWeights {
  Conv1d conv1;      // 16 -> 256, k 11, s 5
  Conv1d conv2;      // 256 -> 256, k 5, s 2
  Conv1d stage1_in;  // 256 -> 256, k 9, s 5
  TdsBlockWeights stage1_tds;  // k 5
  SeWeights se1;
  Conv1d stage2_in;  // 256 -> 256, k 3, s 1
  TdsBlockWeights stage2_tds;  // k 3
  SeWeights se2;

  /// Throws kShapeMismatch unless every tensor has its documented shape.
  void validate() const;
  static FeaturizerWeights seeded(std::uint64_t seed);
  static FeaturizerWeights import_from(const WeightArchive& archive, const std::string& prefix = "featurizer");
  void export_to(WeightArchive& archive, const std::string& prefix = "featurizer") const;
};

/// Output lengths after conv1, conv2, stage-1 in-conv, stage-1 TDS,
/// stage-2 in-conv and stage-2 TDS. Entries are 0 once the input is too
/// short.
std::array<Eigen::Index, 6> featurizer_lengths(Eigen::Index samples);
/// Shortest input that yields one output frame.
Eigen::Index featurizer_min_samples();
/// Output frame t sees input samples [kFrameHop * t, kFrameHop * t + kReceptiveField).
inline constexpr Eigen::Index kFrameHop = 50;
inline constexpr Eigen::Index kReceptiveField = 511;
/// Timestamp of frame t in samples from the window start: the centre of its
/// receptive field.
inline double frame_center_sample(Eigen::Index t) {
  return static_cast<double>(kFrameHop * t) + 0.5 * static_cast<double>(kReceptiveField - 1);
}

/// Intermediate activations, kept for inspection.
struct FeaturizerTrace {
  std::array<Eigen::MatrixXd, 6> layers;  // after each of the six length-changing layers
  Eigen::MatrixXd stage1_pre_se;
  Eigen::MatrixXd stage2_pre_se;
  Eigen::VectorXd stage1_gate;
  Eigen::VectorXd stage2_gate;
};

/// out[c, t] = x[c, t] * g[c], g = logistic(W2 relu(W1 mean_t(x) + b1) + b2).
Eigen::MatrixXd se_gate(const Eigen::MatrixXd& features, const SeWeights& weights, Eigen::VectorXd* gate = nullptr);

Eigen::MatrixXd tds_block(const Eigen::MatrixXd& x, const TdsBlockWeights& weights);

/// Throws kLength (naming the minimum) for windows shorter than
/// featurizer_min_samples().
FeatureSequence tds_featurize(const EmgWindow& window, const FeaturizerWeights& weights,
                              FeaturizerTrace* trace = nullptr);

}  // namespace egoemg
