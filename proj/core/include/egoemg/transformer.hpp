#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "egoemg/featurizer.hpp"
#include "egoemg/layers.hpp"

namespace egoemg {

inline constexpr double kDefaultRopeBase = 10000.0;

struct TransformerConfig {
  int n_layers = 3;
  int d_model = 256;
  int n_heads = 4;
  int d_ffn = 512;
  double rope_base = kDefaultRopeBase;

  int head_dim() const { return d_model / n_heads; }
  /// Throws kConfiguration unless every size is positive, d_model splits
  /// evenly into heads and the head dimension is even.
  void validate() const;

  static TransformerConfig small() { return {3, 256, 4, 512}; }
  static TransformerConfig medium() { return {6, 256, 8, 1024}; }
  static TransformerConfig large() { return {8, 384, 12, 1536}; }
  /// "S", "M" or "L"; kConfiguration otherwise.
  static TransformerConfig variant(const std::string& name);
};

struct TransformerLayerWeights {
  LayerNorm attn_norm;
  Linear wq, wk, wv, wo;
  LayerNorm ffn_norm;
  Linear ffn_in;   // d_model -> d_ffn
  Linear ffn_out;  // d_ffn -> d_model
};

struct TransformerWeights {
  /// Present when the featurizer width differs from d_model.
  std::optional<Linear> input_projection;
  std::vector<TransformerLayerWeights> layers;

  /// Throws kConfiguration when a tensor does not fit `config` or an input of
  /// `input_dim` features.
  void validate(const TransformerConfig& config, Eigen::Index input_dim = kFeatureDim) const;
  /// Projection included whenever input_dim != d_model.
  static TransformerWeights seeded(const TransformerConfig& config, std::uint64_t seed,
                                   Eigen::Index input_dim = kFeatureDim);
  static TransformerWeights import_from(const WeightArchive& archive, const TransformerConfig& config,
                                        Eigen::Index input_dim = kFeatureDim,
                                        const std::string& prefix = "transformer");
  void export_to(WeightArchive& archive, const std::string& prefix = "transformer") const;
};

/// Rotates each pair (x[t, 2i], x[t, 2i+1]) of a [T x head_dim] block by
/// positions[t] * base^(-2i / head_dim). Odd head_dim is a kConfiguration error.
Eigen::MatrixXd rope_apply(const Eigen::MatrixXd& x, const std::vector<std::int64_t>& positions,
                           double base = kDefaultRopeBase);

struct TransformerTrace {
  /// attention[layer][head] is [T x T]; row i holds query i's weights.
  std::vector<std::vector<Eigen::MatrixXd>> attention;
};

/// Pre-norm encoder stack with unmasked attention. `positions` defaults to
/// 0..T-1.
FeatureSequence transformer_forward(const FeatureSequence& features, const TransformerConfig& config,
                                    const TransformerWeights& weights,
                                    const std::vector<std::int64_t>* positions = nullptr,
                                    TransformerTrace* trace = nullptr);

}  // namespace egoemg
