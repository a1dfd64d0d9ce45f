#include "egoemg/transformer.hpp"

#include <cmath>

#include "egoemg/error.hpp"

namespace egoemg {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) fail(ErrorKind::kConfiguration, what);
}

bool fits(const Linear& l, Eigen::Index out, Eigen::Index in) {
  return l.weight.rows() == out && l.weight.cols() == in && l.bias.size() == out;
}

bool fits(const LayerNorm& n, Eigen::Index d) { return n.gamma.size() == d && n.beta.size() == d; }

std::string layer_name(const std::string& prefix, std::size_t i) {
  return prefix + ".layers." + std::to_string(i);
}

/// Row-wise softmax, shifted by the row maximum.
Eigen::MatrixXd softmax_rows(Eigen::MatrixXd s) {
  for (Eigen::Index i = 0; i < s.rows(); ++i) {
    const double m = s.row(i).maxCoeff();
    s.row(i) = (s.row(i).array() - m).exp().matrix();
    s.row(i) /= s.row(i).sum();
  }
  return s;
}

}  // namespace

void TransformerConfig::validate() const {
  require(n_layers >= 0 && d_model > 0 && n_heads > 0 && d_ffn > 0, "transformer sizes must be positive");
  require(d_model % n_heads == 0, "d_model " + std::to_string(d_model) + " is not divisible by " +
                                      std::to_string(n_heads) + " heads");
  require(head_dim() % 2 == 0, "head dimension " + std::to_string(head_dim()) + " must be even for rotary encoding");
  require(std::isfinite(rope_base) && rope_base > 1.0, "rotary base must be finite and above 1");
}

TransformerConfig TransformerConfig::variant(const std::string& name) {
  if (name == "S") return small();
  if (name == "M") return medium();
  if (name == "L") return large();
  fail(ErrorKind::kConfiguration, "unknown transformer variant '" + name + "' (expected S, M or L)");
}

void TransformerWeights::validate(const TransformerConfig& config, Eigen::Index input_dim) const {
  config.validate();
  const Eigen::Index d = config.d_model;
  if (input_projection) {
    require(fits(*input_projection, d, input_dim), "input projection does not map " + std::to_string(input_dim) +
                                                       " to " + std::to_string(d) + " features");
  } else {
    require(input_dim == d, "input width " + std::to_string(input_dim) + " differs from d_model " +
                                std::to_string(d) + " and no input projection is supplied");
  }
  require(static_cast<int>(layers.size()) == config.n_layers, "transformer weight layer count mismatch");
  for (const auto& l : layers) {
    require(fits(l.attn_norm, d) && fits(l.ffn_norm, d), "transformer layer norm size mismatch");
    require(fits(l.wq, d, d) && fits(l.wk, d, d) && fits(l.wv, d, d) && fits(l.wo, d, d),
            "attention projection size mismatch");
    require(fits(l.ffn_in, config.d_ffn, d) && fits(l.ffn_out, d, config.d_ffn), "feed-forward size mismatch");
  }
}

TransformerWeights TransformerWeights::seeded(const TransformerConfig& config, std::uint64_t seed,
                                              Eigen::Index input_dim) {
  config.validate();
  const ParamInit init(seed);
  const Eigen::Index d = config.d_model;
  TransformerWeights w;
  if (input_dim != d) w.input_projection = Linear::seeded(init, "transformer.input_projection", d, input_dim);
  for (int i = 0; i < config.n_layers; ++i) {
    const std::string n = layer_name("transformer", static_cast<std::size_t>(i));
    w.layers.push_back({LayerNorm::identity(d), Linear::seeded(init, n + ".wq", d, d),
                        Linear::seeded(init, n + ".wk", d, d), Linear::seeded(init, n + ".wv", d, d),
                        Linear::seeded(init, n + ".wo", d, d), LayerNorm::identity(d),
                        Linear::seeded(init, n + ".ffn_in", config.d_ffn, d),
                        Linear::seeded(init, n + ".ffn_out", d, config.d_ffn)});
  }
  return w;
}

TransformerWeights TransformerWeights::import_from(const WeightArchive& archive, const TransformerConfig& config,
                                                   Eigen::Index input_dim, const std::string& prefix) {
  config.validate();
  const Eigen::Index d = config.d_model;
  TransformerWeights w;
  if (input_dim != d) w.input_projection = Linear::import_from(archive, prefix + ".input_projection", d, input_dim);
  for (int i = 0; i < config.n_layers; ++i) {
    const std::string n = layer_name(prefix, static_cast<std::size_t>(i));
    w.layers.push_back({LayerNorm::import_from(archive, n + ".attn_norm", d),
                        Linear::import_from(archive, n + ".wq", d, d), Linear::import_from(archive, n + ".wk", d, d),
                        Linear::import_from(archive, n + ".wv", d, d), Linear::import_from(archive, n + ".wo", d, d),
                        LayerNorm::import_from(archive, n + ".ffn_norm", d),
                        Linear::import_from(archive, n + ".ffn_in", config.d_ffn, d),
                        Linear::import_from(archive, n + ".ffn_out", d, config.d_ffn)});
  }
  return w;
}

void TransformerWeights::export_to(WeightArchive& archive, const std::string& prefix) const {
  if (input_projection) input_projection->export_to(archive, prefix + ".input_projection");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const std::string n = layer_name(prefix, i);
    const auto& l = layers[i];
    l.attn_norm.export_to(archive, n + ".attn_norm");
    l.wq.export_to(archive, n + ".wq");
    l.wk.export_to(archive, n + ".wk");
    l.wv.export_to(archive, n + ".wv");
    l.wo.export_to(archive, n + ".wo");
    l.ffn_norm.export_to(archive, n + ".ffn_norm");
    l.ffn_in.export_to(archive, n + ".ffn_in");
    l.ffn_out.export_to(archive, n + ".ffn_out");
  }
}

Eigen::MatrixXd rope_apply(const Eigen::MatrixXd& x, const std::vector<std::int64_t>& positions, double base) {
  const Eigen::Index dim = x.cols();
  if (dim % 2 != 0) fail(ErrorKind::kConfiguration, "rotary encoding needs an even head dimension, got " +
                                                        std::to_string(dim));
  if (static_cast<Eigen::Index>(positions.size()) != x.rows()) {
    fail(ErrorKind::kConfiguration, "rotary encoding needs one position per row");
  }
  Eigen::MatrixXd y(x.rows(), dim);
  for (Eigen::Index i = 0; i < dim / 2; ++i) {
    const double theta = std::pow(base, -2.0 * static_cast<double>(i) / static_cast<double>(dim));
    for (Eigen::Index t = 0; t < x.rows(); ++t) {
      const double angle = static_cast<double>(positions[static_cast<std::size_t>(t)]) * theta;
      const double c = std::cos(angle);
      const double s = std::sin(angle);
      const double a = x(t, 2 * i);
      const double b = x(t, 2 * i + 1);
      y(t, 2 * i) = a * c - b * s;
      y(t, 2 * i + 1) = a * s + b * c;
    }
  }
  return y;
}

FeatureSequence transformer_forward(const FeatureSequence& features, const TransformerConfig& config,
                                    const TransformerWeights& weights, const std::vector<std::int64_t>* positions,
                                    TransformerTrace* trace) {
  weights.validate(config, features.dim());
  const Eigen::Index frames = features.frames();
  if (frames < 1) fail(ErrorKind::kConfiguration, "transformer input has no frames");
  std::vector<std::int64_t> pos;
  if (positions) {
    require(static_cast<Eigen::Index>(positions->size()) == frames, "one position per frame is required");
    pos = *positions;
  } else {
    pos.resize(static_cast<std::size_t>(frames));
    for (Eigen::Index t = 0; t < frames; ++t) pos[static_cast<std::size_t>(t)] = t;
  }

  Eigen::MatrixXd h = weights.input_projection ? weights.input_projection->forward(features.data) : features.data;
  const int hd = config.head_dim();
  const double scale = 1.0 / std::sqrt(static_cast<double>(hd));
  if (trace) trace->attention.assign(weights.layers.size(), {});

  for (std::size_t li = 0; li < weights.layers.size(); ++li) {
    const auto& l = weights.layers[li];
    const Eigen::MatrixXd a = l.attn_norm.forward(h);
    // [T x d] so that each head is a contiguous column block.
    const Eigen::MatrixXd q = l.wq.forward(a).transpose();
    const Eigen::MatrixXd k = l.wk.forward(a).transpose();
    const Eigen::MatrixXd v = l.wv.forward(a).transpose();
    Eigen::MatrixXd mixed(frames, config.d_model);
    for (int head = 0; head < config.n_heads; ++head) {
      const Eigen::MatrixXd qh = rope_apply(q.middleCols(head * hd, hd), pos, config.rope_base);
      const Eigen::MatrixXd kh = rope_apply(k.middleCols(head * hd, hd), pos, config.rope_base);
      Eigen::MatrixXd p = softmax_rows(scale * (qh * kh.transpose()));
      mixed.middleCols(head * hd, hd) = p * v.middleCols(head * hd, hd);
      if (trace) trace->attention[li].push_back(std::move(p));
    }
    h += l.wo.forward(mixed.transpose());

    const Eigen::MatrixXd f = l.ffn_norm.forward(h);
    const Eigen::MatrixXd hidden = l.ffn_in.forward(f).unaryExpr([](double z) { return gelu(z); });
    h += l.ffn_out.forward(hidden);
  }
  return {std::move(h), features.frame_rate};
}

}  // namespace egoemg
