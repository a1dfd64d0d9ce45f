#include "egoemg/layers.hpp"

#include <cmath>
#include <numbers>

#include "egoemg/error.hpp"
#include "egoemg/rng.hpp"

namespace egoemg {

namespace {

constexpr std::uint32_t kInitStream = 0x1417;

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

}  // namespace

Eigen::MatrixXd ParamInit::uniform(const std::string& name, Eigen::Index rows, Eigen::Index cols, double bound) const {
  CounterRng rng(seed_, fnv1a(name), kInitStream);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = rng.uniform(-bound, bound);
  }
  return m;
}

Eigen::MatrixXd Linear::forward(const Eigen::MatrixXd& x) const {
  if (x.rows() != in_features()) {
    fail(ErrorKind::kShapeMismatch, "linear layer expects " + std::to_string(in_features()) + " features, got " +
                                        std::to_string(x.rows()));
  }
  return (weight * x).colwise() + bias;
}

Linear Linear::zeros(Eigen::Index out, Eigen::Index in) {
  return {Eigen::MatrixXd::Zero(out, in), Eigen::VectorXd::Zero(out)};
}

Linear Linear::seeded(const ParamInit& init, const std::string& name, Eigen::Index out, Eigen::Index in) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(in));
  return {init.uniform(name + ".weight", out, in, bound), init.uniform(name + ".bias", out, 1, bound)};
}

Linear Linear::import_from(const WeightArchive& archive, const std::string& name, Eigen::Index out, Eigen::Index in) {
  return {require_tensor(archive, name + ".weight", {out, in}).as_matrix(),
          require_tensor(archive, name + ".bias", {out}).as_vector()};
}

void Linear::export_to(WeightArchive& archive, const std::string& name) const {
  archive[name + ".weight"] = Tensor::from_matrix(weight);
  archive[name + ".bias"] = Tensor::from_vector(bias);
}

Eigen::Index Conv1d::output_length(Eigen::Index length) const {
  if (length < kernel) return 0;
  return (length - kernel) / stride + 1;
}

Eigen::MatrixXd Conv1d::forward(const Eigen::MatrixXd& x) const {
  const Eigen::Index in = in_channels();
  if (x.rows() != in) {
    fail(ErrorKind::kShapeMismatch, "convolution expects " + std::to_string(in) + " channels, got " +
                                        std::to_string(x.rows()));
  }
  const Eigen::Index out_len = output_length(x.cols());
  if (out_len <= 0) fail(ErrorKind::kLength, "input shorter than the convolution kernel");
  // im2col: row c*kernel + j of column t holds x(c, stride*t + j).
  Eigen::MatrixXd patches(in * kernel, out_len);
  for (Eigen::Index t = 0; t < out_len; ++t) {
    const Eigen::Index start = stride * t;
    for (Eigen::Index c = 0; c < in; ++c) {
      patches.col(t).segment(c * kernel, kernel) = x.row(c).segment(start, kernel).transpose();
    }
  }
  return (weight * patches).colwise() + bias;
}

Conv1d Conv1d::seeded(const ParamInit& init, const std::string& name, Eigen::Index out, Eigen::Index in, int kernel,
                      int stride) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(in * kernel));
  return {init.uniform(name + ".weight", out, in * kernel, bound), init.uniform(name + ".bias", out, 1, bound),
          kernel, stride};
}

Conv1d Conv1d::import_from(const WeightArchive& archive, const std::string& name, Eigen::Index out, Eigen::Index in,
                           int kernel, int stride) {
  return {require_tensor(archive, name + ".weight", {out, in, kernel}).as_matrix(),
          require_tensor(archive, name + ".bias", {out}).as_vector(), kernel, stride};
}

void Conv1d::export_to(WeightArchive& archive, const std::string& name) const {
  Tensor w = Tensor::from_matrix(weight);
  w.shape = {out_channels(), in_channels(), kernel};
  archive[name + ".weight"] = std::move(w);
  archive[name + ".bias"] = Tensor::from_vector(bias);
}

Eigen::MatrixXd LayerNorm::forward(const Eigen::MatrixXd& x) const {
  if (x.rows() != gamma.size()) fail(ErrorKind::kShapeMismatch, "layer norm feature size mismatch");
  Eigen::MatrixXd y(x.rows(), x.cols());
  const double n = static_cast<double>(x.rows());
  for (Eigen::Index t = 0; t < x.cols(); ++t) {
    const double mean = x.col(t).sum() / n;
    const double var = (x.col(t).array() - mean).square().sum() / n;
    const double scale = 1.0 / std::sqrt(var + eps);
    y.col(t) = ((x.col(t).array() - mean) * scale * gamma.array() + beta.array()).matrix();
  }
  return y;
}

LayerNorm LayerNorm::identity(Eigen::Index features) {
  return {Eigen::VectorXd::Ones(features), Eigen::VectorXd::Zero(features)};
}

LayerNorm LayerNorm::import_from(const WeightArchive& archive, const std::string& name, Eigen::Index features) {
  return {require_tensor(archive, name + ".weight", {features}).as_vector(),
          require_tensor(archive, name + ".bias", {features}).as_vector()};
}

void LayerNorm::export_to(WeightArchive& archive, const std::string& name) const {
  archive[name + ".weight"] = Tensor::from_vector(gamma);
  archive[name + ".bias"] = Tensor::from_vector(beta);
}

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x / std::numbers::sqrt2)); }

double logistic(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace egoemg
