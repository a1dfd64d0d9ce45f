#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>

#include "egoemg/tensor.hpp"

namespace egoemg {

/// Seeded fan-in uniform initialization. Every tensor draws from its own
/// stream keyed by a hash of its name, so adding a tensor never shifts the
/// values of another.
class ParamInit {
 public:
  explicit ParamInit(std::uint64_t seed) : seed_(seed) {}
  Eigen::MatrixXd uniform(const std::string& name, Eigen::Index rows, Eigen::Index cols, double bound) const;
  std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t seed_;
};

/// Sequences are stored feature-major: one column per time step.
struct Linear {
  Eigen::MatrixXd weight;  // [out x in]
  Eigen::VectorXd bias;    // [out]

  Eigen::Index in_features() const { return weight.cols(); }
  Eigen::Index out_features() const { return weight.rows(); }
  Eigen::MatrixXd forward(const Eigen::MatrixXd& x) const;

  static Linear zeros(Eigen::Index out, Eigen::Index in);
  /// Weights and bias uniform in +/- 1/sqrt(in).
  static Linear seeded(const ParamInit& init, const std::string& name, Eigen::Index out, Eigen::Index in);
  static Linear import_from(const WeightArchive& archive, const std::string& name, Eigen::Index out, Eigen::Index in);
  void export_to(WeightArchive& archive, const std::string& name) const;
};

/// Valid (unpadded) strided 1-D convolution. `weight` flattens an
/// [out x in x kernel] tensor with the tap index fastest.
struct Conv1d {
  Eigen::MatrixXd weight;  // [out x in*kernel]
  Eigen::VectorXd bias;
  int kernel = 1;
  int stride = 1;

  Eigen::Index in_channels() const { return weight.cols() / kernel; }
  Eigen::Index out_channels() const { return weight.rows(); }
  /// floor((length - kernel) / stride) + 1, or 0 when the input is too short.
  Eigen::Index output_length(Eigen::Index length) const;
  Eigen::MatrixXd forward(const Eigen::MatrixXd& x) const;  // [in x L] -> [out x L']

  static Conv1d seeded(const ParamInit& init, const std::string& name, Eigen::Index out, Eigen::Index in, int kernel,
                       int stride);
  static Conv1d import_from(const WeightArchive& archive, const std::string& name, Eigen::Index out, Eigen::Index in,
                            int kernel, int stride);
  void export_to(WeightArchive& archive, const std::string& name) const;
};

/// Normalizes each column over the feature axis, then scales and shifts.
struct LayerNorm {
  Eigen::VectorXd gamma;
  Eigen::VectorXd beta;
  double eps = 1e-5;

  Eigen::MatrixXd forward(const Eigen::MatrixXd& x) const;

  static LayerNorm identity(Eigen::Index features);
  static LayerNorm import_from(const WeightArchive& archive, const std::string& name, Eigen::Index features);
  void export_to(WeightArchive& archive, const std::string& name) const;
};

inline double relu(double x) { return x > 0.0 ? x : 0.0; }
/// Exact (erf) GELU.
double gelu(double x);
double logistic(double x);

}  // namespace egoemg
