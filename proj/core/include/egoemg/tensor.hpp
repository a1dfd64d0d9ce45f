#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace egoemg {

/// Dense row-major tensor used for weight exchange. Values are held in
/// double; archives store them as float32.
struct Tensor {
  std::vector<std::int64_t> shape;
  std::vector<double> data;

  static Tensor from_matrix(const Eigen::MatrixXd& m);
  static Tensor from_vector(const Eigen::VectorXd& v);
  std::int64_t numel() const;
  /// Views the tensor as [shape[0] x product(rest)].
  Eigen::MatrixXd as_matrix() const;
  Eigen::VectorXd as_vector() const;
};

using WeightArchive = std::map<std::string, Tensor>;

/// Fetches `name` and checks its shape; throws kShapeMismatch or
/// kInvalidInput (missing tensor).
const Tensor& require_tensor(const WeightArchive& archive, const std::string& name,
                             const std::vector<std::int64_t>& shape);

/// Layout: 4-byte magic "EGW1", little-endian uint64 manifest length, JSON
/// manifest (tensor name, shape, byte offset into the payload), payload of
/// little-endian float32 values.
void write_weight_archive(std::ostream& out, const WeightArchive& archive);
WeightArchive read_weight_archive(std::istream& in);
void save_weight_archive(const std::filesystem::path& path, const WeightArchive& archive);
WeightArchive load_weight_archive(const std::filesystem::path& path);

/// Rounds every value through float32, as a save/load cycle would.
WeightArchive quantize_to_float32(const WeightArchive& archive);

}  // namespace egoemg
