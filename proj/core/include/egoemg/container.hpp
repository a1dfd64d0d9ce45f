#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace egoemg {

/// EgoEMG-lite ("EGL1") container: a checksummed text manifest followed by
/// little-endian payload blocks. Byte layout in docs/FORMAT.md.
inline constexpr int kContainerVersion = 1;

enum class DType { kF64, kF32, kI64, kU8 };
std::string_view to_string(DType dtype);
std::size_t dtype_size(DType dtype);

struct Block {
  std::string name;
  DType dtype = DType::kF64;
  std::vector<std::int64_t> shape;
  std::string bytes;  // little-endian payload

  std::int64_t numel() const;

  static Block f64(std::string name, std::vector<std::int64_t> shape, const std::vector<double>& values);
  /// Row-major copy of m with shape [rows, cols].
  static Block f64_matrix(std::string name, const Eigen::MatrixXd& m);
  static Block f64_vector(std::string name, const Eigen::VectorXd& v);
  static Block raw(std::string name, std::string bytes);

  /// Throws kMalformedHeader unless the dtype is f64.
  std::vector<double> to_f64() const;
  /// Rows are the first dimension, columns the product of the rest.
  Eigen::MatrixXd to_matrix() const;
  Eigen::VectorXd to_vector() const;
};

struct Container {
  std::map<std::string, std::string> attributes;
  std::vector<Block> blocks;

  const Block* find(std::string_view name) const;
  /// Throws kMalformedHeader when the block is absent.
  const Block& at(std::string_view name) const;
  const std::string& attribute(const std::string& key) const;
};

/// IEEE CRC-32 (zlib polynomial).
std::uint32_t crc32(std::string_view bytes);

void write_container(std::ostream& out, const Container& container);
/// Blocks with an unrecognised dtype are skipped and reported in `warnings`.
/// Errors: kMalformedHeader, kChecksumMismatch (naming the block), kTruncated.
Container read_container(std::istream& in, std::vector<std::string>* warnings = nullptr);
void save_container(const std::filesystem::path& path, const Container& container);
Container load_container(const std::filesystem::path& path, std::vector<std::string>* warnings = nullptr);

}  // namespace egoemg
