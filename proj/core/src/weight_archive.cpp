#include <fstream>
#include <json.hpp>
#include <numeric>

#include "binary_io.hpp"
#include "egoemg/error.hpp"
#include "egoemg/tensor.hpp"

namespace egoemg {

namespace {

constexpr char kMagic[4] = {'E', 'G', 'W', '1'};

std::string shape_string(const std::vector<std::int64_t>& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) s += (i ? "," : "") + std::to_string(shape[i]);
  return s + "]";
}

}  // namespace

Tensor Tensor::from_matrix(const Eigen::MatrixXd& m) {
  Tensor t;
  t.shape = {m.rows(), m.cols()};
  t.data.resize(static_cast<std::size_t>(m.size()));
  Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(t.data.data(), m.rows(),
                                                                                     m.cols()) = m;
  return t;
}

Tensor Tensor::from_vector(const Eigen::VectorXd& v) {
  Tensor t;
  t.shape = {v.size()};
  t.data.assign(v.data(), v.data() + v.size());
  return t;
}

std::int64_t Tensor::numel() const {
  return std::accumulate(shape.begin(), shape.end(), std::int64_t{1}, std::multiplies<>());
}

Eigen::MatrixXd Tensor::as_matrix() const {
  const std::int64_t rows = shape.empty() ? 1 : shape[0];
  const std::int64_t cols = rows == 0 ? 0 : numel() / rows;
  return Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(data.data(), rows,
                                                                                                   cols);
}

Eigen::VectorXd Tensor::as_vector() const {
  return Eigen::Map<const Eigen::VectorXd>(data.data(), static_cast<Eigen::Index>(data.size()));
}

const Tensor& require_tensor(const WeightArchive& archive, const std::string& name,
                             const std::vector<std::int64_t>& shape) {
  const auto it = archive.find(name);
  if (it == archive.end()) fail(ErrorKind::kInvalidInput, "weight archive lacks tensor '" + name + "'");
  if (it->second.shape != shape) {
    fail(ErrorKind::kShapeMismatch, "tensor '" + name + "' has shape " + shape_string(it->second.shape) +
                                        ", expected " + shape_string(shape));
  }
  return it->second;
}

void write_weight_archive(std::ostream& out, const WeightArchive& archive) {
  nlohmann::json manifest = nlohmann::json::array();
  std::string payload;
  for (const auto& [name, tensor] : archive) {
    if (static_cast<std::int64_t>(tensor.data.size()) != tensor.numel()) {
      fail(ErrorKind::kShapeMismatch, "tensor '" + name + "' data does not match its shape");
    }
    manifest.push_back({{"name", name}, {"shape", tensor.shape}, {"offset", payload.size()}});
    for (double v : tensor.data) detail::put_f32(payload, v);
  }
  const std::string text = manifest.dump();
  std::string header(kMagic, sizeof kMagic);
  detail::put_le<std::uint64_t>(header, text.size());
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
  if (!out) fail(ErrorKind::kIo, "failed to write weight archive");
}

WeightArchive read_weight_archive(std::istream& in) {
  const std::string bytes = detail::slurp(in);
  if (bytes.size() < 12) fail(ErrorKind::kTruncated, "weight archive shorter than its header");
  if (bytes.compare(0, 4, kMagic, 4) != 0) fail(ErrorKind::kMalformedHeader, "not a weight archive (bad magic)");
  const auto manifest_len = detail::get_le<std::uint64_t>(bytes.data() + 4);
  if (manifest_len > bytes.size() - 12) fail(ErrorKind::kTruncated, "weight archive manifest is cut short");
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(bytes.substr(12, manifest_len));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::kMalformedHeader, std::string("weight archive manifest: ") + e.what());
  }
  const std::size_t payload_start = 12 + manifest_len;
  const std::size_t payload_size = bytes.size() - payload_start;
  WeightArchive archive;
  try {
    for (const auto& entry : manifest) {
      Tensor t;
      const auto name = entry.at("name").get<std::string>();
      t.shape = entry.at("shape").get<std::vector<std::int64_t>>();
      const auto offset = entry.at("offset").get<std::uint64_t>();
      for (auto d : t.shape) {
        if (d < 0) fail(ErrorKind::kMalformedHeader, "tensor '" + name + "' has a negative dimension");
      }
      const auto count = static_cast<std::uint64_t>(t.numel());
      if (offset > payload_size || count > (payload_size - offset) / 4) {
        fail(ErrorKind::kTruncated, "payload of tensor '" + name + "' is cut short");
      }
      t.data.resize(count);
      const char* p = bytes.data() + payload_start + offset;
      for (std::uint64_t i = 0; i < count; ++i) t.data[i] = detail::get_f32(p + 4 * i);
      if (!archive.emplace(name, std::move(t)).second) {
        fail(ErrorKind::kMalformedHeader, "tensor '" + name + "' listed twice");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::kMalformedHeader, std::string("weight archive manifest: ") + e.what());
  }
  return archive;
}

void save_weight_archive(const std::filesystem::path& path, const WeightArchive& archive) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::kIo, "cannot create " + path.string());
  write_weight_archive(out, archive);
}

WeightArchive load_weight_archive(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::kIo, "cannot open " + path.string());
  return read_weight_archive(in);
}

WeightArchive quantize_to_float32(const WeightArchive& archive) {
  WeightArchive out = archive;
  for (auto& [name, t] : out) {
    for (double& v : t.data) v = static_cast<float>(v);
  }
  return out;
}

}  // namespace egoemg
