#include "egoemg/container.hpp"

#include <zlib.h>

#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <numeric>
#include <set>

#include "binary_io.hpp"
#include "egoemg/error.hpp"

namespace egoemg {

namespace {

constexpr char kMagic[4] = {'E', 'G', 'L', '1'};
constexpr std::size_t kPreambleSize = 4 + 8;

bool parse_dtype(const std::string& s, DType& out) {
  for (DType d : {DType::kF64, DType::kF32, DType::kI64, DType::kU8}) {
    if (s == to_string(d)) {
      out = d;
      return true;
    }
  }
  return false;
}

std::string hex32(std::uint32_t v) {
  char buf[11];
  std::snprintf(buf, sizeof buf, "0x%08x", v);
  return buf;
}

}  // namespace

std::string_view to_string(DType dtype) {
  switch (dtype) {
    case DType::kF64: return "f64";
    case DType::kF32: return "f32";
    case DType::kI64: return "i64";
    case DType::kU8: return "u8";
  }
  return "?";
}

std::size_t dtype_size(DType dtype) {
  switch (dtype) {
    case DType::kF64:
    case DType::kI64: return 8;
    case DType::kF32: return 4;
    case DType::kU8: return 1;
  }
  return 1;
}

std::int64_t Block::numel() const {
  return std::accumulate(shape.begin(), shape.end(), std::int64_t{1}, std::multiplies<>());
}

Block Block::f64(std::string name, std::vector<std::int64_t> shape, const std::vector<double>& values) {
  Block b{std::move(name), DType::kF64, std::move(shape), {}};
  if (b.numel() != static_cast<std::int64_t>(values.size())) {
    fail(ErrorKind::kShapeMismatch, "block '" + b.name + "' values do not match its shape");
  }
  b.bytes.reserve(values.size() * 8);
  for (double v : values) detail::put_f64(b.bytes, v);
  return b;
}

Block Block::f64_matrix(std::string name, const Eigen::MatrixXd& m) {
  std::vector<double> values(static_cast<std::size_t>(m.size()));
  Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(values.data(), m.rows(),
                                                                                     m.cols()) = m;
  return f64(std::move(name), {m.rows(), m.cols()}, values);
}

Block Block::f64_vector(std::string name, const Eigen::VectorXd& v) {
  return f64(std::move(name), {v.size()}, std::vector<double>(v.data(), v.data() + v.size()));
}

Block Block::raw(std::string name, std::string bytes) {
  const auto n = static_cast<std::int64_t>(bytes.size());
  return {std::move(name), DType::kU8, {n}, std::move(bytes)};
}

std::vector<double> Block::to_f64() const {
  if (dtype != DType::kF64) fail(ErrorKind::kMalformedHeader, "block '" + name + "' is not f64");
  std::vector<double> out(bytes.size() / 8);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = detail::get_f64(bytes.data() + 8 * i);
  return out;
}

Eigen::MatrixXd Block::to_matrix() const {
  const std::vector<double> v = to_f64();
  const std::int64_t rows = shape.empty() ? 1 : shape[0];
  const std::int64_t cols =
      shape.size() < 2 ? 1 : std::accumulate(shape.begin() + 1, shape.end(), std::int64_t{1}, std::multiplies<>());
  return Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(v.data(), rows,
                                                                                                   cols);
}

Eigen::VectorXd Block::to_vector() const {
  const std::vector<double> v = to_f64();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

const Block* Container::find(std::string_view name) const {
  for (const auto& b : blocks) {
    if (b.name == name) return &b;
  }
  return nullptr;
}

const Block& Container::at(std::string_view name) const {
  const Block* b = find(name);
  if (!b) fail(ErrorKind::kMalformedHeader, "container lacks block '" + std::string(name) + "'");
  return *b;
}

const std::string& Container::attribute(const std::string& key) const {
  const auto it = attributes.find(key);
  if (it == attributes.end()) fail(ErrorKind::kMalformedHeader, "container lacks attribute '" + key + "'");
  return it->second;
}

std::uint32_t crc32(std::string_view bytes) {
  uLong crc = ::crc32(0L, Z_NULL, 0);
  std::size_t done = 0;
  while (done < bytes.size()) {
    const auto chunk = static_cast<uInt>(std::min<std::size_t>(bytes.size() - done, 1u << 30));
    crc = ::crc32(crc, reinterpret_cast<const Bytef*>(bytes.data() + done), chunk);
    done += chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

void write_container(std::ostream& out, const Container& container) {
  nlohmann::json blocks = nlohmann::json::array();
  std::set<std::string> names;
  std::uint64_t offset = 0;
  for (const auto& b : container.blocks) {
    if (!names.insert(b.name).second) fail(ErrorKind::kInvalidInput, "duplicate block name '" + b.name + "'");
    if (static_cast<std::uint64_t>(b.numel()) * dtype_size(b.dtype) != b.bytes.size()) {
      fail(ErrorKind::kShapeMismatch, "block '" + b.name + "' payload does not match its shape");
    }
    blocks.push_back({{"name", b.name},
                      {"dtype", std::string(to_string(b.dtype))},
                      {"shape", b.shape},
                      {"offset", offset},
                      {"size", b.bytes.size()},
                      {"crc32", crc32(b.bytes)}});
    offset += b.bytes.size();
  }
  const nlohmann::json manifest = {{"format", "EGL1"},
                                   {"version", kContainerVersion},
                                   {"attributes", container.attributes},
                                   {"blocks", blocks}};
  const std::string text = manifest.dump();
  std::string head(kMagic, sizeof kMagic);
  detail::put_le<std::uint64_t>(head, text.size());
  head += text;
  detail::put_le<std::uint32_t>(head, crc32(text));
  out.write(head.data(), static_cast<std::streamsize>(head.size()));
  for (const auto& b : container.blocks) out.write(b.bytes.data(), static_cast<std::streamsize>(b.bytes.size()));
  if (!out) fail(ErrorKind::kIo, "failed to write container");
}

Container read_container(std::istream& in, std::vector<std::string>* warnings) {
  const std::string bytes = detail::slurp(in);
  if (bytes.size() < 4 && bytes.compare(0, bytes.size(), kMagic, bytes.size()) == 0) {
    fail(ErrorKind::kTruncated, "container shorter than its magic");
  }
  if (bytes.size() < 4 || bytes.compare(0, 4, kMagic, 4) != 0) {
    fail(ErrorKind::kMalformedHeader, "not an EGL1 container (bad magic)");
  }
  if (bytes.size() < kPreambleSize) fail(ErrorKind::kTruncated, "container shorter than its preamble");
  const auto manifest_len = detail::get_le<std::uint64_t>(bytes.data() + 4);
  if (manifest_len > bytes.size() - kPreambleSize || bytes.size() - kPreambleSize - manifest_len < 4) {
    fail(ErrorKind::kTruncated, "container manifest is cut short");
  }
  const std::string text = bytes.substr(kPreambleSize, manifest_len);
  const auto stored_crc = detail::get_le<std::uint32_t>(bytes.data() + kPreambleSize + manifest_len);
  if (crc32(text) != stored_crc) fail(ErrorKind::kChecksumMismatch, "manifest checksum mismatch");
  const std::size_t payload_start = kPreambleSize + manifest_len + 4;
  const std::size_t payload_size = bytes.size() - payload_start;

  Container c;
  try {
    const auto manifest = nlohmann::json::parse(text);
    if (manifest.at("format").get<std::string>() != "EGL1") fail(ErrorKind::kMalformedHeader, "unknown format tag");
    const int version = manifest.at("version").get<int>();
    if (version > kContainerVersion && warnings) {
      warnings->push_back("container version " + std::to_string(version) + " is newer than " +
                          std::to_string(kContainerVersion));
    }
    c.attributes = manifest.at("attributes").get<std::map<std::string, std::string>>();
    std::set<std::string> names;
    for (const auto& entry : manifest.at("blocks")) {
      Block b;
      b.name = entry.at("name").get<std::string>();
      if (!names.insert(b.name).second) fail(ErrorKind::kMalformedHeader, "block '" + b.name + "' listed twice");
      const auto dtype_text = entry.at("dtype").get<std::string>();
      const auto offset = entry.at("offset").get<std::uint64_t>();
      const auto size = entry.at("size").get<std::uint64_t>();
      if (offset > payload_size || size > payload_size - offset) {
        fail(ErrorKind::kTruncated, "payload of block '" + b.name + "' is cut short");
      }
      if (!parse_dtype(dtype_text, b.dtype)) {
        if (warnings) warnings->push_back("skipped block '" + b.name + "' of unknown dtype '" + dtype_text + "'");
        continue;
      }
      b.shape = entry.at("shape").get<std::vector<std::int64_t>>();
      for (auto d : b.shape) {
        if (d < 0) fail(ErrorKind::kMalformedHeader, "block '" + b.name + "' has a negative dimension");
      }
      if (static_cast<std::uint64_t>(b.numel()) * dtype_size(b.dtype) != size) {
        fail(ErrorKind::kMalformedHeader, "block '" + b.name + "' size does not match its shape");
      }
      b.bytes = bytes.substr(payload_start + offset, size);
      const auto expected = entry.at("crc32").get<std::uint32_t>();
      const auto actual = crc32(b.bytes);
      if (actual != expected) {
        fail(ErrorKind::kChecksumMismatch, "block '" + b.name + "' checksum " + hex32(actual) + " != stored " +
                                               hex32(expected));
      }
      c.blocks.push_back(std::move(b));
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::kMalformedHeader, std::string("container manifest: ") + e.what());
  }
  return c;
}

void save_container(const std::filesystem::path& path, const Container& container) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::kIo, "cannot create " + path.string());
  write_container(out, container);
}

Container load_container(const std::filesystem::path& path, std::vector<std::string>* warnings) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::kIo, "cannot open " + path.string());
  return read_container(in, warnings);
}

}  // namespace egoemg
