#pragma once

// Little-endian primitives shared by the weight archive and the episode
// container. Internal to the library.

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "egoemg/error.hpp"

namespace egoemg::detail {

template <typename U>
void put_le(std::string& out, U value) {
  for (std::size_t i = 0; i < sizeof(U); ++i) out.push_back(static_cast<char>((value >> (8 * i)) & 0xffu));
}

template <typename U>
U get_le(const char* p) {
  U v = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    v |= static_cast<U>(static_cast<unsigned char>(p[i])) << (8 * i);
  }
  return v;
}

inline void put_f32(std::string& out, double value) {
  put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(static_cast<float>(value)));
}
inline void put_f64(std::string& out, double value) { put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(value)); }
inline double get_f32(const char* p) { return std::bit_cast<float>(get_le<std::uint32_t>(p)); }
inline double get_f64(const char* p) { return std::bit_cast<double>(get_le<std::uint64_t>(p)); }

/// Reads the whole remaining stream.
inline std::string slurp(std::istream& in) {
  std::string data{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  if (in.bad()) fail(ErrorKind::kIo, "read error");
  return data;
}

}  // namespace egoemg::detail
