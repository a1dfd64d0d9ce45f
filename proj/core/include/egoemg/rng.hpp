#pragma once

#include <array>
#include <cstdint>

namespace egoemg {

/// Philox4x32-10 block function. Pure: the same (counter, key) always maps to
/// the same four words.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key);

/// Identifies one independent random stream. Streams with different keys
/// never share draws, so toggling one consumer does not shift another.
struct StreamKey {
  std::uint64_t seed = 0;
  std::uint64_t sample_id = 0;
  std::uint32_t op_id = 0;
};

/// Counter-based generator over a single StreamKey. Copying a CounterRng
/// forks the stream at its current position.
class CounterRng {
 public:
  explicit CounterRng(StreamKey key);
  CounterRng(std::uint64_t seed, std::uint64_t sample_id, std::uint32_t op_id)
      : CounterRng(StreamKey{seed, sample_id, op_id}) {}

  std::uint32_t next_u32();
  std::uint64_t next_u64();

  /// Uniform in [0, 1) with 53 bits of resolution.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in the closed range [lo, hi].
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);
  bool bernoulli(double p) { return uniform() < p; }
  /// Standard normal via Box-Muller; no cached second value, so every draw
  /// consumes exactly two uniforms.
  double normal();

  std::uint64_t blocks_consumed() const { return block_; }

 private:
  std::array<std::uint32_t, 2> key_{};
  std::uint32_t sample_lo_ = 0;
  std::uint32_t sample_hi_ = 0;
  std::uint32_t op_id_ = 0;
  std::uint64_t block_ = 0;
  std::array<std::uint32_t, 4> buffer_{};
  int buffered_ = 0;
};

}  // namespace egoemg
