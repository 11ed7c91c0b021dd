#pragma once

#include <array>
#include <cstdint>

namespace berkson {

/// Philox4x32-10 counter-based generator. A (seed, stream) pair names an
/// independent sequence; the harness uses one stream per trial so trials can
/// run in any order without sharing state.
class CounterRng {
 public:
  using Block = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  CounterRng(std::uint64_t seed, std::uint64_t stream);

  /// The raw bijection: ten Philox rounds of `counter` under `key`.
  static Block philox(Block counter, Key key);

  std::uint32_t next_u32();
  std::uint64_t next_u64();
  /// Uniform on [0, 1) with 53 random bits.
  double uniform();

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }
  /// Number of 128-bit blocks consumed so far.
  std::uint64_t position() const { return block_index_; }

 private:
  void refill();

  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t block_index_ = 0;
  Block buffer_{};
  int next_word_ = 4;
};

}  // namespace berkson
