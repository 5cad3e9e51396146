#pragma once

#include <array>
#include <cstdint>

namespace cclb {

// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
using PhiloxCounter = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

PhiloxCounter philox4x32(PhiloxCounter counter, PhiloxKey key) noexcept;

// Sequential reader over one (seed, run, stream) slice of the Philox
// output. Counter words are (block, stream, run lo, run hi) and the key is
// the 64-bit seed, so any slice can be regenerated independently of the
// others.
class CounterStream {
 public:
  CounterStream(std::uint64_t seed, std::uint64_t run, std::uint32_t stream) noexcept;

  std::uint32_t next_u32() noexcept;
  std::uint64_t next_u64() noexcept;
  // 53-bit uniform in [0, 1).
  double uniform01() noexcept;
  // Uniform in [0, n) by rejection; n must be positive.
  std::uint64_t uniform_index(std::uint64_t n) noexcept;

  // First 64 bits of block `block`, without touching the read position.
  std::uint64_t block_u64(std::uint32_t block) const noexcept;

 private:
  void refill() noexcept;

  PhiloxKey key_;
  PhiloxCounter counter_;
  PhiloxCounter buffer_{};
  unsigned used_ = 4;
};

}  // namespace cclb
