#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace latwalk {

// splitmix64 step; used to derive independent sub-seeds from a master seed.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

// Deterministic sub-seed for the ordinal-th consumer of a master seed.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t ordinal) {
  std::uint64_t s = master ^ (0x632BE59BD9B4E019ull * (ordinal + 1));
  return splitmix64(s);
}

// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
//
// The 64-bit seed is the cipher key; the 128-bit counter is split into a
// 64-bit stream id (high words) and a 64-bit block index (low words).  Any
// (seed, stream) pair addresses an independent sequence without shared
// state, so per-trajectory streams can be evaluated in any order and on any
// number of threads with bit-identical results.
class Philox {
 public:
  using result_type = std::uint32_t;

  Philox(std::uint64_t seed, std::uint64_t stream)
      : key_{static_cast<std::uint32_t>(seed),
             static_cast<std::uint32_t>(seed >> 32)},
        stream_{static_cast<std::uint32_t>(stream),
                static_cast<std::uint32_t>(stream >> 32)} {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return 0xFFFFFFFFu; }

  result_type operator()() {
    if (pos_ == 4) {
      block_ = round10({static_cast<std::uint32_t>(block_index_),
                        static_cast<std::uint32_t>(block_index_ >> 32),
                        stream_[0], stream_[1]},
                       key_);
      ++block_index_;
      pos_ = 0;
    }
    return block_[pos_++];
  }

  // Uniform double in [0, 1) with 53 random bits.
  double uniform() {
    const std::uint64_t hi = (*this)();
    const std::uint64_t lo = (*this)();
    return static_cast<double>(((hi << 32) | lo) >> 11) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller; two uniforms per draw, no cached state,
  // so the consumption pattern stays platform-independent.
  double normal() {
    double u1 = uniform();
    while (u1 == 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
  }

  // One keyed block of the underlying bijection; exposed for known-answer
  // tests against the published reference vectors.
  static std::array<std::uint32_t, 4> round10(std::array<std::uint32_t, 4> ctr,
                                              std::array<std::uint32_t, 2> key) {
    for (int r = 0; r < 10; ++r) {
      const std::uint64_t p0 = 0xD2511F53ull * ctr[0];
      const std::uint64_t p1 = 0xCD9E8D57ull * ctr[2];
      ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0],
             static_cast<std::uint32_t>(p1),
             static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1],
             static_cast<std::uint32_t>(p0)};
      key[0] += 0x9E3779B9u;
      key[1] += 0xBB67AE85u;
    }
    return ctr;
  }

 private:
  std::array<std::uint32_t, 2> key_;
  std::array<std::uint32_t, 2> stream_;
  std::uint64_t block_index_ = 0;
  std::array<std::uint32_t, 4> block_{};
  int pos_ = 4;
};

}  // namespace latwalk
