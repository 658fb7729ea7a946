#pragma once

// Counter-based random streams. Every Monte Carlo trial owns a stream keyed
// by (seed, stream id), so results do not depend on how trials are scheduled
// across workers.

#include <array>
#include <cstdint>
#include <initializer_list>
#include <limits>

namespace uwbfuse::rng {

/// SplitMix64 finalizer, used to derive independent 64-bit keys from tags.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Folds a list of tags into `seed`; distinct tag lists give unrelated keys.
constexpr std::uint64_t derive_key(std::uint64_t seed, std::initializer_list<std::uint64_t> tags) {
  std::uint64_t key = mix64(seed);
  for (const std::uint64_t tag : tags) key = mix64(key ^ mix64(tag + 0x632be59bd9b4e019ULL));
  return key;
}

/// Philox4x32-10 (Salmon et al., SC'11) exposed as a UniformRandomBitGenerator.
/// The 64-bit key selects the generator, the 64-bit stream id the upper half
/// of the 128-bit counter; the lower half counts 4-word blocks.
class Philox4x32 {
 public:
  using result_type = std::uint32_t;
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  constexpr Philox4x32(std::uint64_t key, std::uint64_t stream)
      : key_{static_cast<std::uint32_t>(key), static_cast<std::uint32_t>(key >> 32)},
        counter_{0, 0, static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)} {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  constexpr result_type operator()() {
    if (index_ == 4) {
      block_ = bijection(counter_, key_);
      increment();
      index_ = 0;
    }
    return block_[index_++];
  }

  /// The raw 10-round bijection; exposed for known-answer tests.
  static constexpr Counter bijection(Counter ctr, Key key) {
    for (int round = 0; round < 10; ++round) {
      if (round > 0) {
        key[0] += kWeyl0;
        key[1] += kWeyl1;
      }
      const std::uint64_t p0 = std::uint64_t{kMul0} * ctr[0];
      const std::uint64_t p1 = std::uint64_t{kMul1} * ctr[2];
      ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0], static_cast<std::uint32_t>(p1),
             static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1], static_cast<std::uint32_t>(p0)};
    }
    return ctr;
  }

 private:
  static constexpr std::uint32_t kMul0 = 0xD2511F53;
  static constexpr std::uint32_t kMul1 = 0xCD9E8D57;
  static constexpr std::uint32_t kWeyl0 = 0x9E3779B9;
  static constexpr std::uint32_t kWeyl1 = 0xBB67AE85;

  constexpr void increment() {
    if (++counter_[0] == 0) ++counter_[1];
  }

  Key key_;
  Counter counter_;
  Counter block_{};
  int index_ = 4;
};

}  // namespace uwbfuse::rng
