#pragma once

#include <cstdint>

namespace ergolab {

/// Counter-based generator: the i-th draw is a pure function of (key, i).
///
/// Each draw is the SplitMix64 finaliser applied to key + (i + 1) * 0x9E3779B97F4A7C15.
/// Reproducibility is bit-exact on any platform with IEEE doubles; parallel shards
/// pick disjoint counter ranges or derived keys and never share state.
class CounterRng {
 public:
  explicit constexpr CounterRng(std::uint64_t key) : key_(key) {}

  static constexpr std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  constexpr std::uint64_t bits(std::uint64_t counter) const {
    return mix(key_ + (counter + 1) * 0x9E3779B97F4A7C15ULL);
  }

  /// Uniform double in [0, 1) with 53 random bits.
  constexpr double uniform(std::uint64_t counter) const {
    return static_cast<double>(bits(counter) >> 11) * 0x1.0p-53;
  }

  std::uint64_t key() const { return key_; }

 private:
  std::uint64_t key_;
};

/// Independent key for sub-stream `stream` of `seed`.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  return CounterRng::mix(CounterRng::mix(seed) ^ (stream * 0xD1B54A32D192ED03ULL + 0x8CB92BA72F3D8DD7ULL));
}

/// Sequential view over a CounterRng.
class RngStream {
 public:
  explicit constexpr RngStream(std::uint64_t key) : rng_(key) {}
  double uniform() { return rng_.uniform(counter_++); }
  std::uint64_t bits() { return rng_.bits(counter_++); }

 private:
  CounterRng rng_;
  std::uint64_t counter_ = 0;
};

}  // namespace ergolab
