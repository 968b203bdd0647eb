#pragma once

#include <cstdint>
#include <limits>

namespace mixmodal {

/// Counter-based 64-bit generator: output k is the SplitMix64 finalizer
/// applied to seed + k * golden_gamma. Satisfies UniformRandomBitGenerator,
/// and every output depends only on (seed, k), so streams reproduce exactly
/// on any platform.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  explicit CounterRng(std::uint64_t seed = 0) : seed_(seed) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() { return mix(seed_ + (++counter_) * kGamma); }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  std::uint64_t counter() const { return counter_; }

  /// Seed for an independent stream derived from this seed and `tag`.
  static std::uint64_t derive(std::uint64_t seed, std::uint64_t tag) {
    return mix(mix(seed) ^ (tag * 0xD1B54A32D192ED03ULL + 0x8CB92BA72F3D8DD7ULL));
  }

 private:
  static constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;

  static constexpr std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
};

}  // namespace mixmodal
