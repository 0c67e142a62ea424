#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>

namespace oneshot {

/// SplitMix64 (Steele, Lea & Flood, 2014). Every random draw in the library goes
/// through this type, so a seed fully determines datasets, augmentations, pair
/// sequences and weight initialization. Independent streams are derived from
/// (seed, key...) by mixing rather than by advancing a shared generator.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) noexcept : state_(seed) {}

  static Rng derive(std::uint64_t seed, std::initializer_list<std::uint64_t> keys) noexcept;

  std::uint64_t next_u64() noexcept;

  /// Uniform on [0, 1).
  double uniform01() noexcept;
  /// Uniform on the closed interval [lo, hi].
  double uniform_closed(double lo, double hi) noexcept;
  /// Uniform on [lo, hi).
  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform01(); }
  /// Unbiased integer in [0, n); n must be positive.
  std::size_t uniform_index(std::size_t n) noexcept;
  bool bernoulli(double p) noexcept { return uniform01() < p; }
  /// Standard normal via Box-Muller.
  double normal() noexcept;

  std::uint64_t state() const noexcept { return state_; }

 private:
  std::uint64_t state_;
};

std::uint64_t mix64(std::uint64_t z) noexcept;

/// Stable 64-bit key for a string (FNV-1a), for use with Rng::derive.
std::uint64_t string_key(const char* s) noexcept;

}  // namespace oneshot
