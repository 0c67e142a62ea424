#include "oneshot/rng.hpp"

#include <cmath>
#include <numbers>

namespace oneshot {

std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t Rng::next_u64() noexcept {
  state_ += 0x9e3779b97f4a7c15ULL;
  return mix64(state_);
}

Rng Rng::derive(std::uint64_t seed, std::initializer_list<std::uint64_t> keys) noexcept {
  std::uint64_t s = mix64(seed ^ 0x6a09e667f3bcc909ULL);
  for (auto k : keys) s = mix64(s ^ mix64(k + 0x9e3779b97f4a7c15ULL));
  return Rng(s);
}

double Rng::uniform01() noexcept {
  return double(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::uniform_closed(double lo, double hi) noexcept {
  const double u = double(next_u64() >> 11) / double((std::uint64_t(1) << 53) - 1);
  return lo + (hi - lo) * u;
}

std::size_t Rng::uniform_index(std::size_t n) noexcept {
  const std::uint64_t bound = n;
  const std::uint64_t limit = ~std::uint64_t(0) - (~std::uint64_t(0) % bound);
  std::uint64_t x;
  do {
    x = next_u64();
  } while (x >= limit);
  return std::size_t(x % bound);
}

double Rng::normal() noexcept {
  double u1 = uniform01();
  while (u1 <= 0.0) u1 = uniform01();
  const double u2 = uniform01();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t string_key(const char* s) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (; *s; ++s) {
    h ^= static_cast<unsigned char>(*s);
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace oneshot
