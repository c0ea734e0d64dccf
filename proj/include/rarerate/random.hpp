#pragma once

// Deterministic seeding and counter-based draws.

#include <cmath>
#include <cstdint>
#include <initializer_list>

namespace rarerate {

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Stable 64-bit hash of a sequence of keys; order matters.
constexpr std::uint64_t derive_seed(std::initializer_list<std::uint64_t> keys) noexcept {
  std::uint64_t h = 0x6a09e667f3bcc909ULL;
  for (std::uint64_t k : keys) h = splitmix64(h ^ splitmix64(k));
  return h;
}

/// Uniform on the open interval (0, 1), a pure function of the key triple.
inline double counter_uniform(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) noexcept {
  const std::uint64_t bits = derive_seed({seed, stream, index});
  return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

inline double unit_exponential(double u) noexcept { return -std::log(u); }

/// Poisson(1) by inversion of its CDF.
inline unsigned unit_poisson(double u) noexcept {
  // P(X = k) = e^-1 / k!
  double p = 0.36787944117144233;
  double cdf = p;
  unsigned k = 0;
  while (u > cdf && k < 40) {
    ++k;
    p /= k;
    cdf += p;
  }
  return k;
}

}  // namespace rarerate
