#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>
#include <vector>

namespace fedsim {

// 64-bit FNV-1a. Used for feature hashing and seed derivation so results do
// not depend on the platform's std::hash.
inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::uint64_t fnv1a64_mix(std::uint64_t h, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) {
    h ^= (v >> (8 * i)) & 0xffu;
    h *= 1099511628211ull;
  }
  return h;
}

// splitmix64: tiny, portable, and good enough for simulation sampling.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1).
  double next_double() { return (next_u64() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, n). n must be > 0. Rejection keeps the draw
  // exactly uniform instead of modulo-biased.
  std::uint64_t next_below(std::uint64_t n) {
    std::uint64_t threshold = (0 - n) % n;
    for (;;) {
      std::uint64_t r = next_u64();
      if (r >= threshold) return r % n;
    }
  }

  // Standard normal via Box-Muller (single value per call, deterministic).
  double next_normal() {
    double u1 = next_double();
    double u2 = next_double();
    if (u1 < 1e-300) u1 = 1e-300;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

  // Gamma(shape, 1) via Marsaglia-Tsang, with the shape<1 boost. Used for
  // Dirichlet draws in the non-uniform partition schemes.
  double next_gamma(double shape) {
    if (shape < 1.0) {
      double u = next_double();
      if (u < 1e-300) u = 1e-300;
      return next_gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
    }
    double d = shape - 1.0 / 3.0;
    double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x = next_normal();
      double v = 1.0 + c * x;
      if (v <= 0.0) continue;
      v = v * v * v;
      double u = next_double();
      if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
      if (u < 1e-300) u = 1e-300;
      if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
    }
  }

  // Fisher-Yates shuffle.
  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(next_below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::uint64_t state_;
};

// Derives an independent stream seed from an experiment seed plus a label and
// counters. Counter-based so parallel client training needs no shared state.
inline std::uint64_t derive_seed(std::uint64_t seed, std::string_view label,
                                 std::uint64_t a = 0, std::uint64_t b = 0) {
  std::uint64_t h = fnv1a64(label);
  h = fnv1a64_mix(h, seed);
  h = fnv1a64_mix(h, a);
  h = fnv1a64_mix(h, b);
  return h;
}

}  // namespace fedsim
