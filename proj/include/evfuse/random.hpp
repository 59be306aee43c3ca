#pragma once

#include <cstdint>
#include <random>

namespace evfuse {

/// mt19937_64 output is fixed by the standard; the distributions in <random>
/// are not, so draws are derived from raw output to stay reproducible
/// across standard libraries.
using Rng = std::mt19937_64;

/// Independent generator for a named purpose derived from one user seed.
inline Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0) {
  // splitmix64 finalizer
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return Rng(z ^ (z >> 31));
}

/// Uniform in [0, 1).
inline double unit_uniform(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Uniform in [lo, hi).
inline double uniform(Rng& rng, double lo, double hi) {
  return lo + (hi - lo) * unit_uniform(rng);
}

/// Uniform integer in [0, n), n > 0.
inline std::uint64_t uniform_index(Rng& rng, std::uint64_t n) {
  return static_cast<std::uint64_t>(unit_uniform(rng) * static_cast<double>(n)) % n;
}

inline std::int8_t random_polarity(Rng& rng) {
  return (rng() >> 63) != 0 ? std::int8_t{1} : std::int8_t{-1};
}

}  // namespace evfuse
