#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace zonecast {

/// SplitMix64 output for stream derivation; gives well-mixed, independent
/// seeds for (base seed, stream index) pairs.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + (stream + 1) * 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

/// Uniform integer in [0, n). Avoids std::uniform_int_distribution, whose
/// output is implementation-defined; mt19937_64 itself is specified
/// bit-exactly by the standard.
inline std::uint64_t bounded(std::mt19937_64& rng, std::uint64_t n) {
  return std::uint64_t((unsigned __int128)(rng()) * n >> 64);
}

/// Uniform double in [0, 1) with 53 random bits.
inline double uniform01(std::mt19937_64& rng) {
  return double(rng() >> 11) * 0x1.0p-53;
}

/// Standard normal via Box-Muller.
inline double standard_normal(std::mt19937_64& rng) {
  const double u1 = (double(rng() >> 11) + 1.0) * 0x1.0p-53;  // (0, 1]
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

}  // namespace zonecast
