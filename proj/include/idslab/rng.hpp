#pragma once

#include <cstdint>

namespace idslab {

// Counter-based randomness: every variate is a pure function of
// (seed, sample_index, site_index). Draw order and thread count can never
// change a value, and the stream is stable across platforms because it uses
// only fixed-width integer arithmetic and one fixed binary scale.
namespace rng {

// splitmix64 finalizer; bijective on 64-bit words.
constexpr std::uint64_t mix(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t key(std::uint64_t seed, std::uint64_t sample_index,
                            std::uint64_t site_index) {
  std::uint64_t k = mix(seed + 0x9E3779B97F4A7C15ULL * (sample_index + 1));
  return mix(k ^ (0xD1B54A32D192ED03ULL * (site_index + 1)));
}

// Uniform double in [0, 1) with 53 random bits.
constexpr double u01(std::uint64_t k) {
  return static_cast<double>(k >> 11) * 0x1.0p-53;
}

inline double uniform(std::uint64_t seed, std::uint64_t sample_index,
                      std::uint64_t site_index) {
  return u01(key(seed, sample_index, site_index));
}

}  // namespace rng
}  // namespace idslab
