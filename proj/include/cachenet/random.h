#pragma once

#include <cstdint>
#include <random>

namespace cachenet {

using Rng = std::mt19937_64;

inline std::uint64_t SplitMix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Seed for an independent substream identified by (seed, a, b).
inline std::uint64_t SubstreamSeed(std::uint64_t seed, std::uint64_t a,
                                   std::uint64_t b = 0) {
  return SplitMix64(SplitMix64(SplitMix64(seed) ^ a) ^ (b + 0x632be59bd9b4e019ull));
}

// Uniform double in [0, 1) from the top 53 bits.
inline double UniformUnit(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Uniform integer in [0, n). Rejection sampling keeps it unbiased and the
// result independent of the standard library's distribution implementation.
inline std::uint64_t UniformIndex(Rng& rng, std::uint64_t n) {
  const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % n;
}

inline bool Bernoulli(Rng& rng, double p) { return UniformUnit(rng) < p; }

}  // namespace cachenet
