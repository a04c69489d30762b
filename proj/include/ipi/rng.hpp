#pragma once

#include <cstdint>
#include <random>

namespace ipi {

using Seed = std::uint64_t;
using Rng = std::mt19937_64;

/// SplitMix64 finalizer (Steele, Lea & Flood). Bijective on 64-bit words.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

/// Independent per-sample stream seeds derived from (master, index, stream)
/// without a sequential generator, so samples can be produced in any order.
constexpr Seed derive_seed(Seed master, std::uint64_t index, std::uint64_t stream) noexcept {
  return splitmix64(splitmix64(master ^ splitmix64(index)) + stream);
}

/// Uniform double in [0, 1) from the top 53 bits of one draw.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline double uniform(Rng& rng, double lo, double hi) { return lo + (hi - lo) * uniform01(rng); }

}  // namespace ipi
