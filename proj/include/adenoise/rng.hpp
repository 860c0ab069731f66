#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace adenoise {

using Rng = std::mt19937_64;

/// splitmix64 finalizer; used to derive independent sub-seeds.
constexpr std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

/// Seed of the named sub-stream `name` (and optional index) under `root`.
/// All randomness in the toolkit flows from one root seed through here so
/// that corpus, mixing, policy-init and rollout streams stay independent.
constexpr std::uint64_t derive_seed(std::uint64_t root, std::string_view name,
                                    std::uint64_t index = 0) {
  std::uint64_t h = 0xCBF29CE484222325ull;  // FNV-1a
  for (char ch : name) {
    h ^= static_cast<unsigned char>(ch);
    h *= 0x100000001B3ull;
  }
  return mix_seed(mix_seed(root ^ h) + index);
}

inline Rng make_rng(std::uint64_t root, std::string_view name, std::uint64_t index = 0) {
  return Rng(derive_seed(root, name, index));
}

/// Uniform double in [0, 1) from the top 53 bits. Unlike
/// std::uniform_real_distribution, the mapping is fixed by us, so streams are
/// reproducible across standard library implementations.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform(Rng& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform01(rng);
}

/// Standard normal via Box-Muller (one of the pair is discarded).
double standard_normal(Rng& rng);

/// Uniform integer in [0, n).
std::uint64_t uniform_index(Rng& rng, std::uint64_t n);

}  // namespace adenoise
