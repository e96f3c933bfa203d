#pragma once

#include <cstdint>
#include <random>

namespace aeunmix {

using Rng = std::mt19937_64;

// SplitMix64 finalizer (Steele, Lea & Flood). Bijective on 64-bit words.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Order-sensitive mixing of a seed with further integers:
//   mix(s, a)    = splitmix64(splitmix64(s) ^ splitmix64(a + 1))
//   mix(s, a, b) = mix(mix(s, a), b)
// Grid seeds are init_seed_i = mix(master, i) and
// run_seed_ij = mix(master, i, j) with 1-based i and j.
constexpr std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a) {
  return splitmix64(splitmix64(seed) ^ splitmix64(a + 1));
}

template <typename... Rest>
constexpr std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, Rest... rest) {
  return mix_seed(mix_seed(seed, a), static_cast<std::uint64_t>(rest)...);
}

// FNV-1a over raw bytes, used for payload checksums and weight fingerprints.
inline std::uint64_t fnv1a64(const void* data, std::size_t len,
                             std::uint64_t h = 0xcbf29ce484222325ULL) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace aeunmix
