#pragma once

#include <cstdint>
#include <random>

namespace polsa {

using Rng = std::mt19937_64;

/// splitmix64 step; used to decorrelate per-trial seeds derived from a base seed.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed for an independent stream: trial t of a run seeded with `base`.
inline std::uint64_t mix_seed(std::uint64_t base, std::uint64_t stream) {
  return splitmix64(base ^ splitmix64(stream));
}

inline Rng make_rng(std::uint64_t base, std::uint64_t stream) {
  return Rng(mix_seed(base, stream));
}

}  // namespace polsa
