#pragma once

#include <cstdint>
#include <random>

namespace cantus {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Counter-based stream derivation: the engine for (seed, stream, index) is a
/// pure function of its arguments, so a run can resume at any step without
/// carrying engine state around.
inline std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream = 0,
                                std::uint64_t index = 0) {
  const std::uint64_t s = splitmix64(splitmix64(splitmix64(seed) ^ stream) ^ index);
  std::seed_seq seq{static_cast<std::uint32_t>(s), static_cast<std::uint32_t>(s >> 32)};
  return std::mt19937_64(seq);
}

}  // namespace cantus
