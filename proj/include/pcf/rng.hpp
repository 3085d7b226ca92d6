#pragma once

#include <cstdint>
#include <random>

namespace pcf {

using Rng = std::mt19937_64;

// splitmix64 finalizer; turns (seed, stream, counter) into independent
// generator seeds so work can be split per item without sharing a generator.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream,
                                    std::uint64_t counter = 0) {
  return mix64(mix64(mix64(seed) ^ stream) ^ counter);
}

}  // namespace pcf
