#pragma once

#include <cstdint>
#include <random>

namespace oscombine {

// Seed used by every randomized entry point when the caller does not supply one.
inline constexpr std::uint64_t kDefaultSeed = 1729;

// SplitMix64 finalizer (Steele, Lea, Flood 2014 constants).
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Deterministic derivation of an independent substream from (seed, index).
// Trial/batch loops seed one engine per index, so results do not depend on
// evaluation order or parallelism.
constexpr std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t index) noexcept {
  return mix64(mix64(seed) ^ mix64(index));
}

inline std::mt19937_64 substream(std::uint64_t seed, std::uint64_t index) {
  return std::mt19937_64{substream_seed(seed, index)};
}

// Compensated accumulator for long Monte Carlo sums.
struct KahanSum {
  double sum = 0.0;
  double carry = 0.0;

  void add(double x) noexcept {
    double y = x - carry;
    double t = sum + y;
    carry = (t - sum) - y;
    sum = t;
  }
  double value() const noexcept { return sum; }
};

}  // namespace oscombine
