#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

namespace mineica {

using Rng = std::mt19937_64;

/// Independent child seed for a named consumer of the root seed.
/// SplitMix64 finalizer over (root, stream).
constexpr std::uint64_t derive_seed(std::uint64_t root, std::uint64_t stream) {
  std::uint64_t z = root + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Stream identifiers used when splitting the experiment seed.
enum class SeedStream : std::uint64_t {
  sources = 1,
  encoder_init = 2,
  mine_init = 3,
  permutations = 4,
  fastica = 5,
  gaussian_data = 6,
};

constexpr std::uint64_t derive_seed(std::uint64_t root, SeedStream stream) {
  return derive_seed(root, static_cast<std::uint64_t>(stream));
}

/// Uniformly random permutation of 0..n-1 (Fisher-Yates with explicit draws,
/// so the result does not depend on the standard library's shuffle).
inline std::vector<std::size_t> random_permutation(std::size_t n, Rng& rng) {
  std::vector<std::size_t> p(n);
  for (std::size_t i = 0; i < n; ++i) p[i] = i;
  for (std::size_t i = n; i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(p[i - 1], p[j]);
  }
  return p;
}

}  // namespace mineica
