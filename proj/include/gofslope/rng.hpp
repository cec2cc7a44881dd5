#pragma once

#include <cstdint>
#include <random>

namespace gofslope {

using Engine = std::mt19937_64;

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Derives the seed of sub-stream `index` from `master`.
///
/// Every parallel unit of work (replication, chunk, grid point) seeds its own
/// engine with split_seed(master, index), so results never depend on which
/// thread ran which unit or in what order.
constexpr std::uint64_t split_seed(std::uint64_t master, std::uint64_t index) {
  return mix64(mix64(master) ^ mix64(index + 0x632BE59BD9B4E019ULL));
}

inline Engine make_engine(std::uint64_t seed) { return Engine(seed); }

}  // namespace gofslope
