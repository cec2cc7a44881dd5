#pragma once

#include <cstdint>
#include <functional>
#include <span>

namespace gofslope {

/// Number of compositions of n into `cells` non-negative parts, C(n+N−1, N−1);
/// saturates at UINT64_MAX.
std::uint64_t composition_count(std::int64_t n, std::size_t cells);

/// Calls visit(counts) for every composition of n into `cells` parts, in
/// lexicographic order of (η_1, …, η_N) descending in η_1.
void for_each_composition(std::int64_t n, std::size_t cells,
                          const std::function<void(std::span<const std::int64_t>)>& visit);

/// Multinomial pmf M(n, p) at counts. Exact in binary floating point for
/// small n with dyadic p (integer coefficient times products of p^η).
double multinomial_pmf(std::span<const std::int64_t> counts, std::span<const double> p);

}  // namespace gofslope
