#include "gofslope/enumeration.hpp"

#include <cmath>
#include <limits>
#include <vector>

#include "gofslope/errors.hpp"

namespace gofslope {

std::uint64_t composition_count(std::int64_t n, std::size_t cells) {
  if (cells == 0 || n < 0) return 0;
  // C(n + k, k) with k = cells − 1, multiplied incrementally (exact divisions).
  const std::uint64_t k = cells - 1;
  unsigned __int128 c = 1;
  for (std::uint64_t i = 1; i <= k; ++i) {
    c = c * (static_cast<std::uint64_t>(n) + i) / i;
    if (c > std::numeric_limits<std::uint64_t>::max()) {
      return std::numeric_limits<std::uint64_t>::max();
    }
  }
  return static_cast<std::uint64_t>(c);
}

void for_each_composition(std::int64_t n, std::size_t cells,
                          const std::function<void(std::span<const std::int64_t>)>& visit) {
  if (cells == 0) throw InvalidArgument("composition needs at least one cell");
  if (n < 0) throw InvalidArgument("composition of a negative total");
  std::vector<std::int64_t> eta(cells, 0);
  eta[0] = n;
  if (cells == 1) {
    visit(eta);
    return;
  }
  while (true) {
    visit(eta);
    // Move one unit from the rightmost non-zero non-last position to its right
    // neighbour, collecting everything in the last cell into that neighbour.
    std::size_t j = cells - 1;
    const std::int64_t tail = eta[j];
    eta[j] = 0;
    std::size_t i = cells - 2;
    while (true) {
      if (eta[i] > 0) break;
      if (i == 0) return;
      --i;
    }
    --eta[i];
    eta[i + 1] = tail + 1;
  }
}

double multinomial_pmf(std::span<const std::int64_t> counts, std::span<const double> p) {
  if (counts.size() != p.size()) throw InvalidArgument("pmf: counts/probabilities size mismatch");
  std::int64_t n = 0;
  for (auto c : counts) n += c;
  for (std::size_t m = 0; m < counts.size(); ++m) {
    if (counts[m] > 0 && p[m] <= 0.0) return 0.0;
  }
  if (n <= 20) {
    // n! / Π η! as an exact integer, then exact powers.
    unsigned __int128 coef = 1;
    std::int64_t placed = 0;
    for (auto c : counts) {
      for (std::int64_t j = 1; j <= c; ++j) {
        ++placed;
        coef = coef * static_cast<unsigned>(placed) / static_cast<unsigned>(j);
      }
    }
    double prob = static_cast<double>(coef);
    for (std::size_t m = 0; m < counts.size(); ++m) {
      for (std::int64_t j = 0; j < counts[m]; ++j) prob *= p[m];
    }
    return prob;
  }
  double log_p = std::lgamma(static_cast<double>(n) + 1.0);
  for (std::size_t m = 0; m < counts.size(); ++m) {
    log_p -= std::lgamma(static_cast<double>(counts[m]) + 1.0);
    if (counts[m] > 0) log_p += static_cast<double>(counts[m]) * std::log(p[m]);
  }
  return std::exp(log_p);
}

}  // namespace gofslope
