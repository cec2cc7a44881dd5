#include <vector>

#include <gtest/gtest.h>

#include "gofslope/enumeration.hpp"
#include "gofslope/errors.hpp"

using namespace gofslope;

TEST(Compositions, CountMatchesEnumeration) {
  for (int n = 0; n <= 8; ++n) {
    for (std::size_t N = 1; N <= 5; ++N) {
      std::uint64_t seen = 0;
      for_each_composition(n, N, [&](std::span<const std::int64_t> eta) {
        std::int64_t s = 0;
        for (auto e : eta) s += e;
        EXPECT_EQ(s, n);
        ++seen;
      });
      EXPECT_EQ(seen, composition_count(n, N));
    }
  }
  EXPECT_EQ(composition_count(4, 2), 5u);
  EXPECT_EQ(composition_count(10, 4), 286u);
}

TEST(Compositions, OrderIsDescendingInFirstCell) {
  std::vector<std::vector<std::int64_t>> seen;
  for_each_composition(2, 3, [&](std::span<const std::int64_t> eta) {
    seen.emplace_back(eta.begin(), eta.end());
  });
  const std::vector<std::vector<std::int64_t>> expected{
      {2, 0, 0}, {1, 1, 0}, {1, 0, 1}, {0, 2, 0}, {0, 1, 1}, {0, 0, 2}};
  EXPECT_EQ(seen, expected);
}

TEST(MultinomialPmf, SumsToOneAndExactDyadic) {
  const std::vector<double> p{0.5, 0.5};
  const std::vector<std::int64_t> end{4, 0};
  EXPECT_EQ(multinomial_pmf(end, p), 1.0 / 16.0);
  const std::vector<double> q{0.2, 0.3, 0.5};
  double total = 0.0;
  for_each_composition(7, 3, [&](std::span<const std::int64_t> eta) { total += multinomial_pmf(eta, q); });
  EXPECT_NEAR(total, 1.0, 1e-14);
}
