#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "gofslope/errors.hpp"
#include "gofslope/rng.hpp"
#include "gofslope/statistics.hpp"

using namespace gofslope;

namespace {
const std::vector<double> kUniform4{0.25, 0.25, 0.25, 0.25};
const std::vector<double> kHalf{0.5, 0.5};
}  // namespace

TEST(ChiSquare, Examples) {
  EXPECT_DOUBLE_EQ(chi_square(GroupedCounts({2, 2, 2, 2}), kUniform4).value, 0.0);
  EXPECT_DOUBLE_EQ(chi_square(GroupedCounts({3, 1, 2, 2}), kUniform4).value, 1.0);
  EXPECT_DOUBLE_EQ(chi_square(GroupedCounts({4, 0}), kHalf).value, 4.0);
}

TEST(ChiSquare, Errors) {
  std::vector<double> zero{1.0, 0.0};
  EXPECT_THROW(chi_square(GroupedCounts({1, 1}), zero), InvalidArgument);
  EXPECT_THROW(chi_square(GroupedCounts({0, 0}), kHalf), InvalidArgument);
}

TEST(LogLikelihood, Examples) {
  EXPECT_NEAR(log_likelihood_ratio(GroupedCounts({2, 2, 2, 2}), kUniform4).value, 0.0, 1e-15);
  EXPECT_NEAR(log_likelihood_ratio(GroupedCounts({3, 1, 2, 2}), kUniform4).value,
              2 * (3 * std::log(1.5) + std::log(0.5)), 1e-12);
  EXPECT_NEAR(log_likelihood_ratio(GroupedCounts({3, 1, 2, 2}), kUniform4).value, 1.046496, 1e-6);
  EXPECT_NEAR(log_likelihood_ratio(GroupedCounts({4, 0}), kHalf).value, 8 * std::log(2.0), 1e-12);
}

TEST(HStatistic, BuiltinEquivalence) {
  GroupedCounts c({3, 1, 2, 2});
  EXPECT_NEAR(h_statistic(c, HFunction::chi_square()).value, 1.0, 1e-12);
  EXPECT_NEAR(h_statistic(c, HFunction::log_likelihood()).value, 1.046496, 1e-6);
  EXPECT_DOUBLE_EQ(h_statistic(GroupedCounts({4, 0}), HFunction::empty_cells()).value, 1.0);
}

TEST(HStatistic, RejectsLinearKernel) {
  HFunction linear("lin", [](double u, double) { return u; },
                   [](double) { return Envelope{1.0, 1}; }, true);
  EXPECT_THROW(h_statistic(GroupedCounts({1, 2}), linear), InvalidArgument);
  EXPECT_THROW(HFunction::by_name("nope"), InvalidArgument);
}

TEST(Standardize, Examples) {
  StatisticValue s{5.0, "chi2", 2, 4};
  EXPECT_DOUBLE_EQ(standardize(s, 5.0, 4.0), 0.0);
  EXPECT_DOUBLE_EQ(standardize(s, 3.0, 4.0), 1.0);
  auto chi = chi_square(GroupedCounts({4, 0}), kHalf);
  EXPECT_DOUBLE_EQ(standardize(chi, 1.0, 4.0), 1.5);
  EXPECT_THROW(standardize(s, 0.0, 0.0), InvalidArgument);
}

TEST(StatisticsProperty, NonNegativeAndKernelMatchesOnUniform) {
  Engine rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const int N = 2 + trial % 7;
    std::vector<std::int64_t> c(N);
    std::uniform_int_distribution<int> d(0, 9);
    for (auto& v : c) v = d(rng);
    c[0] += 1;
    GroupedCounts counts(c);
    std::vector<double> p(N, 1.0 / N);
    const double chi = chi_square(counts, p).value;
    const double lr = log_likelihood_ratio(counts, p).value;
    EXPECT_GE(chi, 0.0);
    EXPECT_GE(lr, -1e-12);
    const double via_h = h_statistic(counts, HFunction::chi_square()).value;
    EXPECT_NEAR(via_h, chi, 1e-12 * std::max(1.0, chi));
  }
}

TEST(StatisticsProperty, JointPermutationInvariance) {
  GroupedCounts a({5, 1, 0, 4});
  GroupedCounts b({0, 4, 5, 1});
  std::vector<double> pa{0.4, 0.1, 0.2, 0.3};
  std::vector<double> pb{0.2, 0.3, 0.4, 0.1};
  EXPECT_NEAR(chi_square(a, pa).value, chi_square(b, pb).value, 1e-12);
  EXPECT_NEAR(log_likelihood_ratio(a, pa).value, log_likelihood_ratio(b, pb).value, 1e-12);
}

TEST(StatisticsProperty, LocalEquivalenceOfLrAndChiSquare) {
  const std::vector<double> p{0.1, 0.2, 0.3, 0.4};
  const std::vector<double> v{1.0, -2.0, 3.0, -2.0};
  const double n = 100.0;
  double prev = 1e9;
  for (double t : {1e-2, 1e-3, 1e-4, 1e-5}) {
    std::vector<double> c(4);
    for (int m = 0; m < 4; ++m) c[m] = n * p[m] + t * v[m];
    const double ratio = log_likelihood_ratio(c, p) / chi_square(c, p);
    const double gap = std::abs(ratio - 1.0);
    EXPECT_LT(gap, prev);
    prev = gap;
  }
  EXPECT_LT(prev, 1e-3);
}
