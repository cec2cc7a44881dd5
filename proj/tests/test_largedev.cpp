#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "golden.hpp"
#include "gofslope/errors.hpp"
#include "gofslope/largedev.hpp"

using namespace gofslope;
using gofslope::testing::golden;

namespace {
const FamilyTag kJO{FamilyTag::Kind::kJO, 0.0};
const FamilyTag kSixth{FamilyTag::Kind::kJGamma, 1.0 / 6};
const FamilyTag kBar{FamilyTag::Kind::kJBar18, 0.0};

double exact_binom_pmf(int k, int n, double p) {
  return std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0) +
                  k * std::log(p) + (n - k) * std::log1p(-p));
}
}  // namespace

TEST(NormalLogTail, Examples) {
  EXPECT_DOUBLE_EQ(normal_log_tail(1.0, false), -0.5);
  EXPECT_NEAR(normal_log_tail(3.0, true), -4.5 - std::log(3 * std::sqrt(2 * std::numbers::pi)), 1e-14);
  EXPECT_NEAR(normal_log_tail(3.0, true), -6.51755, 1e-5);
  // The refined form overshoots the exact tail by about 1/x².
  EXPECT_NEAR(normal_log_tail(5.0, true), golden("normal.logsf.5"), 1.0 / 25);
  EXPECT_THROW(normal_log_tail(0.0, true), InvalidArgument);
}

TEST(TailApprox, A2Example) {
  TailApproxOptions opt;
  opt.theta = 1.0;
  auto r = tail_approx(Assertion::kA2, 2.0, 10000, 10000, opt);
  EXPECT_DOUBLE_EQ(r.approx.leading, -2.0);
  ASSERT_EQ(r.domain.conditions.size(), 1u);
  EXPECT_NEAR(r.domain.conditions[0].margin, 2.0 / std::cbrt(100.0), 1e-12);
  EXPECT_NEAR(r.domain.conditions[0].margin, 0.431, 1e-3);
  EXPECT_TRUE(r.domain.pass());
}

TEST(TailApprox, A4Margins) {
  auto r = tail_approx(Assertion::kA4, 5.0, 1000000, 100);
  bool saw_small = false, saw_large = false;
  for (const auto& c : r.domain.conditions) {
    if (c.name == "N = o(n^(1/2))") {
      EXPECT_NEAR(c.margin, 0.1, 1e-12);
      EXPECT_TRUE(c.pass);
      saw_small = true;
    }
    if (c.name == "x n^(1/2)/N^(3/2) -> infinity") {
      EXPECT_NEAR(c.margin, 5.0, 1e-12);
      saw_large = true;
    }
  }
  EXPECT_TRUE(saw_small && saw_large);
}

TEST(TailApprox, DomainViolationAndInvariants) {
  for (auto a : {Assertion::kA1, Assertion::kA2, Assertion::kA3, Assertion::kA4, Assertion::kA5}) {
    auto r = tail_approx(a, 10.0, 625, 25);
    EXPECT_FALSE(r.domain.pass()) << to_string(a);
    EXPECT_EQ(r.approx.leading, normal_log_tail(10.0, false));
    EXPECT_LE(r.approx.log_prob, 0.0);
    EXPECT_LE(std::abs(r.approx.log_prob - r.approx.leading), r.approx.correction_bound);
  }
  auto normal = tail_approx(Assertion::kNormal, 4.0, 100, 10);
  EXPECT_EQ(normal.approx.log_prob, normal_log_tail(4.0, true));
  EXPECT_LE(std::abs(normal.approx.log_prob - normal.approx.leading), normal.approx.correction_bound);
  EXPECT_THROW(tail_approx(Assertion::kA1, 0.5, 100, 10), InvalidArgument);
  EXPECT_THROW(parse_assertion("A9"), InvalidArgument);
  EXPECT_EQ(parse_assertion("A3"), Assertion::kA3);
}

TEST(TailApprox, MultiplierScalesCorrection) {
  TailApproxOptions twice;
  twice.multiplier = 2.0;
  auto a = tail_approx(Assertion::kA1, 3.0, 10000, 400);
  auto b = tail_approx(Assertion::kA1, 3.0, 10000, 400, twice);
  EXPECT_DOUBLE_EQ(b.approx.correction_bound, 2 * a.approx.correction_bound);
}

TEST(KlBinomial, Examples) {
  EXPECT_EQ(kl_binomial(0.3, 0.3), 0.0);
  EXPECT_NEAR(kl_binomial(0.5, 0.25), 0.5 * std::log(2.0) + 0.5 * std::log(2.0 / 3), 1e-15);
  EXPECT_NEAR(kl_binomial(0.5, 0.25), 0.143841, 1e-6);
  EXPECT_NEAR(kl_binomial(0.01, 0.5), golden("kl.0.01.0.5"), 1e-14);
  EXPECT_THROW(kl_binomial(0.0, 0.5), InvalidArgument);
  EXPECT_THROW(kl_binomial(0.5, 1.0), InvalidArgument);
}

TEST(KlBinomial, NonNegativeAndConvex) {
  for (double p : {0.05, 0.3, 0.5, 0.9}) {
    for (int i = 1; i < 98; ++i) {
      const double a = i / 100.0, b = (i + 2) / 100.0, m = (i + 1) / 100.0;
      EXPECT_GE(kl_binomial(a, p), 0.0);
      EXPECT_LE(kl_binomial(m, p), 0.5 * (kl_binomial(a, p) + kl_binomial(b, p)) + 1e-15);
    }
  }
}

TEST(BinomialBound, Examples) {
  EXPECT_LE(binomial_point_lower_bound(5, 10, 0.5), 0.246094);
  EXPECT_LE(binomial_point_lower_bound(2, 20, 0.1), 0.285180);
  EXPECT_NEAR(exact_binom_pmf(3, 10, 0.25), golden("binom.pmf.10.3.0.25"), 1e-14);
  EXPECT_THROW(binomial_point_lower_bound(0, 10, 0.5), InvalidArgument);
  EXPECT_THROW(binomial_point_lower_bound(10, 10, 0.5), InvalidArgument);
  double best = 0.0;
  int arg = 0;
  for (int k = 1; k < 40; ++k) {
    const double b = binomial_point_lower_bound(k, 40, 0.25);
    if (b > best) best = b, arg = k;
  }
  EXPECT_EQ(arg, 10);
}

TEST(BinomialBound, ExhaustiveDominance) {
  int violations = 0;
  for (int n = 2; n <= 50; ++n) {
    for (double p : {0.1, 0.25, 0.5}) {
      for (int k = 1; k < n; ++k) {
        if (binomial_point_lower_bound(k, n, p) > exact_binom_pmf(k, n, p)) ++violations;
      }
    }
  }
  EXPECT_EQ(violations, 0);
}

TEST(PredictAlphaSlope, Examples) {
  // δ = 1/16 is the γ = 1/6 schedule at (4096, 64), but N = 64 exceeds n^{3/8} ≈ 22.6,
  // so the point is only covered through the J_O tag.
  EXPECT_THROW(predict_alpha_slope(TestKind::kChiSquare, kSixth, 4096, 64, 1.0 / 16), InvalidArgument);
  auto chi = predict_alpha_slope(TestKind::kChiSquare, kJO, 4096, 64, 1.0 / 16);
  ASSERT_TRUE(chi.value);
  EXPECT_DOUBLE_EQ(*chi.value, 1.0);
  EXPECT_DOUBLE_EQ(*chi.normalized, 0.25);
  EXPECT_EQ(chi.regime, SlopeRegime::kExactQuarter);

  auto lr = predict_alpha_slope(TestKind::kLogLikelihood, kJO, 4096, 64, 1.0 / 16);
  const double rho = golden("lr.rho.64");
  EXPECT_NEAR(*lr.value, rho * rho, 1e-10);
  EXPECT_NEAR(*lr.value, 0.9948, 2e-4);
  EXPECT_EQ(lr.regime, SlopeRegime::kRhoWeighted);

  auto np = predict_alpha_slope(TestKind::kNeymanPearson, kSixth, 4096, 64, 1.0 / 16);
  EXPECT_DOUBLE_EQ(*np.value, 8.0);

  auto in_strip = predict_alpha_slope(TestKind::kChiSquare, kSixth, 1 << 24, 16, 0.01);
  EXPECT_EQ(in_strip.regime, SlopeRegime::kExactQuarter);
  EXPECT_DOUBLE_EQ(*in_strip.normalized, 0.25);
}

TEST(PredictAlphaSlope, RegimesAndRefusals) {
  auto bar = predict_alpha_slope(TestKind::kChiSquare, kBar, 1 << 16, 64, 0.05);
  EXPECT_EQ(bar.regime, SlopeRegime::kDegenerateO1);
  EXPECT_FALSE(bar.value.has_value());
  // λ δ²/√2 = 1024·0.25/√2 is far outside δ = o(λ^{-1/2}).
  EXPECT_THROW(predict_alpha_slope(TestKind::kLogLikelihood, kBar, 1 << 16, 64, 0.5), InvalidArgument);
  // n^{3/8} = 2^{7.5} < 4·N, outside the strip.
  EXPECT_THROW(predict_alpha_slope(TestKind::kChiSquare, kSixth, 1 << 20, 64, 0.01), InvalidArgument);
  FamilyTag pitman{FamilyTag::Kind::kPitman, 0.0};
  EXPECT_THROW(predict_alpha_slope(TestKind::kChiSquare, pitman, 4096, 64, 0.01), InvalidArgument);
  EXPECT_THROW(predict_alpha_slope(TestKind::kGeneric, kJO, 4096, 64, 0.01), InvalidArgument);
  auto empty = HFunction::empty_cells();
  auto h = predict_alpha_slope(TestKind::kGeneric, kJO, 4096, 4096, 0.01, &empty);
  EXPECT_EQ(h.regime, SlopeRegime::kRhoWeighted);
}

TEST(PredictAlphaSlope, ChiOverLrIsInverseRhoSquared) {
  for (std::int64_t N : {16, 64, 256}) {
    const std::int64_t n = 1 << 16;
    const double lambda = double(n) / N;
    const double delta = 0.1 / std::sqrt(lambda);
    auto chi = predict_alpha_slope(TestKind::kChiSquare, kJO, n, N, delta);
    auto lr = predict_alpha_slope(TestKind::kLogLikelihood, kJO, n, N, delta);
    EXPECT_NEAR(*chi.value / *lr.value, 1.0 / (*lr.rho * *lr.rho), 1e-12);
  }
}

TEST(PredictEfficiency, Examples) {
  const auto lr = HFunction::log_likelihood();
  EfficiencyQuery q;
  q.family = FamilyTag{FamilyTag::Kind::kJGamma, 0.15};
  q.lambda = 500;
  q.lambda_regime = LambdaRegime::kGrowing;
  q.strip_ok = true;
  auto one = predict_efficiency(q, lr);
  EXPECT_EQ(one.kind, EfficiencyValue::Kind::kValue);
  EXPECT_EQ(one.value, 1.0);

  q.family = kBar;
  q.kind = EfficiencyKind::kAie;
  q.delta = 0.001;
  EXPECT_EQ(predict_efficiency(q, lr).kind, EfficiencyValue::Kind::kZero);

  q.family = kJO;
  q.lambda = 50;
  const double rho = golden("lr.rho.50");
  EXPECT_NEAR(predict_efficiency(q, lr).value, 1 / (rho * rho), 1e-10);
  EXPECT_NEAR(predict_efficiency(q, lr).value, 1.0068, 1e-4);
}

TEST(PredictEfficiency, OpenProblemAndInvariance) {
  const auto lr = HFunction::log_likelihood();
  EfficiencyQuery q;
  q.family = kSixth;
  q.lambda = 1.0;
  q.lambda_regime = LambdaRegime::kFixed;
  q.strip_ok = true;
  EXPECT_THROW(predict_efficiency(q, lr), OpenProblem);
  q.family = kBar;
  EXPECT_THROW(predict_efficiency(q, lr), OpenProblem);
  q.family = FamilyTag{FamilyTag::Kind::kPitman, 0};
  EXPECT_THROW(predict_efficiency(q, lr), InvalidArgument);

  EfficiencyQuery a;
  a.family = kJO;
  a.lambda = 64;
  EfficiencyQuery b = a;
  b.delta = 0.02;
  b.lambda_regime = LambdaRegime::kGrowing;
  EXPECT_EQ(predict_efficiency(a, lr).value, predict_efficiency(b, lr).value);
}
