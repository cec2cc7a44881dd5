#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gofslope/alternatives.hpp"
#include "gofslope/statistics.hpp"

namespace gofslope {

/// log(1 − Φ(x)) approximations: −x²/2, or −x²/2 − ln(x√(2π)) when refined.
double normal_log_tail(double x, bool refined);

enum class Assertion { kA1, kA2, kA3, kA4, kA5, kNormal };

std::string to_string(Assertion a);
Assertion parse_assertion(const std::string& text);

struct TailApprox {
  double log_prob = 0.0;  // predicted log upper-tail probability
  double leading = 0.0;   // −x²/2
  double correction_bound = 0.0;
  Assertion assertion = Assertion::kNormal;
};

struct DomainCondition {
  std::string name;
  std::string relation;  // e.g. "x/N^(1/6) < theta"
  double margin = 0.0;
  bool pass = false;
};

struct DomainReport {
  Assertion assertion = Assertion::kNormal;
  std::vector<DomainCondition> conditions;
  bool pass() const;
};

struct TailApproxOptions {
  /// Finite-n proxy for a = o(b): a/b < theta; for a → ∞ relative to b: a/b > 1/theta.
  double theta = 0.3;
  /// Multiplier on the unit-constant O(·) terms.
  double multiplier = 1.0;
};

struct TailApproxResult {
  TailApprox approx;
  DomainReport domain;
};

/// log P{S > x√Var S + E S} per the cited large-deviation statement; the
/// O(·) remainder is reported as a bound, never folded into log_prob.
TailApproxResult tail_approx(Assertion assertion, double x, std::int64_t n, std::int64_t cells,
                             const TailApproxOptions& options = {});

/// Binomial KL divergence x log(x/p) + (1−x) log((1−x)/(1−p)).
double kl_binomial(double x, double p);

/// 0.8·(2πk(1 − k/n))^{−1/2}·exp{−n·g(k/n, p)}: a lower bound on P{Bi(n,p) = k}.
double binomial_point_lower_bound(std::int64_t k, std::int64_t n, double p);

enum class TestKind { kChiSquare, kLogLikelihood, kNeymanPearson, kGeneric };

std::string to_string(TestKind t);
TestKind parse_test_kind(const std::string& text);

enum class SlopeRegime { kExactQuarter, kRhoWeighted, kDegenerateO1, kNeymanPearson };

std::string to_string(SlopeRegime r);

struct SlopePrediction {
  std::string test;
  FamilyTag family;
  /// Predicted α-slope; empty for kDegenerateO1 where only o(nλδ⁴) is known.
  std::optional<double> value;
  std::optional<double> normalized;  // value / (nλδ⁴)
  SlopeRegime regime = SlopeRegime::kExactQuarter;
  std::optional<double> rho;
};

struct PredictionOptions {
  double strip_slack = 4.0;
  double theta = 0.3;
};

/// Theoretical α-slope of a test at (n, N, δ) in the given family.
/// `kernel` is required for kGeneric and ignored otherwise.
SlopePrediction predict_alpha_slope(TestKind test, const FamilyTag& family, std::int64_t n,
                                    std::int64_t cells, double delta,
                                    const HFunction* kernel = nullptr,
                                    const PredictionOptions& options = {});

enum class EfficiencyKind { kAreAlpha, kAie };

enum class LambdaRegime { kFixed, kGrowing };

struct EfficiencyQuery {
  EfficiencyKind kind = EfficiencyKind::kAreAlpha;
  FamilyTag family;
  double lambda = 1.0;
  LambdaRegime lambda_regime = LambdaRegime::kFixed;
  /// δ at the evaluation point; required to check δ = o(λ^{−1/2}) in J_BAR_1_8.
  std::optional<double> delta;
  /// Set when γ-strip membership was verified (J_GAMMA).
  bool strip_ok = false;
};

struct EfficiencyValue {
  enum class Kind { kValue, kZero, kUnbounded };
  Kind kind = Kind::kValue;
  double value = 0.0;
};

/// Efficiency of χ² relative to `second` (Λ or a Cramér-class h).
/// Throws OpenProblem for the unresolved fixed-λ regime and InvalidArgument for
/// unsupported combinations.
EfficiencyValue predict_efficiency(const EfficiencyQuery& query, const HFunction& second,
                                   const PredictionOptions& options = {});

}  // namespace gofslope
