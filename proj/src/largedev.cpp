#include "gofslope/largedev.hpp"

#include <cmath>
#include <numbers>

#include "gofslope/errors.hpp"
#include "gofslope/poisson_moments.hpp"

namespace gofslope {
namespace {

DomainCondition small_ratio(std::string name, std::string relation, double ratio, double theta) {
  return {std::move(name), std::move(relation), ratio, ratio < theta};
}

DomainCondition large_ratio(std::string name, std::string relation, double ratio, double theta) {
  return {std::move(name), std::move(relation), ratio, ratio > 1.0 / theta};
}

void check_point(std::int64_t n, std::int64_t cells, double delta) {
  if (n < 1 || cells < 1) throw InvalidArgument("prediction needs n >= 1 and N >= 1");
  if (!(delta >= 0.0) || !std::isfinite(delta)) throw InvalidArgument("delta must be >= 0");
}

// x_n/√N for the leading shift; equals λδ²ρ/√2, the finite-n proxy of δ = o(λ^{−1/2}).
double shift_to_root_cells(double lambda, double delta) {
  return lambda * delta * delta / std::numbers::sqrt2;
}

}  // namespace

double normal_log_tail(double x, bool refined) {
  if (!(x > 0.0)) throw InvalidArgument("normal tail argument must be positive");
  const double lead = -0.5 * x * x;
  if (!refined) return lead;
  return lead - std::log(x * std::sqrt(2.0 * std::numbers::pi));
}

std::string to_string(Assertion a) {
  switch (a) {
    case Assertion::kA1: return "A1";
    case Assertion::kA2: return "A2";
    case Assertion::kA3: return "A3";
    case Assertion::kA4: return "A4";
    case Assertion::kA5: return "A5";
    case Assertion::kNormal: return "NORMAL";
  }
  return "?";
}

Assertion parse_assertion(const std::string& text) {
  if (text == "A1") return Assertion::kA1;
  if (text == "A2") return Assertion::kA2;
  if (text == "A3") return Assertion::kA3;
  if (text == "A4") return Assertion::kA4;
  if (text == "A5") return Assertion::kA5;
  if (text == "NORMAL") return Assertion::kNormal;
  throw InvalidArgument("unknown assertion id '" + text + "'");
}

bool DomainReport::pass() const {
  for (const auto& c : conditions) {
    if (!c.pass) return false;
  }
  return true;
}

TailApproxResult tail_approx(Assertion assertion, double x, std::int64_t n, std::int64_t cells,
                             const TailApproxOptions& options) {
  if (!(x > 1.0)) throw InvalidArgument("tail approximation needs x > 1");
  if (n < 1 || cells < 1) throw InvalidArgument("tail approximation needs n >= 1 and N >= 1");
  const double theta = options.theta;
  const double nd = static_cast<double>(n);
  const double Nd = static_cast<double>(cells);
  const double lambda = nd / Nd;
  const double root_n = std::sqrt(nd);
  const double root_cells = std::sqrt(Nd);
  const double cells_32 = Nd * root_cells;

  TailApproxResult r;
  r.approx.assertion = assertion;
  r.domain.assertion = assertion;
  r.approx.leading = normal_log_tail(x, false);
  r.approx.log_prob = r.approx.leading;
  double correction = 0.0;
  auto& conds = r.domain.conditions;

  switch (assertion) {
    case Assertion::kA1:
      correction = std::log(x) + x * x * x / root_cells;
      conds.push_back(small_ratio("x = o(N^(1/2))", "x/N^(1/2) < theta", x / root_cells, theta));
      break;
    case Assertion::kA2: {
      correction = std::log(x);
      const double scale = std::cbrt(root_cells * std::min(1.0, lambda * lambda));
      conds.push_back(small_ratio("x = o((N^(1/2) min(1, lambda^2))^(1/3))",
                                  "x/(N^(1/2) min(1, lambda^2))^(1/3) < theta", x / scale, theta));
      break;
    }
    case Assertion::kA3:
      correction = std::log(x);
      conds.push_back(small_ratio("lambda -> infinity", "1/lambda < theta", 1.0 / lambda, theta));
      conds.push_back(
          small_ratio("x = o(N^(1/6))", "x/N^(1/6) < theta", x / std::pow(Nd, 1.0 / 6.0), theta));
      break;
    case Assertion::kA4:
      correction = x * x * x / root_cells + std::log(Nd) + x * cells_32 / root_n;
      conds.push_back(small_ratio("N = o(n^(1/2))", "N/n^(1/2) < theta", Nd / root_n, theta));
      conds.push_back(small_ratio("x = o(N^(1/2))", "x/N^(1/2) < theta", x / root_cells, theta));
      conds.push_back(large_ratio("x n^(1/2)/N^(3/2) -> infinity", "x n^(1/2)/N^(3/2) > 1/theta",
                                  x * root_n / cells_32, theta));
      break;
    case Assertion::kA5:
      correction = x * x * x / root_cells + std::log(Nd) + cells_32 / root_n;
      conds.push_back(small_ratio("lambda -> infinity", "1/lambda < theta", 1.0 / lambda, theta));
      conds.push_back(small_ratio("x = o(N^(1/2))", "x/N^(1/2) < theta", x / root_cells, theta));
      break;
    case Assertion::kNormal: {
      const double shift = std::log(x * std::sqrt(2.0 * std::numbers::pi));
      r.approx.log_prob = normal_log_tail(x, true);
      // Mills-ratio bounds put log(1 − Φ(x)) within log(1 + 1/x²) of the refined value.
      correction = std::abs(shift) + std::log1p(1.0 / (x * x));
      conds.push_back({"x > 0", "x > 0", x, true});
      break;
    }
  }
  r.approx.correction_bound = options.multiplier * correction;
  return r;
}

double kl_binomial(double x, double p) {
  if (!(x > 0.0 && x < 1.0) || !(p > 0.0 && p < 1.0)) {
    throw InvalidArgument("kl_binomial needs x and p strictly inside (0,1)");
  }
  return x * std::log(x / p) + (1.0 - x) * std::log((1.0 - x) / (1.0 - p));
}

double binomial_point_lower_bound(std::int64_t k, std::int64_t n, double p) {
  if (!(k > 0 && k < n)) throw InvalidArgument("binomial bound needs 0 < k < n");
  const double x = static_cast<double>(k) / static_cast<double>(n);
  const double spread = 2.0 * std::numbers::pi * static_cast<double>(k) * (1.0 - x);
  return 0.8 / std::sqrt(spread) * std::exp(-static_cast<double>(n) * kl_binomial(x, p));
}

std::string to_string(TestKind t) {
  switch (t) {
    case TestKind::kChiSquare: return "chi2";
    case TestKind::kLogLikelihood: return "lr";
    case TestKind::kNeymanPearson: return "np";
    case TestKind::kGeneric: return "h";
  }
  return "?";
}

TestKind parse_test_kind(const std::string& text) {
  if (text == "chi2") return TestKind::kChiSquare;
  if (text == "lr") return TestKind::kLogLikelihood;
  if (text == "np") return TestKind::kNeymanPearson;
  return TestKind::kGeneric;
}

std::string to_string(SlopeRegime r) {
  switch (r) {
    case SlopeRegime::kExactQuarter: return "EXACT_QUARTER";
    case SlopeRegime::kRhoWeighted: return "RHO_WEIGHTED";
    case SlopeRegime::kDegenerateO1: return "DEGENERATE_o1";
    case SlopeRegime::kNeymanPearson: return "NEYMAN_PEARSON";
  }
  return "?";
}

SlopePrediction predict_alpha_slope(TestKind test, const FamilyTag& family, std::int64_t n,
                                    std::int64_t cells, double delta, const HFunction* kernel,
                                    const PredictionOptions& options) {
  check_point(n, cells, delta);
  using K = FamilyTag::Kind;
  const double nd = static_cast<double>(n);
  const double lambda = nd / static_cast<double>(cells);
  const double base = nd * lambda * std::pow(delta, 4);

  SlopePrediction out;
  out.family = family;
  out.test = to_string(test);
  auto set_value = [&](double v) {
    out.value = v;
    if (base > 0.0) out.normalized = v / base;
  };

  switch (test) {
    case TestKind::kNeymanPearson:
      out.regime = SlopeRegime::kNeymanPearson;
      set_value(nd * delta * delta / 2.0);
      return out;

    case TestKind::kChiSquare:
      out.rho = 1.0;
      if (family.kind == K::kJO) {
        out.regime = SlopeRegime::kExactQuarter;
        set_value(base / 4.0);
        return out;
      }
      if (family.kind == K::kJGamma) {
        const auto strip = strip_condition(family.gamma, n, cells, options.strip_slack);
        if (!strip.inside) {
          throw InvalidArgument("chi2 slope in " + to_string(family) +
                                " needs (n, N) inside the strip; margins " +
                                std::to_string(strip.lower_margin) + ", " +
                                std::to_string(strip.upper_margin));
        }
        out.regime = SlopeRegime::kExactQuarter;
        set_value(base / 4.0);
        return out;
      }
      if (family.kind == K::kJBar18) {
        out.regime = SlopeRegime::kDegenerateO1;
        return out;
      }
      throw InvalidArgument("no chi2 alpha-slope result for family " + to_string(family));

    case TestKind::kLogLikelihood: {
      if (!family.intermediate()) {
        throw InvalidArgument("no LR alpha-slope result for family " + to_string(family));
      }
      const double margin = shift_to_root_cells(lambda, delta);
      if (!(margin < options.theta)) {
        throw InvalidArgument("LR slope requires delta = o(lambda^(-1/2)); lambda*delta^2/sqrt2 = " +
                              std::to_string(margin));
      }
      const double rho = default_moment_cache().get(HFunction::log_likelihood(), lambda).rho;
      out.rho = rho;
      out.regime = SlopeRegime::kRhoWeighted;
      set_value(base * rho * rho / 4.0);
      return out;
    }

    case TestKind::kGeneric: {
      if (kernel == nullptr) throw InvalidArgument("generic h prediction needs a kernel");
      if (!kernel->satisfies_cramer()) {
        throw InvalidArgument("generic h prediction needs a Cramer-class kernel");
      }
      if (family.kind != K::kJO) {
        throw InvalidArgument("generic h slopes are available only in J_O");
      }
      const double rho = default_moment_cache().get(*kernel, lambda).rho;
      out.test = kernel->name();
      out.rho = rho;
      out.regime = SlopeRegime::kRhoWeighted;
      set_value(base * rho * rho / 4.0);
      return out;
    }
  }
  throw InvalidArgument("unknown test");
}

EfficiencyValue predict_efficiency(const EfficiencyQuery& query, const HFunction& second,
                                   const PredictionOptions& options) {
  using K = FamilyTag::Kind;
  if (!(query.lambda > 0.0)) throw InvalidArgument("efficiency needs lambda > 0");
  const bool is_lr = second.name() == "lr";
  if (!is_lr && !second.satisfies_cramer()) {
    throw InvalidArgument("efficiency of chi2 is available against LR or Cramer-class h only");
  }
  const bool fixed_lambda = query.lambda_regime == LambdaRegime::kFixed;

  switch (query.family.kind) {
    case K::kJO: {
      if (!is_lr && !fixed_lambda) {
        throw InvalidArgument("chi2 vs generic h is covered only for fixed lambda in J_O");
      }
      const double rho = default_moment_cache().get(second, query.lambda).rho;
      return {EfficiencyValue::Kind::kValue, 1.0 / (rho * rho)};
    }
    case K::kJGamma:
    case K::kJBar18: {
      if (fixed_lambda) {
        throw OpenProblem(
            "chi2 vs LR efficiency with fixed lambda and delta >= n^(-1/6) is an open problem");
      }
      if (!is_lr) throw InvalidArgument("outside J_O only chi2 vs LR is covered");
      if (query.family.kind == K::kJGamma) {
        if (!query.strip_ok) throw InvalidArgument("J_GAMMA efficiency needs the strip condition");
        return {EfficiencyValue::Kind::kValue, 1.0};
      }
      if (!query.delta) throw InvalidArgument("J_BAR_1_8 efficiency needs delta");
      const double margin = shift_to_root_cells(query.lambda, *query.delta);
      if (!(margin < options.theta)) {
        throw InvalidArgument("J_BAR_1_8 efficiency needs delta = o(lambda^(-1/2))");
      }
      return {EfficiencyValue::Kind::kZero, 0.0};
    }
    default:
      throw InvalidArgument("no efficiency result for family " + to_string(query.family));
  }
}

}  // namespace gofslope
