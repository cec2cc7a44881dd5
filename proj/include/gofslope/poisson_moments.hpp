#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <mutex>
#include <shared_mutex>
#include <string>
#include <tuple>

#include "gofslope/envelope.hpp"
#include "gofslope/statistics.hpp"

namespace gofslope {

/// Truncated Poisson expectation Σ_{k<=K} f(k)·e^{−λ}λ^k/k!.
struct PoissonSum {
  double value = 0.0;
  std::int64_t truncation = 0;  // K, last index summed
  double tail_bound = 0.0;      // bound on the neglected Σ_{k>K} |f(k)| P(ξ = k)
};

/// Smallest K >= ⌈λ + 12√λ + 40⌉ whose envelope tail bound is below tol.
/// Returns {K, bound}; throws if the envelope is not usable.
std::pair<std::int64_t, double> poisson_truncation(double lambda, const Envelope& env, double tol);

PoissonSum poisson_expectation(const std::function<double(std::int64_t)>& f, double lambda,
                               double tol, const Envelope& env);

/// Poisson-moment bundle of a kernel h at ξ ~ Poi(λ).
///
/// With u = ξ − λ and γ = cov(h(ξ), ξ)/λ, the residual kernel is
/// g(ξ) = h(ξ) − Eh(ξ) − γu, σ² = Var g(ξ), and
/// ρ = corr(g(ξ), ξ² − (2λ+1)ξ). All sums are centred at λ.
struct MomentSummary {
  double lambda = 0.0;
  double Eh = 0.0;
  double gamma_coef = 0.0;
  double sigma2 = 0.0;
  double rho = 0.0;
  double L3N = 0.0;  // E|g|³/(σ³√N); zero when N is not given
  double var_h = 0.0;
  double corr_h_xi = 0.0;
  double abs_third_g = 0.0;  // E|g(ξ)|³
  std::int64_t truncation_bound = 0;
  double tail_mass_bound = 0.0;

  /// σ² reassembled as Var h·(1 − corr²(h, ξ)).
  double sigma2_from_correlation() const { return var_h * (1.0 - corr_h_xi * corr_h_xi); }
};

/// Throws InvalidArgument when h is linear or σ² vanishes.
MomentSummary moment_summary(const HFunction& h, double lambda, std::int64_t cells = 0,
                             double tol = 1e-12);

/// Thread-safe memo of moment_summary keyed by (kernel name, λ, tol).
/// Concurrent lookups share a read lock; inserts take the write lock.
class MomentCache {
 public:
  MomentSummary get(const HFunction& h, double lambda, std::int64_t cells = 0, double tol = 1e-12);
  std::size_t size() const;

 private:
  mutable std::shared_mutex mutex_;
  std::map<std::tuple<std::string, double, double>, MomentSummary> entries_;
};

MomentCache& default_moment_cache();

enum class MomentMode { kPoissonApprox, kExact };

struct NullMoments {
  double mean = 0.0;
  double var = 0.0;
  bool exact = false;
  bool degenerate = false;  // N = 1: the statistic is deterministic
};

/// Null mean and variance of S_N^h under equal cells.
///
/// kPoissonApprox returns (N·Eh, N·σ²(h)); kExact enumerates the multinomial
/// and is only allowed for n <= 12, N <= 5.
NullMoments null_moments(const HFunction& h, std::int64_t n, std::int64_t cells,
                         MomentMode mode = MomentMode::kPoissonApprox);

inline constexpr std::int64_t kExactMaxSample = 12;
inline constexpr std::int64_t kExactMaxCells = 5;

/// Leading standardized shift √(nλ/2)·δ²·ρ(h, λ).
double shift_xn(const HFunction& h, std::int64_t n, std::int64_t cells, double delta);
/// Contrast-weighted variant √(nλ/2)·δ²·d², d² = N⁻¹ Σ d_m².
double shift_xn_contrast(std::int64_t n, std::int64_t cells, double delta, double d2);

/// L_{3,N}; values below kLyapunovCltThreshold are treated as the CLT regime.
double lyapunov_check(const HFunction& h, std::int64_t n, std::int64_t cells);
inline constexpr double kLyapunovCltThreshold = 0.1;

}  // namespace gofslope
