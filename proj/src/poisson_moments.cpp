#include "gofslope/poisson_moments.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "gofslope/enumeration.hpp"
#include "gofslope/errors.hpp"

namespace gofslope {
namespace {

double log_poisson_pmf(std::int64_t k, double lambda) {
  const double kd = static_cast<double>(k);
  return -lambda + kd * std::log(lambda) - std::lgamma(kd + 1.0);
}

void check_lambda(double lambda) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw InvalidArgument("Poisson mean must be positive and finite");
  }
}

// Bound on Σ_{k>K} env(k) P(ξ = k) by a geometric series; requires K >= λ.
double envelope_tail(double lambda, const Envelope& env, std::int64_t K) {
  const double k1 = static_cast<double>(K) + 1.0;
  const double q = lambda / (k1 + 1.0) * std::pow((k1 + 2.0) / (k1 + 1.0), env.degree);
  if (q >= 1.0) return std::numeric_limits<double>::infinity();
  return env(k1) * std::exp(log_poisson_pmf(K + 1, lambda)) / (1.0 - q);
}

std::vector<double> poisson_weights(double lambda, std::int64_t K) {
  std::vector<double> w(static_cast<std::size_t>(K) + 1);
  for (std::int64_t k = 0; k <= K; ++k) w[static_cast<std::size_t>(k)] = std::exp(log_poisson_pmf(k, lambda));
  return w;
}

struct RawMoments {
  long double eh = 0, cov_hu = 0, var_h = 0, var_u = 0;
};

}  // namespace

std::pair<std::int64_t, double> poisson_truncation(double lambda, const Envelope& env, double tol) {
  check_lambda(lambda);
  if (!(tol > 0.0)) throw InvalidArgument("tolerance must be positive");
  if (!std::isfinite(env.scale) || env.scale < 0.0 || env.degree < 0 || env.degree > 64) {
    throw InvalidArgument("envelope must have finite non-negative scale and degree in [0, 64]");
  }
  const double root = std::sqrt(lambda);
  auto K = static_cast<std::int64_t>(std::ceil(lambda + 12.0 * root + 40.0));
  const auto step = std::max<std::int64_t>(8, static_cast<std::int64_t>(std::ceil(root)));
  const double limit = lambda + 1e4 * (root + 10.0);
  while (true) {
    const double bound = envelope_tail(lambda, env, K);
    if (bound < tol) return {K, bound};
    K += step;
    if (static_cast<double>(K) > limit) {
      throw NumericalFailure("Poisson truncation did not converge for the supplied envelope");
    }
  }
}

PoissonSum poisson_expectation(const std::function<double(std::int64_t)>& f, double lambda,
                               double tol, const Envelope& env) {
  const auto [K, bound] = poisson_truncation(lambda, env, tol);
  long double acc = 0;
  for (std::int64_t k = 0; k <= K; ++k) {
    const double w = std::exp(log_poisson_pmf(k, lambda));
    if (w == 0.0) continue;
    acc += static_cast<long double>(w) * f(k);
  }
  return {static_cast<double>(acc), K, bound};
}

MomentSummary moment_summary(const HFunction& h, double lambda, std::int64_t cells, double tol) {
  check_lambda(lambda);
  if (h.is_linear()) throw InvalidArgument("moment summary undefined for linear h");

  const Envelope env_h = h.envelope(lambda);
  const Envelope env_u = Envelope::centered_count();

  // First pass: Eh and γ, needed to build the envelope of g.
  auto [k1, b1] = poisson_truncation(lambda, env_h * env_h + env_h * env_u, tol);
  RawMoments first;
  {
    const auto w = poisson_weights(lambda, k1);
    for (std::int64_t k = 0; k <= k1; ++k) first.eh += w[k] * h(static_cast<double>(k), lambda);
    for (std::int64_t k = 0; k <= k1; ++k) {
      first.cov_hu += w[k] * (h(static_cast<double>(k), lambda) - first.eh) *
                      (static_cast<double>(k) - lambda);
    }
  }
  const double eh0 = static_cast<double>(first.eh);
  const double gamma0 = static_cast<double>(first.cov_hu) / lambda;

  const Envelope env_g = env_h + Envelope::constant(eh0) + std::abs(gamma0) * env_u;
  const Envelope env_q{2.0 + lambda, 2};
  const Envelope combined{
      std::max({env_g.scale * env_g.scale * env_g.scale, env_g.scale * env_q.scale,
                env_q.scale * env_q.scale, env_h.scale * env_h.scale, env_h.scale, 1.0}),
      std::max({3 * env_g.degree, env_g.degree + 2, 4, 2 * env_h.degree})};
  const auto [K, bound] = poisson_truncation(lambda, combined, tol);

  const auto w = poisson_weights(lambda, K);
  std::vector<double> hv(w.size());
  for (std::size_t k = 0; k < w.size(); ++k) hv[k] = h(static_cast<double>(k), lambda);

  long double eh = 0, eq = 0;
  for (std::size_t k = 0; k < w.size(); ++k) {
    const double u = static_cast<double>(k) - lambda;
    eh += w[k] * hv[k];
    eq += w[k] * (u * u - u - lambda);
  }
  long double cov_hu = 0, var_h = 0, var_u = 0;
  for (std::size_t k = 0; k < w.size(); ++k) {
    const double u = static_cast<double>(k) - lambda;
    const long double ch = hv[k] - eh;
    cov_hu += w[k] * ch * u;
    var_h += w[k] * ch * ch;
    var_u += w[k] * u * u;
  }
  const long double gamma = cov_hu / lambda;
  long double var_g = 0, var_q = 0, cov_gq = 0, abs3 = 0;
  for (std::size_t k = 0; k < w.size(); ++k) {
    const double u = static_cast<double>(k) - lambda;
    const long double g = (hv[k] - eh) - gamma * u;
    const long double q = (u * u - u - lambda) - eq;
    var_g += w[k] * g * g;
    var_q += w[k] * q * q;
    cov_gq += w[k] * g * q;
    abs3 += w[k] * std::abs(g) * g * g;
  }

  MomentSummary s;
  s.lambda = lambda;
  s.Eh = static_cast<double>(eh);
  s.gamma_coef = static_cast<double>(gamma);
  s.sigma2 = static_cast<double>(var_g);
  s.var_h = static_cast<double>(var_h);
  s.corr_h_xi = static_cast<double>(cov_hu / std::sqrt(var_h * lambda));
  s.abs_third_g = static_cast<double>(abs3);
  s.truncation_bound = K;
  s.tail_mass_bound = std::max(bound, b1);
  if (!(s.sigma2 > 1e-14 * std::max(1.0L, var_h))) {
    throw InvalidArgument("sigma^2(h) vanishes: '" + h.name() + "' is linear in effect at this lambda");
  }
  s.rho = std::clamp(static_cast<double>(cov_gq / std::sqrt(var_g * var_q)), -1.0, 1.0);
  if (cells > 0) {
    s.L3N = s.abs_third_g / (std::pow(s.sigma2, 1.5) * std::sqrt(static_cast<double>(cells)));
  }
  return s;
}

MomentSummary MomentCache::get(const HFunction& h, double lambda, std::int64_t cells, double tol) {
  const auto key = std::make_tuple(h.name(), lambda, tol);
  auto with_cells = [cells](MomentSummary s) {
    s.L3N = cells > 0 ? s.abs_third_g / (std::pow(s.sigma2, 1.5) *
                                         std::sqrt(static_cast<double>(cells)))
                      : 0.0;
    return s;
  };
  {
    std::shared_lock lock(mutex_);
    if (auto it = entries_.find(key); it != entries_.end()) return with_cells(it->second);
  }
  MomentSummary fresh = moment_summary(h, lambda, 0, tol);
  {
    std::unique_lock lock(mutex_);
    entries_.emplace(key, fresh);
  }
  return with_cells(fresh);
}

std::size_t MomentCache::size() const {
  std::shared_lock lock(mutex_);
  return entries_.size();
}

MomentCache& default_moment_cache() {
  static MomentCache cache;
  return cache;
}

NullMoments null_moments(const HFunction& h, std::int64_t n, std::int64_t cells, MomentMode mode) {
  if (n < 1 || cells < 1) throw InvalidArgument("null moments need n >= 1 and N >= 1");
  const double lambda = static_cast<double>(n) / static_cast<double>(cells);
  if (cells == 1) {
    return {h(static_cast<double>(n), lambda), 0.0, true, true};
  }
  if (mode == MomentMode::kPoissonApprox) {
    const auto s = default_moment_cache().get(h, lambda);
    return {static_cast<double>(cells) * s.Eh, static_cast<double>(cells) * s.sigma2, false, false};
  }
  if (n > kExactMaxSample || cells > kExactMaxCells) {
    throw InvalidArgument("exact null moments limited to n <= 12, N <= 5");
  }
  const std::vector<double> p(static_cast<std::size_t>(cells), 1.0 / static_cast<double>(cells));
  long double m1 = 0, m2 = 0;
  for_each_composition(n, static_cast<std::size_t>(cells), [&](std::span<const std::int64_t> eta) {
    const double w = multinomial_pmf(eta, p);
    double s = 0.0;
    for (auto c : eta) s += h(static_cast<double>(c), lambda);
    m1 += w * s;
    m2 += w * s * s;
  });
  return {static_cast<double>(m1), static_cast<double>(m2 - m1 * m1), true, false};
}

double shift_xn(const HFunction& h, std::int64_t n, std::int64_t cells, double delta) {
  if (n < 1 || cells < 1) throw InvalidArgument("shift needs n >= 1 and N >= 1");
  if (delta == 0.0) return 0.0;
  const double lambda = static_cast<double>(n) / static_cast<double>(cells);
  const double rho = default_moment_cache().get(h, lambda).rho;
  return std::sqrt(static_cast<double>(n) * lambda / 2.0) * delta * delta * rho;
}

double shift_xn_contrast(std::int64_t n, std::int64_t cells, double delta, double d2) {
  if (n < 1 || cells < 1) throw InvalidArgument("shift needs n >= 1 and N >= 1");
  const double lambda = static_cast<double>(n) / static_cast<double>(cells);
  return std::sqrt(static_cast<double>(n) * lambda / 2.0) * delta * delta * d2;
}

double lyapunov_check(const HFunction& h, std::int64_t n, std::int64_t cells) {
  if (n < 1 || cells < 1) throw InvalidArgument("Lyapunov ratio needs n >= 1 and N >= 1");
  const double lambda = static_cast<double>(n) / static_cast<double>(cells);
  return default_moment_cache().get(h, lambda, cells).L3N;
}

}  // namespace gofslope
