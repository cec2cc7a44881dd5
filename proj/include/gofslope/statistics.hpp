#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>

#include "gofslope/envelope.hpp"
#include "gofslope/grouping.hpp"

namespace gofslope {

/// Cell score h(u; λ) defining S_N^h = Σ_m h(η_m).
///
/// The kernel receives λ = n/N explicitly so that kernels such as
/// (u − λ)²/λ carry no global state. `envelope(λ)` must dominate |h(k; λ)|
/// for integer k >= λ; it drives truncation of Poisson sums.
class HFunction {
 public:
  using Kernel = std::function<double(double u, double lambda)>;
  using EnvelopeFn = std::function<Envelope(double lambda)>;

  HFunction(std::string name, Kernel kernel, EnvelopeFn envelope, bool is_linear = false,
            bool cramer = false);

  /// (u − λ)²/λ: Pearson χ² under equal cells.
  static HFunction chi_square();
  /// 2u·ln(u/λ) with 0·ln 0 = 0: the log-likelihood ratio Λ under equal cells.
  static HFunction log_likelihood();
  /// 1{u = 0}: number of empty cells.
  static HFunction empty_cells();
  /// Looks up a built-in by name ("chi2", "lr", "empty"); throws on unknown names.
  static HFunction by_name(const std::string& name);

  double operator()(double u, double lambda) const { return kernel_(u, lambda); }
  Envelope envelope(double lambda) const { return envelope_(lambda); }
  const std::string& name() const { return name_; }
  bool is_linear() const { return is_linear_; }
  /// Declared to satisfy the exponential-moment (Cramér) condition on g(ξ).
  bool satisfies_cramer() const { return cramer_; }

 private:
  std::string name_;
  Kernel kernel_;
  EnvelopeFn envelope_;
  bool is_linear_;
  bool cramer_;
};

struct StatisticValue {
  double value = 0.0;
  std::string statistic;
  std::size_t cells = 0;
  std::int64_t sample_size = 0;
};

StatisticValue chi_square(const GroupedCounts& counts, std::span<const double> p);
StatisticValue log_likelihood_ratio(const GroupedCounts& counts, std::span<const double> p);
StatisticValue h_statistic(const GroupedCounts& counts, const HFunction& h);

// Real-valued ("relaxed") counts; total n is Σ counts.
double chi_square(std::span<const double> counts, std::span<const double> p);
double log_likelihood_ratio(std::span<const double> counts, std::span<const double> p);

/// (value − mean0)/√var0.
double standardize(const StatisticValue& s, double mean0, double var0);

}  // namespace gofslope
