#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace gofslope {

/// Bounded direction l on [0,1] with ∫l = 0 and ∫l² = 1.
class DirectionFunction {
 public:
  /// √2·cos(2πkx), k >= 1; sup-norm √2.
  static DirectionFunction cosine(int k);
  /// Arbitrary direction; the integral constraints are verified by quadrature.
  static DirectionFunction custom(std::string name, std::function<double(double)> fn,
                                  double sup_bound);

  double operator()(double x) const { return fn_(x); }
  double sup_bound() const { return sup_bound_; }
  const std::string& name() const { return name_; }
  /// Cosine frequency, or 0 for custom directions.
  int frequency() const { return frequency_; }

 private:
  DirectionFunction(std::string name, std::function<double(double)> fn, double sup_bound, int k);

  std::string name_;
  std::function<double(double)> fn_;
  double sup_bound_;
  int frequency_;
};

/// δ(n) schedule: power law (nλ²)^{−γ}, Pitman rate (nλ)^{−1/4}, a constant,
/// or an explicit table keyed by n.
class DeltaSchedule {
 public:
  enum class Kind { kPowerLaw, kPitman, kConstant, kExplicit };

  static DeltaSchedule power_law(double gamma);
  static DeltaSchedule pitman();
  static DeltaSchedule constant(double delta);
  static DeltaSchedule explicit_values(std::vector<std::pair<std::int64_t, double>> values);

  Kind kind() const { return kind_; }
  std::optional<double> gamma() const { return gamma_; }
  const std::vector<std::pair<std::int64_t, double>>& values() const { return values_; }

 private:
  Kind kind_ = Kind::kConstant;
  std::optional<double> gamma_;
  std::vector<std::pair<std::int64_t, double>> values_;
};

/// Alternative density f_n = 1 + δ(n)·l, or a direct cell contrast
/// p_m = N⁻¹(1 + δ(n)·d_m) with Σ d_m = 0.
class AlternativeSpec {
 public:
  AlternativeSpec(DirectionFunction direction, DeltaSchedule schedule);
  AlternativeSpec(std::vector<double> contrast, DeltaSchedule schedule);

  bool is_contrast() const { return !direction_.has_value(); }
  const DirectionFunction& direction() const;
  std::span<const double> contrast() const { return contrast_; }
  const DeltaSchedule& schedule() const { return schedule_; }

 private:
  std::optional<DirectionFunction> direction_;
  std::vector<double> contrast_;
  DeltaSchedule schedule_;
};

struct FamilyTag {
  enum class Kind { kUndetectable, kPitman, kJO, kJGamma, kJBar18, kFixed };
  Kind kind = Kind::kUndetectable;
  double gamma = 0.0;  // meaningful for kJGamma

  bool intermediate() const {
    return kind == Kind::kJO || kind == Kind::kJGamma || kind == Kind::kJBar18;
  }
  friend bool operator==(const FamilyTag&, const FamilyTag&) = default;
};

std::string to_string(const FamilyTag& tag);
/// Inverse of to_string ("J_GAMMA(0.15)" etc.).
FamilyTag parse_family(const std::string& text);

double delta_value(const DeltaSchedule& schedule, std::int64_t n, std::int64_t cells);

/// δ at n for density-route callers; `cells` is required (> 0) when the
/// schedule depends on N (power law, Pitman) and ignored otherwise.
double density_delta(const AlternativeSpec& spec, std::int64_t n, std::int64_t cells = 0);

/// 1 + δ(n)·l(x); throws if δ·sup|l| > 1.
double eval_density(const AlternativeSpec& spec, std::int64_t n, double x, std::int64_t cells = 0);

/// Cell masses of the alternative (adaptive Simpson, 1e-12 per cell).
std::vector<double> cell_probabilities(const AlternativeSpec& spec, std::int64_t n,
                                       std::int64_t cells);

/// N⁻¹ Σ (N p_m − 1)².
double epsilon_contrast(std::span<const double> p);

/// Adaptive Simpson quadrature with absolute tolerance `tol`.
double integrate(const std::function<double(double)>& f, double a, double b, double tol);

/// Trend-based classification along an increasing grid (>= 3 points).
/// Throws Unclassified when no rule applies cleanly.
FamilyTag classify_family(const DeltaSchedule& schedule, std::span<const std::int64_t> n_grid,
                          const std::function<std::int64_t(std::int64_t)>& cells_of_n);

inline constexpr double kTrendFactor = 1.05;

struct StripReport {
  double gamma = 0.0;
  double lower_exponent = 0.0;  // (1 − 6γ)/(1 − 4γ)
  double upper_exponent = 0.0;  // 3(1 − 4γ)/(4(1 − 2γ))
  double lower_bound = 0.0;     // n^lower_exponent
  double upper_bound = 0.0;     // n^upper_exponent
  double lower_margin = 0.0;    // N / lower_bound
  double upper_margin = 0.0;    // upper_bound / N
  double slack = 4.0;
  bool inside_raw = false;  // lower_bound < N < upper_bound
  bool inside = false;      // both margins >= slack
};

/// Evaluates the (n, N) strip for γ ∈ (1/8, 1/6].
StripReport strip_condition(double gamma, std::int64_t n, std::int64_t cells, double slack = 4.0);

/// n iid draws from the alternative density by inverting a tabulated CDF.
std::vector<double> sample_alternative(const AlternativeSpec& spec, std::int64_t n,
                                       std::uint64_t seed, std::int64_t cells = 0);

}  // namespace gofslope
