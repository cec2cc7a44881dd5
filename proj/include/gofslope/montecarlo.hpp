#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gofslope/alternatives.hpp"
#include "gofslope/grouping.hpp"
#include "gofslope/largedev.hpp"
#include "gofslope/rng.hpp"
#include "gofslope/statistics.hpp"

namespace gofslope {

/// One M(n, p) draw by sequential conditional binomials.
GroupedCounts sample_multinomial(std::int64_t n, std::span<const double> p, std::uint64_t seed);
void sample_multinomial(std::int64_t n, std::span<const double> p, Engine& engine,
                        std::span<std::int64_t> out);

/// Relative tolerance of the shared threshold comparator.
inline constexpr double kTieTolerance = 1e-10;

/// s >= threshold up to kTieTolerance (or s > threshold beyond it when strict).
bool reaches(double s, double threshold, bool strict = false);

/// S = Σ_m h(η_m; n/N) through a lookup table over 0..n.
///
/// For the LR kernel the linear part 2(k − λ) is dropped from each entry; it
/// sums to zero over any composition of n.
class StatisticTable {
 public:
  StatisticTable(const HFunction& h, std::int64_t n, std::int64_t cells);

  double term(std::int64_t k) const { return table_[static_cast<std::size_t>(k)]; }
  double operator()(std::span<const std::int64_t> counts) const;
  std::int64_t sample_size() const { return n_; }
  std::int64_t cells() const { return cells_; }

 private:
  std::vector<double> table_;
  std::int64_t n_;
  std::int64_t cells_;
};

enum class TailSide { kUpper, kLower };

/// P{S ≥ threshold} (kUpper) or P{S ≤ threshold} (kLower) with η ~ M(n, p).
/// The statistic is always taken relative to equal cells.
struct TailQuery {
  std::int64_t n = 0;
  std::vector<double> p;
  HFunction stat = HFunction::chi_square();
  double threshold = 0.0;
  TailSide side = TailSide::kUpper;
  bool strict = false;
};

enum class TailMethod { kNaive, kSplitting, kExact, kAuto };

std::string to_string(TailMethod m);
TailMethod parse_tail_method(const std::string& text);

struct TailEstimate {
  double p_hat = 0.0;
  double log_p_hat = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double log_ci_low = 0.0;
  double log_ci_high = 0.0;
  TailMethod method = TailMethod::kExact;
  std::int64_t replicates = 0;  // samples (NAIVE), runs (SPLITTING), compositions (EXACT)
  std::uint64_t seed = 0;
  /// Set when every splitting run ended with zero hits; ci_high is then an
  /// upper bound and p_hat is 0.
  bool upper_bound = false;
  std::uint64_t evaluations = 0;
  std::int64_t hits = 0;            // NAIVE
  std::int64_t particles = 0;       // SPLITTING, per run
  double mean_levels = 0.0;         // SPLITTING
  std::vector<double> replicate_log_p;  // SPLITTING, per run
};

/// Largest instance exact_tail accepts, in compositions.
inline constexpr std::uint64_t kExactCompositionLimit = 1000000;

TailEstimate exact_tail(const TailQuery& query);
TailEstimate exact_tail(std::int64_t n, std::int64_t cells, std::span<const double> p,
                        const HFunction& stat, double threshold, bool strict = false);

struct EstimatorOptions {
  /// Independent splitting runs (>= 20 for an interval).
  int replications = 20;
  /// MCMC sweeps per level; a sweep is N pair updates and counts as one evaluation.
  int sweeps = 2;
  /// Particles per run; 0 derives it from the budget and a pilot run.
  std::int64_t particles = 0;
  std::int64_t min_particles = 50;
  std::int64_t max_levels = 100000;
  /// NAIVE samples per seeded chunk.
  std::int64_t chunk = 4096;
  int workers = 1;
};

/// NAIVE (Wilson interval) or SPLITTING (adaptive multilevel splitting with a
/// log-normal interval over independent runs). `budget` counts statistic
/// evaluations. NAIVE refuses with InvalidArgument when the projected hit
/// count is below 10.
TailEstimate estimate_tail(const TailQuery& query, TailMethod method, std::uint64_t budget,
                           std::uint64_t seed, const EstimatorOptions& options = {});

enum class ThresholdMode { kPoissonShift, kExactMean, kEmpiricalMean };

std::string to_string(ThresholdMode m);
ThresholdMode parse_threshold_mode(const std::string& text);

struct SlopePoint {
  std::int64_t n = 0;
  std::int64_t cells = 0;
  std::string test = "chi2";  // kernel id: chi2, lr, empty
  FamilyTag family;
};

struct ExperimentOptions {
  TailMethod method = TailMethod::kAuto;
  ThresholdMode threshold_mode = ThresholdMode::kPoissonShift;
  /// H₁ samples used by kEmpiricalMean.
  std::int64_t mean_samples = 10000;
  EstimatorOptions estimator;
  PredictionOptions prediction;
};

struct ExperimentPoint {
  std::int64_t n = 0;
  std::int64_t cells = 0;
  double delta = 0.0;
  double lambda = 0.0;
  std::string test;
  FamilyTag family;
  double threshold = 0.0;
  double x_n = 0.0;
  double slope_empirical = 0.0;
  double slope_ci_low = 0.0;
  double slope_ci_high = 0.0;
  std::optional<double> slope_predicted;
  std::string regime;  // prediction regime, or the refusal message
  TailEstimate tail;
};

/// −log P₀{S ≥ E₁S} with the threshold from options.threshold_mode.
ExperimentPoint estimate_alpha_slope(const SlopePoint& point, const AlternativeSpec& spec,
                                     std::uint64_t budget, std::uint64_t seed,
                                     const ExperimentOptions& options = {});

/// −log P₁{S ≤ E₀S}.
ExperimentPoint estimate_beta_slope(const SlopePoint& point, const AlternativeSpec& spec,
                                    std::uint64_t budget, std::uint64_t seed,
                                    const ExperimentOptions& options = {});

/// P₁{Ŝ > x_n + c}, Ŝ standardized with the Poisson null moments.
TailEstimate power_at_critical(const SlopePoint& point, const AlternativeSpec& spec, double c,
                               std::uint64_t budget, std::uint64_t seed,
                               const ExperimentOptions& options = {});

/// E S under M(n, p), by enumeration; same size limit as exact_tail.
double exact_mean(std::int64_t n, std::span<const double> p, const HFunction& stat);

}  // namespace gofslope
