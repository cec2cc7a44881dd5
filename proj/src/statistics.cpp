#include "gofslope/statistics.hpp"

#include <cmath>
#include <numeric>
#include <vector>

#include "gofslope/errors.hpp"

namespace gofslope {
namespace {

void check_probabilities(std::size_t cells, std::span<const double> p, double n) {
  if (p.size() != cells) throw InvalidArgument("probability vector length differs from cell count");
  if (!(n >= 1.0)) throw InvalidArgument("statistic needs a non-degenerate sample (n >= 1)");
  double total = 0.0;
  for (std::size_t m = 0; m < p.size(); ++m) {
    if (!(p[m] > 0.0)) {
      throw InvalidArgument("zero expected count in cell " + std::to_string(m));
    }
    total += p[m];
  }
  if (std::abs(total - 1.0) > 1e-9) throw InvalidArgument("cell probabilities must sum to 1");
}

double pearson_sum(std::span<const double> counts, std::span<const double> p, double n) {
  double s = 0.0;
  for (std::size_t m = 0; m < counts.size(); ++m) {
    const double e = n * p[m];
    const double d = counts[m] - e;
    s += d * d / e;
  }
  return s;
}

// Uses Σ (η − np) = 0 to write each term as e·((1+r)·log1p(r) − r) with
// r = η/e − 1. Every term is non-negative and free of cancellation near
// η = e, which the local-equivalence checks rely on.
double lr_sum(std::span<const double> counts, std::span<const double> p, double n) {
  double s = 0.0;
  for (std::size_t m = 0; m < counts.size(); ++m) {
    const double e = n * p[m];
    if (counts[m] == 0.0) {
      s += e;
      continue;
    }
    const double r = (counts[m] - e) / e;
    s += e * ((1.0 + r) * std::log1p(r) - r);
  }
  return 2.0 * s;
}

std::vector<double> as_real(const GroupedCounts& counts) {
  return {counts.counts().begin(), counts.counts().end()};
}

}  // namespace

HFunction::HFunction(std::string name, Kernel kernel, EnvelopeFn envelope, bool is_linear,
                     bool cramer)
    : name_(std::move(name)),
      kernel_(std::move(kernel)),
      envelope_(std::move(envelope)),
      is_linear_(is_linear),
      cramer_(cramer) {
  if (!kernel_ || !envelope_) throw InvalidArgument("HFunction needs a kernel and an envelope");
}

HFunction HFunction::chi_square() {
  return HFunction(
      "chi2", [](double u, double lambda) { return (u - lambda) * (u - lambda) / lambda; },
      [](double lambda) { return Envelope{1.0 / lambda, 2}; }, false, false);
}

HFunction HFunction::log_likelihood() {
  return HFunction(
      "lr",
      [](double u, double lambda) { return u > 0.0 ? 2.0 * u * std::log(u / lambda) : 0.0; },
      // 2k ln(k/λ) <= 2k(k/λ − 1) <= (2/λ)(1+k)² for k >= λ.
      [](double lambda) { return Envelope{2.0 / lambda, 2}; }, false, true);
}

HFunction HFunction::empty_cells() {
  return HFunction(
      "empty", [](double u, double) { return u == 0.0 ? 1.0 : 0.0; },
      [](double) { return Envelope{1.0, 0}; }, false, true);
}

HFunction HFunction::by_name(const std::string& name) {
  if (name == "chi2") return chi_square();
  if (name == "lr") return log_likelihood();
  if (name == "empty") return empty_cells();
  throw InvalidArgument("unknown kernel '" + name + "' (expected chi2, lr or empty)");
}

double chi_square(std::span<const double> counts, std::span<const double> p) {
  const double n = std::accumulate(counts.begin(), counts.end(), 0.0);
  check_probabilities(counts.size(), p, n);
  return pearson_sum(counts, p, n);
}

double log_likelihood_ratio(std::span<const double> counts, std::span<const double> p) {
  const double n = std::accumulate(counts.begin(), counts.end(), 0.0);
  check_probabilities(counts.size(), p, n);
  return lr_sum(counts, p, n);
}

StatisticValue chi_square(const GroupedCounts& counts, std::span<const double> p) {
  const auto real = as_real(counts);
  return {chi_square(std::span<const double>(real), p), "chi2", counts.cells(),
          counts.sample_size()};
}

StatisticValue log_likelihood_ratio(const GroupedCounts& counts, std::span<const double> p) {
  const auto real = as_real(counts);
  return {log_likelihood_ratio(std::span<const double>(real), p), "lr", counts.cells(),
          counts.sample_size()};
}

StatisticValue h_statistic(const GroupedCounts& counts, const HFunction& h) {
  if (h.is_linear()) {
    throw InvalidArgument("h-test undefined for linear h ('" + h.name() + "')");
  }
  if (counts.degenerate()) throw InvalidArgument("h-statistic on degenerate counts (n = 0)");
  const double lambda = counts.lambda();
  double s = 0.0;
  for (auto c : counts.counts()) s += h(static_cast<double>(c), lambda);
  return {s, h.name(), counts.cells(), counts.sample_size()};
}

double standardize(const StatisticValue& s, double mean0, double var0) {
  if (!(var0 > 0.0)) throw InvalidArgument("null variance must be positive");
  return (s.value - mean0) / std::sqrt(var0);
}

}  // namespace gofslope
