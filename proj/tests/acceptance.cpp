// Acceptance run: one PASS/FAIL line per criterion. Pass criterion numbers as
// arguments to run a subset.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "golden.hpp"
#include "gofslope/enumeration.hpp"
#include "gofslope/largedev.hpp"
#include "gofslope/montecarlo.hpp"
#include "gofslope/poisson_moments.hpp"
#include "gofslope/rng.hpp"

using namespace gofslope;
using gofslope::testing::golden;

namespace {

constexpr std::uint64_t kSeed = 20240601;
constexpr std::uint64_t kDefaultBudget = 1000000;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v, int digits = 6) {
  std::ostringstream s;
  s.precision(digits);
  s << v;
  return s.str();
}

std::vector<double> uniform(std::int64_t N) {
  return std::vector<double>(static_cast<std::size_t>(N), 1.0 / static_cast<double>(N));
}

AlternativeSpec power_law(double gamma) {
  return AlternativeSpec(DirectionFunction::cosine(1), DeltaSchedule::power_law(gamma));
}

// 1. ρ(χ², λ) = 1.
Outcome criterion1() {
  constexpr double kTol = 1e-10;
  double worst = 0.0;
  for (double l : {0.5, 1.0, 2.0, 5.0, 10.0, 100.0}) {
    worst = std::max(worst, std::abs(moment_summary(HFunction::chi_square(), l).rho - 1.0));
  }
  return {worst <= kTol, "max |rho - 1| = " + fmt(worst, 3) + " (tol " + fmt(kTol) + ")"};
}

// 2. (1 − ρ(Λ, λ))·6λ → 1, ρ monotone in λ.
Outcome criterion2() {
  const std::vector<int> lambdas{25, 50, 100, 200};
  std::vector<double> rho;
  std::string detail;
  double oracle_gap = 0.0;
  for (int l : lambdas) {
    rho.push_back(moment_summary(HFunction::log_likelihood(), l).rho);
    oracle_gap = std::max(oracle_gap, std::abs(rho.back() - golden("lr.rho." + std::to_string(l))));
    detail += "rho(" + std::to_string(l) + ")=" + fmt(rho.back(), 10) + " ";
  }
  const double scaled = (1.0 - rho.back()) * 6.0 * 200.0;
  const bool monotone = std::is_sorted(rho.begin(), rho.end()) &&
                        std::adjacent_find(rho.begin(), rho.end()) == rho.end();
  const bool pass = scaled >= 0.9 && scaled <= 1.1 && monotone && oracle_gap < 1e-9;
  return {pass, detail + "(1-rho)*6*lambda at 200 = " + fmt(scaled) + " in [0.9, 1.1], monotone=" +
                    (monotone ? "yes" : "no") + ", max oracle gap " + fmt(oracle_gap, 3)};
}

// Distinct support points of S with their exact upper tails.
std::vector<std::pair<double, double>> support_tails(std::int64_t n, std::int64_t N,
                                                     const HFunction& h) {
  const StatisticTable table(h, n, N);
  std::vector<double> values;
  for_each_composition(n, static_cast<std::size_t>(N),
                       [&](std::span<const std::int64_t> c) { values.push_back(table(c)); });
  std::sort(values.begin(), values.end());
  std::vector<double> distinct;
  for (double v : values) {
    if (distinct.empty() || !reaches(distinct.back(), v)) distinct.push_back(v);
  }
  const auto p = uniform(N);
  std::vector<std::pair<double, double>> out;
  for (double v : distinct) out.push_back({v, exact_tail(n, N, p, h, v).p_hat});
  return out;
}

// 3. NAIVE and SPLITTING intervals cover exact tails on small grids.
Outcome criterion3() {
  constexpr double kRequired = 0.95;
  constexpr std::uint64_t kNaiveBudget = 100000;
  int cases = 0;
  int naive_cover = 0;
  int split_cover = 0;
  std::uint64_t index = 0;
  std::string misses;
  for (std::int64_t N = 2; N <= 4; ++N) {
    for (std::int64_t n = 2; n <= 10; ++n) {
      for (const char* name : {"chi2", "lr"}) {
        const HFunction h = HFunction::by_name(name);
        auto tails = support_tails(n, N, h);
        // three thresholds with tails nearest 0.5, 0.1 and 0.01, excluding certainty
        std::vector<std::pair<double, double>> picked;
        for (double target : {0.5, 0.1, 0.01}) {
          auto best = tails.end();
          double dist = INFINITY;
          for (auto it = tails.begin(); it != tails.end(); ++it) {
            if (it->second >= 1.0 - 1e-12) continue;
            const double d = std::abs(std::log(it->second / target));
            if (d < dist) {
              dist = d;
              best = it;
            }
          }
          if (best == tails.end()) break;
          picked.push_back(*best);
          tails.erase(best);
        }
        if (picked.size() < 3) continue;
        for (const auto& [thr, p] : picked) {
          const TailQuery q{n, uniform(N), h, thr, TailSide::kUpper, false};
          ++cases;
          const auto naive = estimate_tail(q, TailMethod::kNaive, kNaiveBudget, split_seed(kSeed, index++));
          const auto split =
              estimate_tail(q, TailMethod::kSplitting, kDefaultBudget, split_seed(kSeed, index++));
          const bool nc = naive.ci_low <= p && p <= naive.ci_high;
          const bool sc = split.ci_low <= p && p <= split.ci_high;
          naive_cover += nc;
          split_cover += sc;
          if (!sc || !nc) {
            misses += " [" + std::string(name) + " n=" + std::to_string(n) + " N=" +
                      std::to_string(N) + " p=" + fmt(p, 4) + (nc ? "" : " naive") +
                      (sc ? "" : " splitting") + "]";
          }
        }
      }
    }
  }
  const double nr = static_cast<double>(naive_cover) / cases;
  const double sr = static_cast<double>(split_cover) / cases;
  return {cases > 0 && nr >= kRequired && sr >= kRequired,
          std::to_string(cases) + " cases; NAIVE coverage " + fmt(nr, 4) + ", SPLITTING coverage " +
              fmt(sr, 4) + " (need >= " + fmt(kRequired) + ");" + (misses.empty() ? "" : " misses:" + misses)};
}

// 4. Hand value.
Outcome criterion4() {
  const auto p = uniform(2);
  const double v = exact_tail(4, 2, p, HFunction::chi_square(), 4.0).p_hat;
  return {v == 0.125, "exact_tail(4, 2, uniform, chi2, 4) = " + fmt(v, 17) + " (want 0.125 exactly)"};
}

// 5. Splitting log-tails of χ² at n = 10⁴, N = 50 against the refined normal term.
Outcome criterion5() {
  constexpr std::int64_t n = 10000;
  constexpr std::int64_t N = 50;
  bool pass = true;
  std::string detail;
  std::uint64_t idx = 0;
  for (double x : {4.0, 6.0, 8.0}) {
    const double thr = N + x * std::sqrt(2.0 * N);
    const TailQuery q{n, uniform(N), HFunction::chi_square(), thr, TailSide::kUpper, false};
    const auto e = estimate_tail(q, TailMethod::kSplitting, kDefaultBudget, split_seed(kSeed, 500 + idx++));
    const double ref = normal_log_tail(x, true);
    const double tol = std::max(1.5, 0.15 * std::abs(ref));
    const bool ok = std::abs(e.log_p_hat - ref) <= tol;
    pass = pass && ok;
    detail += "x=" + fmt(x, 2) + ": log p_hat=" + fmt(e.log_p_hat, 5) + " [" + fmt(e.log_ci_low, 5) +
              ", " + fmt(e.log_ci_high, 5) + "] refined normal=" + fmt(ref, 5) + " tol=" + fmt(tol, 3) +
              " chi2_49 ref=" + fmt(golden("chi2_49.logsf." + fmt(x, 1)), 5) + (ok ? " ok; " : " off; ");
  }
  return {pass, detail};
}

// 6. Empirical slope over nλδ⁴/4 along γ = 1/4, N = ⌊n^{1/3}⌋.
Outcome criterion6() {
  const auto spec = power_law(0.25);
  ExperimentOptions opt;
  opt.threshold_mode = ThresholdMode::kPoissonShift;
  std::vector<double> ratios;
  std::string detail;
  for (int e : {12, 14, 16, 18}) {
    const std::int64_t n = std::int64_t{1} << e;
    const std::int64_t N = static_cast<std::int64_t>(std::floor(std::cbrt(double(n)) * (1 + 1e-12)));
    const SlopePoint sp{n, N, "chi2", FamilyTag{FamilyTag::Kind::kJO, 0.0}};
    const auto r = estimate_alpha_slope(sp, spec, 200000, split_seed(kSeed, 600 + e), opt);
    const double base = double(n) * r.lambda * std::pow(r.delta, 4) / 4.0;
    ratios.push_back(r.slope_empirical / base);
    detail += "n=2^" + std::to_string(e) + " N=" + std::to_string(N) + " ratio=" + fmt(ratios.back(), 5) +
              " (" + to_string(r.tail.method) + "); ";
  }
  const double last = ratios.back();
  bool shrinking = true;
  for (std::size_t i = ratios.size() - 2; i < ratios.size(); ++i) {
    shrinking = shrinking && std::abs(ratios[i] - 1) < std::abs(ratios[i - 1] - 1);
  }
  return {last >= 0.6 && last <= 1.4 && shrinking,
          detail + "final in [0.6, 1.4]: " + (last >= 0.6 && last <= 1.4 ? "yes" : "no") +
              ", |ratio-1| decreasing over last three: " + (shrinking ? "yes" : "no")};
}

// 7. χ² vs Λ empirical slopes in and beyond the strip.
constexpr int kStripLog2N = 20;
constexpr double kBarGamma = 0.1;
constexpr int kBarLog2N = 11;
constexpr std::int64_t kBarCells = 64;
constexpr std::uint64_t kBarBudget = kDefaultBudget;

Outcome criterion7() {
  constexpr double kAgree = 0.15;
  ExperimentOptions opt;
  opt.threshold_mode = ThresholdMode::kPoissonShift;
  std::string detail;

  const std::int64_t n1 = std::int64_t{1} << kStripLog2N;
  const auto N1 = static_cast<std::int64_t>(std::floor(std::pow(double(n1), 0.3) * (1 + 1e-12)));
  const FamilyTag strip_tag{FamilyTag::Kind::kJGamma, 1.0 / 6.0};
  const auto s = strip_condition(1.0 / 6.0, n1, N1);
  const auto spec1 = power_law(1.0 / 6.0);
  const auto chi = estimate_alpha_slope({n1, N1, "chi2", strip_tag}, spec1, kDefaultBudget,
                                        split_seed(kSeed, 701), opt);
  const auto lr = estimate_alpha_slope({n1, N1, "lr", strip_tag}, spec1, kDefaultBudget,
                                       split_seed(kSeed, 702), opt);
  const double rel = std::abs(chi.slope_empirical / lr.slope_empirical - 1.0);
  const bool a = rel <= kAgree;
  detail += "strip point n=2^" + std::to_string(kStripLog2N) + " N=" + std::to_string(N1) +
            " delta=" + fmt(chi.delta) + " (strip margins lower " + fmt(s.lower_margin, 4) + ", upper " +
            fmt(s.upper_margin, 4) + ", inside_raw=" + (s.inside_raw ? "yes" : "no") +
            "): chi2 slope " + fmt(chi.slope_empirical, 5) + " [" + fmt(chi.slope_ci_low, 5) + ", " +
            fmt(chi.slope_ci_high, 5) + "], lr slope " + fmt(lr.slope_empirical, 5) + " [" +
            fmt(lr.slope_ci_low, 5) + ", " + fmt(lr.slope_ci_high, 5) + "], |ratio-1|=" + fmt(rel, 4) +
            " (tol " + fmt(kAgree) + "); ";

  const std::int64_t n2 = std::int64_t{1} << kBarLog2N;
  const FamilyTag bar_tag{FamilyTag::Kind::kJBar18, 0.0};
  const auto spec2 = power_law(kBarGamma);
  opt.method = TailMethod::kSplitting;
  const auto chi2 = estimate_alpha_slope({n2, kBarCells, "chi2", bar_tag}, spec2, kBarBudget,
                                         split_seed(kSeed, 703), opt);
  const auto lr2 = estimate_alpha_slope({n2, kBarCells, "lr", bar_tag}, spec2, kBarBudget,
                                        split_seed(kSeed, 704), opt);
  const bool b = chi2.slope_ci_high < lr2.slope_ci_low;
  detail += "bar point gamma=" + fmt(kBarGamma) + " n=2^" + std::to_string(kBarLog2N) + " N=" +
            std::to_string(kBarCells) + " lambda=" + fmt(chi2.lambda) + ": chi2 slope " +
            fmt(chi2.slope_empirical, 5) + " [" + fmt(chi2.slope_ci_low, 5) + ", " +
            fmt(chi2.slope_ci_high, 5) + "] < lr slope " + fmt(lr2.slope_empirical, 5) + " [" +
            fmt(lr2.slope_ci_low, 5) + ", " + fmt(lr2.slope_ci_high, 5) + "]: " +
            (b ? "separated" : "not separated");
  return {a && b, detail};
}

// 8. Power at the critical value in the CLT regime.
Outcome criterion8() {
  constexpr std::int64_t n = 100000;
  constexpr std::int64_t N = 5000;
  constexpr double kDelta = 0.0316227766016838;  // nδ² = 100
  constexpr std::uint64_t kBudget = 10000;
  const AlternativeSpec spec(DirectionFunction::cosine(1), DeltaSchedule::constant(kDelta));
  const SlopePoint sp{n, N, "chi2", FamilyTag{FamilyTag::Kind::kFixed, 0.0}};
  ExperimentOptions opt;
  opt.method = TailMethod::kNaive;
  const auto at0 = power_at_critical(sp, spec, 0.0, kBudget, split_seed(kSeed, 801), opt);
  const auto at95 = power_at_critical(sp, spec, -1.6449, kBudget, split_seed(kSeed, 802), opt);
  const bool a = std::abs(at0.p_hat - 0.5) <= 0.03;
  const bool b = std::abs(at95.p_hat - 0.95) <= 0.02;
  return {a && b, "power(c=0)=" + fmt(at0.p_hat, 4) + " (0.5 +- 0.03), power(c=-1.6449)=" +
                      fmt(at95.p_hat, 4) + " (0.95 +- 0.02), " + std::to_string(at0.replicates) +
                      " samples each"};
}

// 9. Binomial point lower bound never exceeds the pmf.
Outcome criterion9() {
  int violations = 0;
  int checked = 0;
  for (std::int64_t n = 2; n <= 50; ++n) {
    for (std::int64_t k = 1; k < n; ++k) {
      for (double p : {0.1, 0.25, 0.5}) {
        const long double log_pmf = std::lgamma((long double)n + 1) - std::lgamma((long double)k + 1) -
                                    std::lgamma((long double)(n - k) + 1) +
                                    k * std::log((long double)p) + (n - k) * std::log1p(-(long double)p);
        const double bound = binomial_point_lower_bound(k, n, p);
        ++checked;
        if (bound > std::exp(log_pmf) * (1 + 1e-12)) ++violations;
      }
    }
  }
  return {violations == 0, std::to_string(violations) + " violations over " + std::to_string(checked) +
                               " (n, k, p) triples"};
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

// 10. simulate is byte-stable.
Outcome criterion10() {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "gofslope_acceptance_10";
  fs::remove_all(dir);
  fs::create_directories(dir);
  {
    std::ofstream cfg(dir / "config.json");
    cfg << R"JSON({"grid": {"points": [[4096, 16]]},
      "schedule": {"kind": "power_law", "gamma": 0.25},
      "family": "J_O", "tests": ["chi2", "lr"], "budget": 100000})JSON";
  }
  std::string outputs[2];
  for (int i = 0; i < 2; ++i) {
    const fs::path out = dir / ("run" + std::to_string(i));
    const std::string cmd = std::string("\"") + GOFSLOPE_CLI + "\" simulate --config " +
                            (dir / "config.json").string() + " --seed 11 --out " + out.string();
    if (std::system(cmd.c_str()) != 0) return {false, "simulate exited nonzero"};
    outputs[i] = slurp(out / "simulate.csv");
  }
  const bool same = !outputs[0].empty() && outputs[0] == outputs[1];
  return {same, std::to_string(outputs[0].size()) + " bytes, identical=" + (same ? "yes" : "no")};
}

struct Criterion {
  int id;
  double limit_s;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all{
      {1, 1.0, criterion1},     {2, 5.0, criterion2},     {3, 120.0, criterion3},
      {4, 1.0, criterion4},     {5, 600.0, criterion5},   {6, 1800.0, criterion6},
      {7, 1800.0, criterion7},  {8, 300.0, criterion8},   {9, 1.0, criterion9},
      {10, 120.0, criterion10}};
  std::set<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.insert(std::atoi(argv[i]));

  int failed = 0;
  for (const auto& c : all) {
    if (!wanted.empty() && !wanted.count(c.id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = secs < c.limit_s;
    const bool pass = o.pass && in_time;
    failed += !pass;
    std::cout << "criterion " << c.id << ": " << (pass ? "PASS" : "FAIL") << " (" << fmt(secs, 3)
              << " s, limit " << fmt(c.limit_s) << " s" << (in_time ? "" : ", over time") << ") "
              << o.detail << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
