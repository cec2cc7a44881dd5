#include "gofslope/montecarlo.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <functional>
#include <mutex>
#include <numeric>
#include <thread>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

#include "gofslope/enumeration.hpp"
#include "gofslope/errors.hpp"
#include "gofslope/poisson_moments.hpp"

namespace gofslope {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_probabilities(std::span<const double> p) {
  if (p.empty()) throw InvalidArgument("probability vector is empty");
  double total = 0.0;
  for (double v : p) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw InvalidArgument("probabilities must be >= 0");
    total += v;
  }
  if (std::abs(total - 1.0) > 1e-9) throw InvalidArgument("probabilities must sum to 1");
}

void check_query(const TailQuery& q) {
  if (q.n < 1) throw InvalidArgument("tail query needs n >= 1");
  check_probabilities(q.p);
  if (std::isnan(q.threshold)) throw InvalidArgument("threshold is NaN");
}

void parallel_for(std::size_t count, int workers, const std::function<void(std::size_t)>& fn) {
  const auto threads = static_cast<std::size_t>(std::max(1, workers));
  if (threads == 1 || count < 2) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < std::min(threads, count); ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

double log_or_minus_inf(double p) { return p > 0.0 ? std::log(p) : -kInf; }

double log_mean_exp(std::span<const double> logs) {
  double top = -kInf;
  for (double v : logs) top = std::max(top, v);
  if (top == -kInf) return -kInf;
  double acc = 0.0;
  for (double v : logs) acc += std::exp(v - top);
  return top + std::log(acc / static_cast<double>(logs.size()));
}

// Orientation of the score: splitting always pushes the score upwards.
struct Scorer {
  const StatisticTable* table;
  double sign;
  double target;
  bool strict;

  double score(std::span<const std::int64_t> counts) const { return sign * (*table)(counts); }
  bool hit(double s) const { return reaches(s, target, strict); }
};

Scorer make_scorer(const TailQuery& q, const StatisticTable& table) {
  const double sign = q.side == TailSide::kUpper ? 1.0 : -1.0;
  return {&table, sign, sign * q.threshold, q.strict};
}

bool above(double a, double b) {
  if (b == -kInf) return a > b;
  return a > b + kTieTolerance * std::max(1.0, std::abs(b));
}

void fill_logs(TailEstimate& e) {
  e.log_p_hat = log_or_minus_inf(e.p_hat);
  e.log_ci_low = log_or_minus_inf(e.ci_low);
  e.log_ci_high = log_or_minus_inf(e.ci_high);
}

TailEstimate point_mass(double p, TailMethod method, std::uint64_t seed) {
  TailEstimate e;
  e.p_hat = e.ci_low = e.ci_high = p;
  e.method = method;
  e.seed = seed;
  fill_logs(e);
  return e;
}

TailEstimate naive_tail(const TailQuery& q, std::uint64_t budget, std::uint64_t seed,
                        const EstimatorOptions& opt) {
  const StatisticTable table(q.stat, q.n, static_cast<std::int64_t>(q.p.size()));
  const Scorer scorer = make_scorer(q, table);
  const auto chunk = static_cast<std::uint64_t>(std::max<std::int64_t>(1, opt.chunk));
  const std::uint64_t chunks = (budget + chunk - 1) / chunk;
  std::vector<std::int64_t> hits(chunks, 0);
  auto run_chunk = [&](std::size_t c) {
    Engine engine(split_seed(seed, c));
    std::vector<std::int64_t> counts(q.p.size());
    const std::uint64_t size = std::min(chunk, budget - c * chunk);
    std::int64_t h = 0;
    for (std::uint64_t i = 0; i < size; ++i) {
      sample_multinomial(q.n, q.p, engine, counts);
      if (scorer.hit(scorer.score(counts))) ++h;
    }
    hits[c] = h;
  };

  const std::uint64_t pilot = std::max<std::uint64_t>(1, (chunks + 9) / 10);
  parallel_for(pilot, opt.workers, run_chunk);
  const std::uint64_t pilot_samples = std::min(budget, pilot * chunk);
  const std::int64_t pilot_hits = std::accumulate(hits.begin(), hits.begin() + pilot, std::int64_t{0});
  const double projected =
      static_cast<double>(pilot_hits) * static_cast<double>(budget) / static_cast<double>(pilot_samples);
  if (projected < 10.0) {
    throw InvalidArgument("NAIVE projects " + std::to_string(projected) + " hits at budget " +
                          std::to_string(budget) + " (needs >= 10); use SPLITTING");
  }
  parallel_for(chunks - pilot, opt.workers, [&](std::size_t c) { run_chunk(c + pilot); });

  const std::int64_t total = std::accumulate(hits.begin(), hits.end(), std::int64_t{0});
  const double B = static_cast<double>(budget);
  const double p = static_cast<double>(total) / B;
  const double z = boost::math::quantile(boost::math::normal(), 0.975);
  const double denom = 1.0 + z * z / B;
  const double centre = (p + z * z / (2.0 * B)) / denom;
  const double half = z / denom * std::sqrt(p * (1.0 - p) / B + z * z / (4.0 * B * B));

  TailEstimate e;
  e.p_hat = p;
  e.ci_low = std::clamp(centre - half, 0.0, p);
  e.ci_high = std::clamp(centre + half, p, 1.0);
  e.method = TailMethod::kNaive;
  e.replicates = static_cast<std::int64_t>(budget);
  e.seed = seed;
  e.evaluations = budget;
  e.hits = total;
  fill_logs(e);
  return e;
}

struct SplittingRun {
  double log_p = -kInf;    // -inf when the run ends with no hits
  double log_prefix = 0.0;  // product of level fractions reached
  std::int64_t levels = 0;
  std::uint64_t evaluations = 0;
};

SplittingRun splitting_run(const TailQuery& q, const Scorer& scorer, std::int64_t M,
                           std::uint64_t seed, const EstimatorOptions& opt) {
  Engine engine(seed);
  const auto N = q.p.size();
  const auto Mu = static_cast<std::size_t>(M);
  const StatisticTable& table = *scorer.table;
  std::vector<std::int64_t> particles(Mu * N);
  std::vector<double> scores(Mu);
  auto row = [&](std::vector<std::int64_t>& v, std::size_t i) {
    return std::span<std::int64_t>(v.data() + i * N, N);
  };
  for (std::size_t i = 0; i < Mu; ++i) {
    auto r = row(particles, i);
    sample_multinomial(q.n, q.p, engine, r);
    scores[i] = scorer.score(r);
  }

  SplittingRun out;
  out.evaluations = Mu;
  double level = -kInf;
  std::vector<double> sorted(Mu);
  std::vector<std::int64_t> next(Mu * N);
  std::vector<double> next_scores(Mu);
  std::vector<std::size_t> survivors;
  std::uniform_int_distribution<std::size_t> pick_cell(0, N - 1);
  std::uniform_int_distribution<std::size_t> pick_other(0, N >= 2 ? N - 2 : 0);

  while (true) {
    std::int64_t hits = 0;
    for (double s : scores) hits += scorer.hit(s) ? 1 : 0;
    std::copy(scores.begin(), scores.end(), sorted.begin());
    std::nth_element(sorted.begin(), sorted.begin() + Mu / 2, sorted.end());
    double new_level = sorted[Mu / 2];
    if (!above(new_level, level)) {
      new_level = kInf;
      for (double s : scores) {
        if (above(s, level)) new_level = std::min(new_level, s);
      }
      if (new_level == kInf) return out;  // no particle can move past the level
    }
    if (scorer.hit(new_level)) {
      out.log_p = out.log_prefix + std::log(static_cast<double>(hits) / static_cast<double>(M));
      return out;
    }
    survivors.clear();
    for (std::size_t i = 0; i < Mu; ++i) {
      if (reaches(scores[i], new_level)) survivors.push_back(i);
    }
    out.log_prefix += std::log(static_cast<double>(survivors.size()) / static_cast<double>(M));
    if (++out.levels > opt.max_levels) return out;
    level = new_level;

    std::uniform_int_distribution<std::size_t> pick(0, survivors.size() - 1);
    for (std::size_t i = 0; i < Mu; ++i) {
      const std::size_t src = i < survivors.size() ? survivors[i] : survivors[pick(engine)];
      auto from = row(particles, src);
      std::copy(from.begin(), from.end(), next.begin() + static_cast<std::ptrdiff_t>(i * N));
      next_scores[i] = scores[src];
    }
    particles.swap(next);
    scores.swap(next_scores);

    if (N < 2) continue;
    for (std::size_t i = 0; i < Mu; ++i) {
      auto eta = row(particles, i);
      double s = scores[i];
      for (int sweep = 0; sweep < opt.sweeps; ++sweep) {
        for (std::size_t t = 0; t < N; ++t) {
          const std::size_t a = pick_cell(engine);
          std::size_t b = pick_other(engine);
          if (b >= a) ++b;
          const std::int64_t m = eta[a] + eta[b];
          const double mass = q.p[a] + q.p[b];
          if (m == 0 || mass <= 0.0) continue;
          std::binomial_distribution<std::int64_t> bin(m, q.p[a] / mass);
          const std::int64_t k = bin(engine);
          if (k == eta[a]) continue;
          const double ds =
              table.term(k) + table.term(m - k) - table.term(eta[a]) - table.term(eta[b]);
          const double proposal = s + scorer.sign * ds;
          if (!reaches(proposal, level)) continue;
          eta[a] = k;
          eta[b] = m - k;
          s = proposal;
        }
      }
      scores[i] = scorer.score(eta);
    }
    out.evaluations += Mu * static_cast<std::uint64_t>(opt.sweeps);
  }
}

TailEstimate splitting_tail(const TailQuery& q, std::uint64_t budget, std::uint64_t seed,
                            const EstimatorOptions& opt) {
  if (opt.replications < 20) throw InvalidArgument("splitting needs at least 20 replications");
  if (opt.sweeps < 1) throw InvalidArgument("splitting needs at least one MCMC sweep");
  const StatisticTable table(q.stat, q.n, static_cast<std::int64_t>(q.p.size()));
  const Scorer scorer = make_scorer(q, table);
  const auto R = static_cast<std::size_t>(opt.replications);
  const double per_run = static_cast<double>(budget) / static_cast<double>(R);

  std::uint64_t evaluations = 0;
  std::int64_t M = opt.particles;
  if (M <= 0) {
    const SplittingRun pilot = splitting_run(q, scorer, 100, split_seed(seed, R + 7919), opt);
    evaluations += pilot.evaluations;
    const double per_level = static_cast<double>(pilot.levels + 1) * opt.sweeps + 1.0;
    M = std::max<std::int64_t>(opt.min_particles, static_cast<std::int64_t>(per_run / per_level));
  }

  std::vector<SplittingRun> runs(R);
  parallel_for(R, opt.workers,
               [&](std::size_t r) { runs[r] = splitting_run(q, scorer, M, split_seed(seed, r), opt); });

  TailEstimate e;
  e.method = TailMethod::kSplitting;
  e.replicates = static_cast<std::int64_t>(R);
  e.seed = seed;
  e.particles = M;
  std::vector<double> logs(R), prefixes(R);
  double levels = 0.0;
  for (std::size_t r = 0; r < R; ++r) {
    logs[r] = runs[r].log_p;
    prefixes[r] = runs[r].log_prefix;
    levels += static_cast<double>(runs[r].levels);
    evaluations += runs[r].evaluations;
  }
  e.mean_levels = levels / static_cast<double>(R);
  e.evaluations = evaluations;
  e.replicate_log_p = logs;

  const double lm = log_mean_exp(logs);
  if (lm == -kInf) {
    // Rule of three on the last stage, scaled by the mean level product.
    e.upper_bound = true;
    e.p_hat = e.ci_low = 0.0;
    e.log_p_hat = e.log_ci_low = -kInf;
    e.log_ci_high = log_mean_exp(prefixes) + std::log(3.0 / (static_cast<double>(M) * R));
    e.ci_high = std::exp(e.log_ci_high);
    return e;
  }
  double ss = 0.0;
  for (double v : logs) {
    const double ratio = v == -kInf ? 0.0 : std::exp(v - lm);
    ss += (ratio - 1.0) * (ratio - 1.0);
  }
  const double rel_var = ss / static_cast<double>(R - 1);
  const double se_log = std::sqrt(rel_var / static_cast<double>(R));
  const double t = boost::math::quantile(boost::math::students_t(static_cast<double>(R - 1)), 0.975);
  e.log_p_hat = lm;
  e.log_ci_low = lm - t * se_log;
  e.log_ci_high = std::min(0.0, lm + t * se_log);
  e.p_hat = std::exp(lm);
  e.ci_low = std::exp(e.log_ci_low);
  e.ci_high = std::exp(e.log_ci_high);
  return e;
}

HFunction kernel_of(const SlopePoint& point) {
  if (point.n < 1 || point.cells < 2) throw InvalidArgument("slope points need n >= 1 and N >= 2");
  return HFunction::by_name(point.test);
}

double point_delta(const AlternativeSpec& spec, const SlopePoint& point) {
  return spec.is_contrast() ? delta_value(spec.schedule(), point.n, point.cells)
                            : density_delta(spec, point.n, point.cells);
}

double leading_shift(const AlternativeSpec& spec, const HFunction& h, const SlopePoint& point,
                     double delta) {
  const double base = shift_xn(h, point.n, point.cells, delta);
  if (!spec.is_contrast()) return base;
  double d2 = 0.0;
  for (double d : spec.contrast()) d2 += d * d;
  return base * d2 / static_cast<double>(point.cells);
}

double empirical_mean(std::int64_t n, std::span<const double> p, const HFunction& h,
                      std::int64_t samples, std::uint64_t seed, const EstimatorOptions& opt) {
  if (samples < 1) throw InvalidArgument("empirical mean needs at least one sample");
  const StatisticTable table(h, n, static_cast<std::int64_t>(p.size()));
  const auto chunk = static_cast<std::int64_t>(std::max<std::int64_t>(1, opt.chunk));
  const auto chunks = static_cast<std::size_t>((samples + chunk - 1) / chunk);
  std::vector<double> sums(chunks, 0.0);
  parallel_for(chunks, opt.workers, [&](std::size_t c) {
    Engine engine(split_seed(seed, c));
    std::vector<std::int64_t> counts(p.size());
    const std::int64_t size = std::min(chunk, samples - static_cast<std::int64_t>(c) * chunk);
    double acc = 0.0;
    for (std::int64_t i = 0; i < size; ++i) {
      sample_multinomial(n, p, engine, counts);
      acc += table(counts);
    }
    sums[c] = acc;
  });
  const double total = std::accumulate(sums.begin(), sums.end(), 0.0);
  return total / static_cast<double>(samples);
}

bool exact_feasible(std::int64_t n, std::int64_t cells) {
  return composition_count(n, static_cast<std::size_t>(cells)) <= kExactCompositionLimit;
}

TailMethod resolve_method(TailMethod requested, std::int64_t n, std::int64_t cells, double z,
                          std::uint64_t budget) {
  if (requested != TailMethod::kAuto) return requested;
  if (exact_feasible(n, cells)) return TailMethod::kExact;
  const double tail = boost::math::cdf(boost::math::complement(boost::math::normal(), z));
  return tail * static_cast<double>(budget) >= 100.0 ? TailMethod::kNaive : TailMethod::kSplitting;
}

void attach_slope(ExperimentPoint& out) {
  out.slope_empirical = -out.tail.log_p_hat;
  out.slope_ci_low = -out.tail.log_ci_high;
  out.slope_ci_high = -out.tail.log_ci_low;
}

void attach_prediction(ExperimentPoint& out, const HFunction& h, const ExperimentOptions& opt) {
  try {
    const auto pred = predict_alpha_slope(parse_test_kind(out.test), out.family, out.n, out.cells,
                                          out.delta, &h, opt.prediction);
    out.slope_predicted = pred.value;
    out.regime = to_string(pred.regime);
  } catch (const OpenProblem& e) {
    out.regime = std::string("OPEN_PROBLEM: ") + e.what();
  } catch (const InvalidArgument& e) {
    out.regime = std::string("REFUSED: ") + e.what();
  }
}

ExperimentPoint start_point(const SlopePoint& point, double delta) {
  ExperimentPoint out;
  out.n = point.n;
  out.cells = point.cells;
  out.delta = delta;
  out.lambda = static_cast<double>(point.n) / static_cast<double>(point.cells);
  out.test = point.test;
  out.family = point.family;
  return out;
}

}  // namespace

GroupedCounts sample_multinomial(std::int64_t n, std::span<const double> p, std::uint64_t seed) {
  if (n < 0) throw InvalidArgument("sample size must be >= 0");
  check_probabilities(p);
  Engine engine(seed);
  std::vector<std::int64_t> counts(p.size());
  sample_multinomial(n, p, engine, counts);
  return GroupedCounts(std::move(counts));
}

void sample_multinomial(std::int64_t n, std::span<const double> p, Engine& engine,
                        std::span<std::int64_t> out) {
  std::int64_t left = n;
  double rest = 1.0;
  const std::size_t N = p.size();
  for (std::size_t m = 0; m < N; ++m) {
    if (left == 0 || m + 1 == N) {
      out[m] = left;
      left = 0;
      continue;
    }
    const double q = rest > 0.0 ? std::clamp(p[m] / rest, 0.0, 1.0) : 1.0;
    std::int64_t k = 0;
    if (q >= 1.0) {
      k = left;
    } else if (q > 0.0) {
      k = std::binomial_distribution<std::int64_t>(left, q)(engine);
    }
    out[m] = k;
    left -= k;
    rest -= p[m];
  }
}

bool reaches(double s, double threshold, bool strict) {
  if (threshold == kInf) return false;
  if (threshold == -kInf) return !strict || s > threshold;
  const double tol = kTieTolerance * std::max(1.0, std::abs(threshold));
  return strict ? s > threshold + tol : s >= threshold - tol;
}

StatisticTable::StatisticTable(const HFunction& h, std::int64_t n, std::int64_t cells)
    : n_(n), cells_(cells) {
  if (n < 1 || cells < 1) throw InvalidArgument("statistic table needs n >= 1 and N >= 1");
  const double lambda = static_cast<double>(n) / static_cast<double>(cells);
  table_.resize(static_cast<std::size_t>(n) + 1);
  const bool lr = h.name() == "lr";
  for (std::int64_t k = 0; k <= n; ++k) {
    const double u = static_cast<double>(k);
    if (lr) {
      const double r = u / lambda - 1.0;
      table_[static_cast<std::size_t>(k)] =
          k == 0 ? 2.0 * lambda : 2.0 * lambda * ((1.0 + r) * std::log1p(r) - r);
    } else {
      table_[static_cast<std::size_t>(k)] = h(u, lambda);
    }
  }
}

double StatisticTable::operator()(std::span<const std::int64_t> counts) const {
  double s = 0.0;
  for (auto c : counts) s += table_[static_cast<std::size_t>(c)];
  return s;
}

std::string to_string(TailMethod m) {
  switch (m) {
    case TailMethod::kNaive: return "NAIVE";
    case TailMethod::kSplitting: return "SPLITTING";
    case TailMethod::kExact: return "EXACT";
    case TailMethod::kAuto: return "AUTO";
  }
  return "?";
}

TailMethod parse_tail_method(const std::string& text) {
  if (text == "NAIVE" || text == "naive") return TailMethod::kNaive;
  if (text == "SPLITTING" || text == "splitting") return TailMethod::kSplitting;
  if (text == "EXACT" || text == "exact") return TailMethod::kExact;
  if (text == "AUTO" || text == "auto") return TailMethod::kAuto;
  throw InvalidArgument("unknown method '" + text + "'");
}

TailEstimate exact_tail(const TailQuery& query) {
  check_query(query);
  const auto N = query.p.size();
  const std::uint64_t count = composition_count(query.n, N);
  if (count > kExactCompositionLimit) {
    throw InvalidArgument("instance too large for exact enumeration: " + std::to_string(count) +
                          " compositions");
  }
  const StatisticTable table(query.stat, query.n, static_cast<std::int64_t>(N));
  const Scorer scorer = make_scorer(query, table);
  long double total = 0.0L;
  for_each_composition(query.n, N, [&](std::span<const std::int64_t> eta) {
    if (scorer.hit(scorer.score(eta))) total += multinomial_pmf(eta, query.p);
  });
  TailEstimate e = point_mass(std::clamp(static_cast<double>(total), 0.0, 1.0), TailMethod::kExact, 0);
  e.replicates = static_cast<std::int64_t>(count);
  e.evaluations = count;
  return e;
}

TailEstimate exact_tail(std::int64_t n, std::int64_t cells, std::span<const double> p,
                        const HFunction& stat, double threshold, bool strict) {
  if (cells < 1 || static_cast<std::size_t>(cells) != p.size()) {
    throw InvalidArgument("probability vector length differs from N");
  }
  TailQuery q{n, std::vector<double>(p.begin(), p.end()), stat, threshold, TailSide::kUpper, strict};
  return exact_tail(q);
}

double exact_mean(std::int64_t n, std::span<const double> p, const HFunction& stat) {
  if (n < 1) throw InvalidArgument("exact mean needs n >= 1");
  check_probabilities(p);
  const std::uint64_t count = composition_count(n, p.size());
  if (count > kExactCompositionLimit) {
    throw InvalidArgument("instance too large for exact enumeration: " + std::to_string(count) +
                          " compositions");
  }
  const StatisticTable table(stat, n, static_cast<std::int64_t>(p.size()));
  long double total = 0.0L;
  for_each_composition(n, p.size(), [&](std::span<const std::int64_t> eta) {
    total += multinomial_pmf(eta, p) * table(eta);
  });
  return static_cast<double>(total);
}

TailEstimate estimate_tail(const TailQuery& query, TailMethod method, std::uint64_t budget,
                           std::uint64_t seed, const EstimatorOptions& options) {
  check_query(query);
  if (budget < 1) throw InvalidArgument("budget must be >= 1");
  if (method == TailMethod::kAuto) {
    method = exact_feasible(query.n, static_cast<std::int64_t>(query.p.size())) ? TailMethod::kExact
                                                                                 : TailMethod::kSplitting;
  }
  switch (method) {
    case TailMethod::kExact: {
      auto e = exact_tail(query);
      e.seed = seed;
      return e;
    }
    case TailMethod::kNaive: return naive_tail(query, budget, seed, options);
    case TailMethod::kSplitting: return splitting_tail(query, budget, seed, options);
    case TailMethod::kAuto: break;
  }
  throw InvalidArgument("unknown method");
}

std::string to_string(ThresholdMode m) {
  switch (m) {
    case ThresholdMode::kPoissonShift: return "poisson_shift";
    case ThresholdMode::kExactMean: return "exact_mean";
    case ThresholdMode::kEmpiricalMean: return "empirical_mean";
  }
  return "?";
}

ThresholdMode parse_threshold_mode(const std::string& text) {
  if (text == "poisson_shift") return ThresholdMode::kPoissonShift;
  if (text == "exact_mean") return ThresholdMode::kExactMean;
  if (text == "empirical_mean") return ThresholdMode::kEmpiricalMean;
  throw InvalidArgument("unknown threshold mode '" + text + "'");
}

ExperimentPoint estimate_alpha_slope(const SlopePoint& point, const AlternativeSpec& spec,
                                     std::uint64_t budget, std::uint64_t seed,
                                     const ExperimentOptions& options) {
  const HFunction h = kernel_of(point);
  const double delta = point_delta(spec, point);
  ExperimentPoint out = start_point(point, delta);
  const auto p1 = cell_probabilities(spec, point.n, point.cells);
  const std::vector<double> p0(static_cast<std::size_t>(point.cells),
                               1.0 / static_cast<double>(point.cells));
  const auto null = null_moments(h, point.n, point.cells);
  out.x_n = leading_shift(spec, h, point, delta);

  switch (options.threshold_mode) {
    case ThresholdMode::kPoissonShift:
      out.threshold = null.mean + out.x_n * std::sqrt(null.var);
      break;
    case ThresholdMode::kExactMean:
      out.threshold = exact_mean(point.n, p1, h);
      break;
    case ThresholdMode::kEmpiricalMean:
      out.threshold = empirical_mean(point.n, p1, h, options.mean_samples,
                                     split_seed(seed, 0xE1E1E1E1ULL), options.estimator);
      break;
  }
  const double z = (out.threshold - null.mean) / std::sqrt(null.var);
  const TailMethod method = resolve_method(options.method, point.n, point.cells, z, budget);
  const TailQuery query{point.n, p0, h, out.threshold, TailSide::kUpper, false};
  out.tail = estimate_tail(query, method, budget, seed, options.estimator);
  attach_slope(out);
  attach_prediction(out, h, options);
  return out;
}

ExperimentPoint estimate_beta_slope(const SlopePoint& point, const AlternativeSpec& spec,
                                    std::uint64_t budget, std::uint64_t seed,
                                    const ExperimentOptions& options) {
  const HFunction h = kernel_of(point);
  const double delta = point_delta(spec, point);
  ExperimentPoint out = start_point(point, delta);
  const auto p1 = cell_probabilities(spec, point.n, point.cells);
  const std::vector<double> p0(static_cast<std::size_t>(point.cells),
                               1.0 / static_cast<double>(point.cells));
  const auto null = null_moments(h, point.n, point.cells);
  out.x_n = leading_shift(spec, h, point, delta);

  switch (options.threshold_mode) {
    case ThresholdMode::kPoissonShift:
      out.threshold = null.mean;
      break;
    case ThresholdMode::kExactMean:
      out.threshold = exact_mean(point.n, p0, h);
      break;
    case ThresholdMode::kEmpiricalMean:
      out.threshold = empirical_mean(point.n, p0, h, options.mean_samples,
                                     split_seed(seed, 0xE0E0E0E0ULL), options.estimator);
      break;
  }
  const TailMethod method = resolve_method(options.method, point.n, point.cells, out.x_n, budget);
  const TailQuery query{point.n, p1, h, out.threshold, TailSide::kLower, false};
  out.tail = estimate_tail(query, method, budget, seed, options.estimator);
  attach_slope(out);
  attach_prediction(out, h, options);
  return out;
}

TailEstimate power_at_critical(const SlopePoint& point, const AlternativeSpec& spec, double c,
                               std::uint64_t budget, std::uint64_t seed,
                               const ExperimentOptions& options) {
  if (std::isnan(c)) throw InvalidArgument("critical offset is NaN");
  if (c == kInf) return point_mass(0.0, TailMethod::kExact, seed);
  if (c == -kInf) return point_mass(1.0, TailMethod::kExact, seed);
  const HFunction h = kernel_of(point);
  const double delta = point_delta(spec, point);
  const auto p1 = cell_probabilities(spec, point.n, point.cells);
  const auto null = null_moments(h, point.n, point.cells);
  const double x_n = leading_shift(spec, h, point, delta);
  const double threshold = null.mean + (x_n + c) * std::sqrt(null.var);
  TailMethod method = options.method;
  if (method == TailMethod::kAuto) {
    method = exact_feasible(point.n, point.cells) ? TailMethod::kExact : TailMethod::kNaive;
  }
  const TailQuery query{point.n, p1, h, threshold, TailSide::kUpper, true};
  return estimate_tail(query, method, budget, seed, options.estimator);
}

}  // namespace gofslope
