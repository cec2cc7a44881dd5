#include "gofslope/alternatives.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "gofslope/errors.hpp"
#include "gofslope/rng.hpp"

namespace gofslope {
namespace {

double simpson_step(const std::function<double(double)>& f, double a, double b, double fa,
                    double fm, double fb, double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double diff = left + right - whole;
  if (depth <= 0 || std::abs(diff) <= 15.0 * tol) return left + right + diff / 15.0;
  return simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

enum class Trend { kDecay, kGrowth, kFlat, kMixed };

Trend trend_of(const std::vector<double>& v) {
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  if (*lo > 0.0 && *hi / *lo < kTrendFactor) return Trend::kFlat;
  bool dec = true, inc = true;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (!(v[i] < v[i - 1])) dec = false;
    if (!(v[i] > v[i - 1])) inc = false;
  }
  if (dec && v.front() >= kTrendFactor * v.back()) return Trend::kDecay;
  if (inc && v.back() >= kTrendFactor * v.front()) return Trend::kGrowth;
  return Trend::kMixed;
}

std::string format_gamma(double g) {
  std::ostringstream os;
  os.precision(12);
  os << g;
  return os.str();
}

}  // namespace

DirectionFunction::DirectionFunction(std::string name, std::function<double(double)> fn,
                                     double sup_bound, int k)
    : name_(std::move(name)), fn_(std::move(fn)), sup_bound_(sup_bound), frequency_(k) {}

DirectionFunction DirectionFunction::cosine(int k) {
  if (k < 1) throw InvalidArgument("cosine direction needs frequency k >= 1");
  const double w = 2.0 * std::numbers::pi * k;
  return DirectionFunction(
      "cos" + std::to_string(k), [w](double x) { return std::numbers::sqrt2 * std::cos(w * x); },
      std::numbers::sqrt2, k);
}

DirectionFunction DirectionFunction::custom(std::string name, std::function<double(double)> fn,
                                            double sup_bound) {
  if (!fn) throw InvalidArgument("direction function is empty");
  if (!(sup_bound > 0.0) || !std::isfinite(sup_bound)) {
    throw InvalidArgument("direction sup bound must be positive and finite");
  }
  const double mean = integrate(fn, 0.0, 1.0, 1e-13);
  const double norm2 = integrate([&fn](double x) { return fn(x) * fn(x); }, 0.0, 1.0, 1e-12);
  if (std::abs(mean) > 1e-10) throw InvalidArgument("direction must integrate to 0 over [0,1]");
  if (std::abs(norm2 - 1.0) > 1e-8) throw InvalidArgument("direction must have unit L2 norm");
  for (int i = 0; i <= 4096; ++i) {
    if (std::abs(fn(i / 4096.0)) > sup_bound * (1.0 + 1e-12)) {
      throw InvalidArgument("direction exceeds its declared sup bound");
    }
  }
  return DirectionFunction(std::move(name), std::move(fn), sup_bound, 0);
}

DeltaSchedule DeltaSchedule::power_law(double gamma) {
  if (!(gamma > 0.0)) throw InvalidArgument("power-law exponent gamma must be positive");
  DeltaSchedule s;
  s.kind_ = Kind::kPowerLaw;
  s.gamma_ = gamma;
  return s;
}

DeltaSchedule DeltaSchedule::pitman() {
  DeltaSchedule s;
  s.kind_ = Kind::kPitman;
  return s;
}

DeltaSchedule DeltaSchedule::constant(double delta) {
  if (!(delta >= 0.0) || !std::isfinite(delta)) throw InvalidArgument("delta must be >= 0");
  DeltaSchedule s;
  s.kind_ = Kind::kConstant;
  s.values_ = {{0, delta}};
  return s;
}

DeltaSchedule DeltaSchedule::explicit_values(std::vector<std::pair<std::int64_t, double>> values) {
  if (values.empty()) throw InvalidArgument("explicit delta schedule is empty");
  for (const auto& [n, d] : values) {
    if (n < 1 || !(d >= 0.0) || !std::isfinite(d)) {
      throw InvalidArgument("explicit delta entries need n >= 1 and delta >= 0");
    }
  }
  std::sort(values.begin(), values.end());
  DeltaSchedule s;
  s.kind_ = Kind::kExplicit;
  s.values_ = std::move(values);
  return s;
}

AlternativeSpec::AlternativeSpec(DirectionFunction direction, DeltaSchedule schedule)
    : direction_(std::move(direction)), schedule_(std::move(schedule)) {}

AlternativeSpec::AlternativeSpec(std::vector<double> contrast, DeltaSchedule schedule)
    : contrast_(std::move(contrast)), schedule_(std::move(schedule)) {
  if (contrast_.empty()) throw InvalidArgument("cell contrast is empty");
  double total = 0.0, scale = 0.0;
  for (double d : contrast_) {
    total += d;
    scale = std::max(scale, std::abs(d));
  }
  if (std::abs(total) > 1e-9 * std::max(1.0, scale) * static_cast<double>(contrast_.size())) {
    throw InvalidArgument("cell contrast must sum to zero");
  }
}

const DirectionFunction& AlternativeSpec::direction() const {
  if (!direction_) throw InvalidArgument("alternative is a cell contrast, not a density");
  return *direction_;
}

std::string to_string(const FamilyTag& tag) {
  switch (tag.kind) {
    case FamilyTag::Kind::kUndetectable: return "UNDETECTABLE";
    case FamilyTag::Kind::kPitman: return "PITMAN";
    case FamilyTag::Kind::kJO: return "J_O";
    case FamilyTag::Kind::kJGamma: return "J_GAMMA(" + format_gamma(tag.gamma) + ")";
    case FamilyTag::Kind::kJBar18: return "J_BAR_1_8";
    case FamilyTag::Kind::kFixed: return "FIXED";
  }
  return "?";
}

FamilyTag parse_family(const std::string& text) {
  using K = FamilyTag::Kind;
  if (text == "UNDETECTABLE") return {K::kUndetectable, 0.0};
  if (text == "PITMAN") return {K::kPitman, 0.0};
  if (text == "J_O") return {K::kJO, 0.0};
  if (text == "J_BAR_1_8") return {K::kJBar18, 0.0};
  if (text == "FIXED") return {K::kFixed, 0.0};
  if (text.rfind("J_GAMMA(", 0) == 0 && text.back() == ')') {
    const std::string inner = text.substr(8, text.size() - 9);
    try {
      std::size_t used = 0;
      const double g = std::stod(inner, &used);
      if (used == inner.size() && g > 0.125 && g <= 1.0 / 6.0 + 1e-12) return {K::kJGamma, g};
    } catch (const std::exception&) {
    }
  }
  throw InvalidArgument("unknown family tag '" + text + "'");
}

double delta_value(const DeltaSchedule& schedule, std::int64_t n, std::int64_t cells) {
  if (n < 1 || cells < 1) throw InvalidArgument("delta schedule needs n >= 1 and N >= 1");
  const double nd = static_cast<double>(n);
  const double lambda = nd / static_cast<double>(cells);
  switch (schedule.kind()) {
    case DeltaSchedule::Kind::kPowerLaw:
      return std::pow(nd * lambda * lambda, -*schedule.gamma());
    case DeltaSchedule::Kind::kPitman:
      return std::pow(nd * lambda, -0.25);
    case DeltaSchedule::Kind::kConstant:
      return schedule.values().front().second;
    case DeltaSchedule::Kind::kExplicit: {
      const auto& v = schedule.values();
      auto it = std::lower_bound(v.begin(), v.end(), std::make_pair(n, -1.0));
      if (it == v.end() || it->first != n) {
        throw InvalidArgument("explicit delta schedule has no entry for n = " + std::to_string(n));
      }
      return it->second;
    }
  }
  return 0.0;
}

double density_delta(const AlternativeSpec& spec, std::int64_t n, std::int64_t cells) {
  const auto kind = spec.schedule().kind();
  const bool needs_cells =
      kind == DeltaSchedule::Kind::kPowerLaw || kind == DeltaSchedule::Kind::kPitman;
  if (needs_cells && cells < 1) {
    throw InvalidArgument("this delta schedule depends on N; pass the cell count");
  }
  return delta_value(spec.schedule(), n, needs_cells ? cells : 1);
}

double eval_density(const AlternativeSpec& spec, std::int64_t n, double x, std::int64_t cells) {
  const auto& l = spec.direction();
  const double delta = density_delta(spec, n, cells);
  if (delta * l.sup_bound() > 1.0) {
    throw InvalidArgument("alternative density goes negative: delta * sup|l| > 1");
  }
  return 1.0 + delta * l(x);
}

double integrate(const std::function<double(double)>& f, double a, double b, double tol) {
  const double fa = f(a);
  const double fb = f(b);
  const double fm = f(0.5 * (a + b));
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return simpson_step(f, a, b, fa, fm, fb, whole, tol, 48);
}

std::vector<double> cell_probabilities(const AlternativeSpec& spec, std::int64_t n,
                                       std::int64_t cells) {
  if (cells < 1) throw InvalidArgument("cell count must be positive");
  const double delta = delta_value(spec.schedule(), n, cells);
  const auto N = static_cast<std::size_t>(cells);
  const double inv_n = 1.0 / static_cast<double>(cells);
  std::vector<double> p(N);
  if (spec.is_contrast()) {
    if (spec.contrast().size() != N) {
      throw InvalidArgument("cell contrast length differs from N = " + std::to_string(cells));
    }
    for (std::size_t m = 0; m < N; ++m) p[m] = inv_n * (1.0 + delta * spec.contrast()[m]);
  } else {
    const auto& l = spec.direction();
    if (delta * l.sup_bound() > 1.0) {
      throw InvalidArgument("alternative density goes negative: delta * sup|l| > 1");
    }
    const std::function<double(double)> fl = [&l](double x) { return l(x); };
    for (std::size_t m = 0; m < N; ++m) {
      const double a = static_cast<double>(m) * inv_n;
      const double b = m + 1 == N ? 1.0 : static_cast<double>(m + 1) * inv_n;
      p[m] = inv_n + (delta == 0.0 ? 0.0 : delta * integrate(fl, a, b, 1e-12));
    }
  }
  double total = 0.0;
  for (std::size_t m = 0; m < N; ++m) {
    if (!(p[m] > 0.0)) {
      throw InvalidArgument("cell probability " + std::to_string(m) + " is not positive");
    }
    total += p[m];
  }
  if (std::abs(total - 1.0) > 1e-9) throw NumericalFailure("cell probabilities do not sum to 1");
  return p;
}

double epsilon_contrast(std::span<const double> p) {
  if (p.empty()) throw InvalidArgument("empty probability vector");
  const double N = static_cast<double>(p.size());
  double s = 0.0;
  for (double pm : p) s += (N * pm - 1.0) * (N * pm - 1.0);
  return s / N;
}

FamilyTag classify_family(const DeltaSchedule& schedule, std::span<const std::int64_t> n_grid,
                          const std::function<std::int64_t(std::int64_t)>& cells_of_n) {
  using K = FamilyTag::Kind;
  if (n_grid.size() < 3) throw InvalidArgument("family classification needs >= 3 grid points");
  for (std::size_t i = 1; i < n_grid.size(); ++i) {
    if (n_grid[i] <= n_grid[i - 1]) throw InvalidArgument("grid must be strictly increasing");
  }
  const std::size_t size = n_grid.size();
  std::vector<double> delta(size), pitman(size), jo(size), bar(size);
  for (std::size_t i = 0; i < size; ++i) {
    const std::int64_t n = n_grid[i];
    const std::int64_t cells = cells_of_n(n);
    if (cells < 1) throw InvalidArgument("N-of-n rule produced N < 1");
    const double nd = static_cast<double>(n);
    const double lambda = nd / static_cast<double>(cells);
    delta[i] = delta_value(schedule, n, cells);
    pitman[i] = delta[i] * std::pow(nd * lambda, 0.25);
    jo[i] = delta[i] * std::pow(nd * std::max(1.0, lambda * lambda), 1.0 / 6.0);
    bar[i] = std::pow(nd * lambda * lambda, -0.125);
  }

  const auto [dmin, dmax] = std::minmax_element(delta.begin(), delta.end());
  if (*dmax - *dmin <= 1e-12 * std::max(1.0, *dmax)) return {K::kFixed, 0.0};
  if (*dmin <= 0.0) throw Unclassified("delta vanishes on part of the grid");

  switch (trend_of(pitman)) {
    case Trend::kDecay: return {K::kUndetectable, 0.0};
    case Trend::kFlat: return {K::kPitman, 0.0};
    case Trend::kMixed:
      throw Unclassified("delta*(n*lambda)^(1/4) has no clear trend along the grid");
    case Trend::kGrowth: break;
  }
  if (trend_of(jo) == Trend::kDecay) return {K::kJO, 0.0};
  if (schedule.kind() == DeltaSchedule::Kind::kPowerLaw) {
    const double g = *schedule.gamma();
    if (g > 0.125 && g <= 1.0 / 6.0) return {K::kJGamma, g};
  }
  bool above = true;
  for (std::size_t i = size / 2; i < size; ++i) {
    if (delta[i] < bar[i] * (1.0 - 1e-12)) above = false;
  }
  if (above) return {K::kJBar18, 0.0};
  throw Unclassified("intermediate schedule fits none of J_O, J_GAMMA, J_BAR_1_8");
}

StripReport strip_condition(double gamma, std::int64_t n, std::int64_t cells, double slack) {
  if (!(gamma > 0.125 && gamma <= 1.0 / 6.0 + 1e-15)) {
    throw InvalidArgument("strip condition defined for gamma in (1/8, 1/6]");
  }
  if (n < 1 || cells < 1) throw InvalidArgument("strip condition needs n >= 1 and N >= 1");
  if (!(slack >= 1.0)) throw InvalidArgument("strip slack must be >= 1");
  StripReport r;
  r.gamma = gamma;
  r.slack = slack;
  r.lower_exponent = (1.0 - 6.0 * gamma) / (1.0 - 4.0 * gamma);
  r.upper_exponent = 3.0 * (1.0 - 4.0 * gamma) / (4.0 * (1.0 - 2.0 * gamma));
  const double nd = static_cast<double>(n);
  const double Nd = static_cast<double>(cells);
  r.lower_bound = std::pow(nd, r.lower_exponent);
  r.upper_bound = std::pow(nd, r.upper_exponent);
  r.lower_margin = Nd / r.lower_bound;
  r.upper_margin = r.upper_bound / Nd;
  r.inside_raw = r.lower_margin > 1.0 && r.upper_margin > 1.0;
  r.inside = r.lower_margin >= slack && r.upper_margin >= slack;
  return r;
}

std::vector<double> sample_alternative(const AlternativeSpec& spec, std::int64_t n,
                                       std::uint64_t seed, std::int64_t cells) {
  if (n < 0) throw InvalidArgument("sample size must be >= 0");
  if (n == 0) return {};
  const auto& l = spec.direction();
  const double delta = density_delta(spec, n, cells);
  if (delta * l.sup_bound() > 1.0) {
    throw InvalidArgument("alternative density goes negative: delta * sup|l| > 1");
  }
  auto density = [&](double x) { return 1.0 + delta * l(x); };

  // Tabulate the CDF on 2^16 uniform intervals (Simpson per interval).
  constexpr std::size_t kIntervals = std::size_t{1} << 16;
  const double h = 1.0 / static_cast<double>(kIntervals);
  std::vector<double> xs(kIntervals + 1), cdf(kIntervals + 1), f(kIntervals + 1);
  for (std::size_t i = 0; i <= kIntervals; ++i) {
    xs[i] = static_cast<double>(i) * h;
    f[i] = density(xs[i]);
  }
  cdf[0] = 0.0;
  for (std::size_t i = 0; i < kIntervals; ++i) {
    const double mid = density(xs[i] + 0.5 * h);
    cdf[i + 1] = cdf[i] + h / 6.0 * (f[i] + 4.0 * mid + f[i + 1]);
  }
  const double total = cdf.back();
  for (std::size_t i = 1; i <= kIntervals; ++i) {
    cdf[i] /= total;
    if (!(cdf[i] > cdf[i - 1])) {
      throw NumericalFailure("CDF tabulation is not strictly increasing; cannot invert");
    }
  }
  cdf.back() = 1.0;

  // Monotone (Fritsch–Butland) cubic Hermite interpolation of x(F).
  std::vector<double> secant(kIntervals), slope(kIntervals + 1);
  for (std::size_t i = 0; i < kIntervals; ++i) secant[i] = h / (cdf[i + 1] - cdf[i]);
  slope[0] = secant[0];
  slope[kIntervals] = secant[kIntervals - 1];
  for (std::size_t i = 1; i < kIntervals; ++i) {
    slope[i] = 2.0 / (1.0 / secant[i - 1] + 1.0 / secant[i]);
  }

  Engine rng = make_engine(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<double> out(static_cast<std::size_t>(n));
  for (auto& x : out) {
    const double u = unif(rng);
    auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    std::size_t i = static_cast<std::size_t>(std::distance(cdf.begin(), it));
    i = std::clamp<std::size_t>(i, 1, kIntervals) - 1;
    const double dF = cdf[i + 1] - cdf[i];
    const double t = (u - cdf[i]) / dF;
    const double t2 = t * t, t3 = t2 * t;
    const double h00 = 2 * t3 - 3 * t2 + 1, h10 = t3 - 2 * t2 + t;
    const double h01 = -2 * t3 + 3 * t2, h11 = t3 - t2;
    x = h00 * xs[i] + h10 * dF * slope[i] + h01 * xs[i + 1] + h11 * dF * slope[i + 1];
    x = std::clamp(x, 0.0, 1.0);
  }
  return out;
}

}  // namespace gofslope
