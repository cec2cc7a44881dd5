#include "commands.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include <boost/math/distributions/normal.hpp>
#include <json.hpp>

#include "csv.hpp"
#include "gofslope/enumeration.hpp"
#include "gofslope/grouping.hpp"
#include "gofslope/poisson_moments.hpp"
#include "gofslope/rng.hpp"

namespace gofslope::cli {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

constexpr const char* kSimulateCsv = "simulate.csv";
constexpr const char* kSimulateJson = "simulate.json";
constexpr const char* kReplicationsCsv = "replications.csv";
constexpr const char* kPredictJson = "predict.json";

double point_delta(const AlternativeSpec& spec, const GridPoint& p) {
  return spec.is_contrast() ? delta_value(spec.schedule(), p.n, p.cells)
                            : density_delta(spec, p.n, p.cells);
}

double contrast_d2(const AlternativeSpec& spec) {
  if (!spec.is_contrast()) return 1.0;
  double d2 = 0.0;
  for (double d : spec.contrast()) d2 += d * d;
  return d2 / static_cast<double>(spec.contrast().size());
}

double lambda_of(const GridPoint& p) {
  return static_cast<double>(p.n) / static_cast<double>(p.cells);
}

json number_or_null(double v) {
  if (!std::isfinite(v)) return format_double(v);
  return v;
}

LambdaRegime resolve_lambda_regime(const ExperimentConfig& cfg) {
  if (cfg.lambda_regime == "fixed") return LambdaRegime::kFixed;
  if (cfg.lambda_regime == "growing") return LambdaRegime::kGrowing;
  // auto: fixed only when several sample sizes share one λ
  std::set<std::int64_t> ns;
  const double l0 = lambda_of(cfg.grid.front());
  bool same = true;
  for (const auto& p : cfg.grid) {
    ns.insert(p.n);
    same = same && std::abs(lambda_of(p) - l0) <= 1e-9 * l0;
  }
  return same && ns.size() > 1 ? LambdaRegime::kFixed : LambdaRegime::kGrowing;
}

Assertion assertion_for(const std::string& test) {
  if (test == "chi2") return Assertion::kA2;
  if (test == "lr") return Assertion::kA3;
  return Assertion::kA1;
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw NumericalFailure("cannot write '" + path.string() + "'");
  f << text;
  if (!f) throw NumericalFailure("write failed for '" + path.string() + "'");
}

fs::path prepare_out_dir(const std::string& dir) {
  fs::path p(dir);
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec) throw NumericalFailure("cannot create output directory '" + dir + "': " + ec.message());
  return p;
}

std::string fixed6(double v) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(6) << v;
  return s.str();
}

// ---- predict ----------------------------------------------------------------

json prediction_entry(const std::string& test, const FamilyTag& family, const GridPoint& p,
                      double delta, const PredictionOptions& opt) {
  json e{{"test", test}};
  const HFunction h = HFunction::by_name(test);
  try {
    const auto pred = predict_alpha_slope(parse_test_kind(test), family, p.n, p.cells, delta, &h, opt);
    e["status"] = "ok";
    e["regime"] = to_string(pred.regime);
    e["value"] = pred.value ? json(*pred.value) : json(nullptr);
    e["normalized"] = pred.normalized ? json(*pred.normalized) : json(nullptr);
    e["rho"] = pred.rho ? json(*pred.rho) : json(nullptr);
  } catch (const OpenProblem& ex) {
    e["status"] = "OPEN_PROBLEM";
    e["message"] = ex.what();
  } catch (const InvalidArgument& ex) {
    e["status"] = "REFUSED";
    e["message"] = ex.what();
  }
  return e;
}

json domain_entry(const std::string& test, double x, const GridPoint& p, double theta) {
  const Assertion a = assertion_for(test);
  json d{{"assertion", to_string(a)}, {"x_n", number_or_null(x)}};
  if (!(x > 1.0)) {
    d["status"] = "x_n <= 1: outside every large-deviation statement";
    d["pass"] = false;
    return d;
  }
  const auto r = tail_approx(a, x, p.n, p.cells, {theta, 1.0});
  d["status"] = "ok";
  d["pass"] = r.domain.pass();
  d["log_prob"] = r.approx.log_prob;
  d["leading"] = r.approx.leading;
  d["correction_bound"] = r.approx.correction_bound;
  json conds = json::array();
  for (const auto& c : r.domain.conditions) {
    conds.push_back({{"name", c.name}, {"relation", c.relation}, {"margin", number_or_null(c.margin)},
                     {"pass", c.pass}});
  }
  d["conditions"] = conds;
  return d;
}

std::string efficiency_kind_name(EfficiencyKind k) {
  return k == EfficiencyKind::kAreAlpha ? "ARE_ALPHA" : "AIE";
}

json efficiency_entry(EfficiencyKind kind, const std::string& second, const FamilyTag& family,
                      const GridPoint& p, double delta, LambdaRegime regime, bool strip_ok,
                      const PredictionOptions& opt) {
  json e{{"first", "chi2"}, {"second", second}, {"kind", efficiency_kind_name(kind)}};
  EfficiencyQuery q;
  q.kind = kind;
  q.family = family;
  q.lambda = lambda_of(p);
  q.lambda_regime = regime;
  q.delta = delta;
  q.strip_ok = strip_ok;
  try {
    const auto v = predict_efficiency(q, HFunction::by_name(second), opt);
    e["status"] = "ok";
    switch (v.kind) {
      case EfficiencyValue::Kind::kValue:
        e["marker"] = "VALUE";
        e["value"] = v.value;
        break;
      case EfficiencyValue::Kind::kZero:
        e["marker"] = "ZERO";
        e["value"] = 0.0;
        break;
      case EfficiencyValue::Kind::kUnbounded:
        e["marker"] = "UNBOUNDED";
        e["value"] = "inf";
        break;
    }
  } catch (const OpenProblem& ex) {
    e["status"] = "OPEN_PROBLEM";
    e["message"] = ex.what();
  } catch (const InvalidArgument& ex) {
    e["status"] = "REFUSED";
    e["message"] = ex.what();
  }
  return e;
}

// ---- simulate ---------------------------------------------------------------

struct SimRow {
  std::vector<std::string> fields;
};

struct ReplicationRow {
  std::vector<std::string> fields;
};

struct PointOutput {
  std::vector<SimRow> rows;
  std::vector<ReplicationRow> replications;
};

const std::vector<std::string>& replication_columns() {
  static const std::vector<std::string> cols{"schema_version", "point", "n", "N", "test",
                                             "quantity", "method", "offset", "replicate",
                                             "log_p"};
  return cols;
}

struct RowContext {
  std::size_t index = 0;
  GridPoint point;
  double delta = 0.0;
  std::string test;
  std::string family;
  Quantity quantity = Quantity::kAlpha;
  TailMethod method = TailMethod::kAuto;
  std::optional<double> offset;
  std::uint64_t seed = 0;
};

std::vector<std::string> base_fields(const RowContext& c) {
  std::vector<std::string> f(simulate_columns().size());
  f[0] = std::to_string(kSchemaVersion);
  f[1] = std::to_string(c.index);
  f[2] = std::to_string(c.point.n);
  f[3] = std::to_string(c.point.cells);
  f[4] = format_double(lambda_of(c.point));
  f[5] = format_double(c.delta);
  f[6] = c.test;
  f[7] = c.family;
  f[8] = to_string(c.quantity);
  f[9] = to_string(c.method);
  f[10] = format_optional(c.offset);
  f[24] = std::to_string(c.seed);
  return f;
}

void fill_tail(std::vector<std::string>& f, const TailEstimate& t) {
  f[9] = to_string(t.method);
  f[13] = format_double(t.p_hat);
  f[14] = format_double(t.log_p_hat);
  f[15] = format_double(t.ci_low);
  f[16] = format_double(t.ci_high);
  f[22] = std::to_string(t.replicates);
  f[23] = std::to_string(t.evaluations);
  f[25] = t.upper_bound ? "true" : "false";
}

PointOutput run_point(const ExperimentConfig& cfg, const AlternativeSpec& spec,
                      const FamilyTag& family, std::size_t index, int estimator_workers,
                      bool timing, bool verbose) {
  PointOutput out;
  const GridPoint& gp = cfg.grid[index];
  const std::uint64_t point_seed = split_seed(cfg.seed, index);
  const double delta = point_delta(spec, gp);
  ExperimentOptions opt;
  opt.threshold_mode = cfg.threshold_mode;
  opt.mean_samples = cfg.mean_samples;
  opt.estimator = cfg.estimator;
  opt.estimator.workers = estimator_workers;
  opt.prediction = cfg.prediction;

  std::uint64_t sub = 0;
  for (const auto& test : cfg.tests) {
    for (const auto method : cfg.methods) {
      for (const auto quantity : cfg.quantities) {
        std::vector<std::optional<double>> offsets{std::nullopt};
        if (quantity == Quantity::kPower) {
          offsets.assign(cfg.power_offsets.begin(), cfg.power_offsets.end());
        }
        for (const auto& offset : offsets) {
          RowContext ctx{index, gp, delta, test, to_string(family), quantity, method, offset,
                         split_seed(point_seed, sub++)};
          auto f = base_fields(ctx);
          opt.method = method;
          const SlopePoint sp{gp.n, gp.cells, test, family};
          const auto t0 = std::chrono::steady_clock::now();
          std::vector<double> rep_log_p;
          try {
            if (quantity == Quantity::kPower) {
              const HFunction h = HFunction::by_name(test);
              const auto null = null_moments(h, gp.n, gp.cells);
              const double x = shift_xn(h, gp.n, gp.cells, delta) * contrast_d2(spec);
              f[11] = format_double(null.mean + (x + *offset) * std::sqrt(null.var));
              f[12] = format_double(x);
              const auto t = power_at_critical(sp, spec, *offset, cfg.budget, ctx.seed, opt);
              fill_tail(f, t);
              rep_log_p = t.replicate_log_p;
            } else {
              const auto e = quantity == Quantity::kAlpha
                                 ? estimate_alpha_slope(sp, spec, cfg.budget, ctx.seed, opt)
                                 : estimate_beta_slope(sp, spec, cfg.budget, ctx.seed, opt);
              fill_tail(f, e.tail);
              f[11] = format_double(e.threshold);
              f[12] = format_double(e.x_n);
              f[17] = format_double(e.slope_empirical);
              f[18] = format_double(e.slope_ci_low);
              f[19] = format_double(e.slope_ci_high);
              f[20] = format_optional(e.slope_predicted);
              f[21] = e.regime;
              rep_log_p = e.tail.replicate_log_p;
            }
            f[26] = "ok";
          } catch (const InvalidArgument& ex) {
            f[26] = std::string("error: ") + ex.what();
          } catch (const OpenProblem& ex) {
            f[26] = std::string("error: ") + ex.what();
          } catch (const Unclassified& ex) {
            f[26] = std::string("error: ") + ex.what();
          } catch (const NumericalFailure& ex) {
            f[26] = std::string("error: ") + ex.what();
          }
          if (timing) {
            const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - t0;
            f.push_back(fixed6(dt.count()));
          }
          if (verbose) {
            for (std::size_t r = 0; r < rep_log_p.size(); ++r) {
              out.replications.push_back(
                  {{std::to_string(kSchemaVersion), std::to_string(index), std::to_string(gp.n),
                    std::to_string(gp.cells), test, to_string(quantity), f[9], f[10],
                    std::to_string(r), format_double(rep_log_p[r])}});
            }
          }
          out.rows.push_back({std::move(f)});
        }
      }
    }
  }
  return out;
}

// Keeps the header and the rows whose point index is below `start`.
std::vector<std::vector<std::string>> kept_rows(const fs::path& path, std::int64_t start,
                                                const std::vector<std::string>& header) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return {};
  auto rows = read_csv(in);
  if (rows.empty()) return {};
  if (rows.front() != header) {
    throw InvalidArgument("cannot resume: '" + path.string() + "' has a different header");
  }
  std::vector<std::vector<std::string>> kept;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].size() > 1 && std::stoll(rows[i][1]) < start) kept.push_back(rows[i]);
  }
  return kept;
}

// ---- compare ----------------------------------------------------------------

struct PredKey {
  std::int64_t n;
  std::int64_t cells;
  std::string test;
  auto operator<=>(const PredKey&) const = default;
};

double field_double(const std::vector<std::string>& row, std::size_t i) {
  if (i >= row.size() || row[i].empty()) return std::nan("");
  return parse_double(row[i]);
}

std::string csv_text(const std::vector<std::vector<std::string>>& rows) {
  std::ostringstream s;
  for (const auto& r : rows) write_csv_row(s, r);
  return s.str();
}

std::function<double(double)> parse_cdf(const std::string& spec) {
  std::vector<std::string> parts;
  std::stringstream ss(spec);
  for (std::string item; std::getline(ss, item, ':');) parts.push_back(item);
  if (parts.empty() || parts[0] == "uniform") {
    if (parts.size() > 1) throw InvalidArgument("cdf 'uniform' takes no parameters");
    return [](double x) { return x; };
  }
  if (parts[0] == "exponential" && parts.size() == 2) {
    const double rate = parse_double(parts[1]);
    if (!(rate > 0)) throw InvalidArgument("exponential rate must be positive");
    return [rate](double x) { return x <= 0 ? 0.0 : -std::expm1(-rate * x); };
  }
  if (parts[0] == "normal" && parts.size() == 3) {
    const double mu = parse_double(parts[1]);
    const double sigma = parse_double(parts[2]);
    if (!(sigma > 0)) throw InvalidArgument("normal sigma must be positive");
    const boost::math::normal_distribution<double> dist(mu, sigma);
    return [dist](double x) { return boost::math::cdf(dist, x); };
  }
  throw InvalidArgument("unknown cdf '" + spec +
                        "' (expected uniform, exponential:<rate> or normal:<mu>:<sigma>)");
}

}  // namespace

const std::vector<std::string>& simulate_columns() {
  static const std::vector<std::string> cols{
      "schema_version", "point",          "n",              "N",
      "lambda",         "delta",          "test",           "family",
      "quantity",       "method",         "offset",         "threshold",
      "x_n",            "p_hat",          "log_p_hat",      "ci_low",
      "ci_high",        "slope_empirical", "slope_ci_low",  "slope_ci_high",
      "slope_predicted", "regime",        "replicates",     "evaluations",
      "seed",           "upper_bound",    "status"};
  return cols;
}

ExperimentConfig resolve_config(const GlobalOptions& g) {
  if (!g.config) throw InvalidArgument("--config is required for this command");
  ExperimentConfig cfg = load_config(*g.config);
  if (g.seed) cfg.seed = *g.seed;
  if (g.budget) {
    if (*g.budget < 1) throw InvalidArgument("--budget must be >= 1");
    cfg.budget = *g.budget;
  }
  if (g.workers) {
    if (*g.workers < 1) throw InvalidArgument("--workers must be >= 1");
    cfg.workers = *g.workers;
  }
  return cfg;
}

void cmd_moments(const std::string& kernel, const std::vector<double>& lambdas, std::int64_t cells,
                 double tol, std::ostream& out) {
  if (lambdas.empty()) throw InvalidArgument("--lambda needs at least one value");
  const HFunction h = HFunction::by_name(kernel);
  for (double l : lambdas) {
    if (!(l > 0) || !std::isfinite(l)) throw InvalidArgument("lambda must be positive and finite");
  }
  std::vector<std::vector<std::string>> rows{
      {"schema_version", "kernel", "lambda", "cells", "Eh", "gamma", "sigma2", "rho", "L3N",
       "var_h", "corr_h_xi", "abs_third_g", "truncation_bound", "tail_mass_bound"}};
  for (double l : lambdas) {
    const auto m = moment_summary(h, l, cells, tol);
    rows.push_back({std::to_string(kSchemaVersion), kernel, format_double(l), std::to_string(cells),
                    format_double(m.Eh), format_double(m.gamma_coef), format_double(m.sigma2),
                    format_double(m.rho), format_double(m.L3N), format_double(m.var_h),
                    format_double(m.corr_h_xi), format_double(m.abs_third_g),
                    std::to_string(m.truncation_bound), format_double(m.tail_mass_bound)});
  }
  out << csv_text(rows);
}

void cmd_predict(const GlobalOptions& g, std::ostream& out) {
  const ExperimentConfig cfg = resolve_config(g);
  const FamilyTag family = cfg.resolve_family();
  const AlternativeSpec spec = cfg.alternative();
  const LambdaRegime regime = resolve_lambda_regime(cfg);
  const double d2 = contrast_d2(spec);

  json points = json::array();
  for (std::size_t i = 0; i < cfg.grid.size(); ++i) {
    const GridPoint& p = cfg.grid[i];
    const double delta = point_delta(spec, p);
    const double lambda = lambda_of(p);
    json e{{"point", i},
           {"n", p.n},
           {"N", p.cells},
           {"lambda", lambda},
           {"delta", delta},
           {"family", to_string(family)},
           {"np_slope", static_cast<double>(p.n) * delta * delta * d2 / 2.0},
           {"base", static_cast<double>(p.n) * lambda * std::pow(delta, 4)}};
    bool strip_ok = false;
    if (family.kind == FamilyTag::Kind::kJGamma) {
      const auto s = strip_condition(family.gamma, p.n, p.cells, cfg.prediction.strip_slack);
      strip_ok = s.inside;
      e["strip"] = {{"gamma", s.gamma},
                    {"lower_exponent", s.lower_exponent},
                    {"upper_exponent", s.upper_exponent},
                    {"lower_bound", s.lower_bound},
                    {"upper_bound", s.upper_bound},
                    {"lower_margin", s.lower_margin},
                    {"upper_margin", s.upper_margin},
                    {"slack", s.slack},
                    {"inside_raw", s.inside_raw},
                    {"inside", s.inside}};
    } else {
      e["strip"] = nullptr;
    }
    json preds = json::array();
    json domains = json::array();
    for (const auto& test : cfg.tests) {
      preds.push_back(prediction_entry(test, family, p, delta, cfg.prediction));
      const HFunction h = HFunction::by_name(test);
      double x = std::nan("");
      try {
        x = shift_xn(h, p.n, p.cells, delta) * d2;
      } catch (const InvalidArgument&) {
      }
      json d = domain_entry(test, x, p, cfg.prediction.theta);
      d["test"] = test;
      domains.push_back(d);
    }
    e["predictions"] = preds;
    e["domain"] = domains;
    json eff = json::array();
    if (std::find(cfg.tests.begin(), cfg.tests.end(), "chi2") != cfg.tests.end()) {
      for (const auto& test : cfg.tests) {
        if (test == "chi2") continue;
        for (auto kind : {EfficiencyKind::kAreAlpha, EfficiencyKind::kAie}) {
          eff.push_back(
              efficiency_entry(kind, test, family, p, delta, regime, strip_ok, cfg.prediction));
        }
      }
    }
    e["efficiency"] = eff;
    points.push_back(e);
  }

  json report{{"schema_version", kSchemaVersion},
              {"command", "predict"},
              {"seed", cfg.seed},
              {"family", to_string(family)},
              {"lambda_regime", regime == LambdaRegime::kFixed ? "fixed" : "growing"},
              {"config", cfg.to_json()},
              {"points", points}};
  const std::string text = report.dump(2) + "\n";
  if (g.out) {
    write_file(prepare_out_dir(*g.out) / kPredictJson, text);
  } else {
    out << text;
  }
}

void cmd_simulate(const GlobalOptions& g, std::ostream& out) {
  const ExperimentConfig cfg = resolve_config(g);
  const FamilyTag family = cfg.resolve_family();
  const AlternativeSpec spec = cfg.alternative();
  const auto n_points = static_cast<std::int64_t>(cfg.grid.size());
  if (g.start_point < 0 || g.start_point >= n_points) {
    throw InvalidArgument("--start-point must lie in [0, " + std::to_string(n_points) + ")");
  }
  if (g.start_point > 0 && !g.out) throw InvalidArgument("--start-point needs --out");

  auto header = simulate_columns();
  if (g.timing) header.push_back("runtime_s");

  std::ofstream csv_file;
  std::ofstream rep_file;
  std::ostream* sink = &out;
  if (g.out) {
    const fs::path dir = prepare_out_dir(*g.out);
    std::vector<std::vector<std::string>> kept;
    if (g.start_point > 0) kept = kept_rows(dir / kSimulateCsv, g.start_point, header);
    csv_file.open(dir / kSimulateCsv, std::ios::binary | std::ios::trunc);
    if (!csv_file) throw NumericalFailure("cannot write simulate.csv");
    write_csv_row(csv_file, header);
    for (const auto& r : kept) write_csv_row(csv_file, r);
    csv_file.flush();
    sink = &csv_file;
    json echo{{"schema_version", kSchemaVersion},
              {"command", "simulate"},
              {"seed", cfg.seed},
              {"family", to_string(family)},
              {"start_point", g.start_point},
              {"columns", header},
              {"config", cfg.to_json()}};
    write_file(dir / kSimulateJson, echo.dump(2) + "\n");
    if (g.verbose) {
      const bool resume = g.start_point > 0 && fs::exists(dir / kReplicationsCsv);
      std::vector<std::vector<std::string>> rep_kept;
      if (resume) rep_kept = kept_rows(dir / kReplicationsCsv, g.start_point, replication_columns());
      rep_file.open(dir / kReplicationsCsv, std::ios::binary | std::ios::trunc);
      write_csv_row(rep_file, replication_columns());
      for (const auto& r : rep_kept) write_csv_row(rep_file, r);
    }
  } else {
    write_csv_row(out, header);
  }

  // Points run in batches of `workers`; within a single-point batch the
  // estimator gets the workers instead. Seeds do not depend on either.
  const int workers = std::max(1, cfg.workers);
  std::size_t next = static_cast<std::size_t>(g.start_point);
  while (next < cfg.grid.size()) {
    const std::size_t batch = std::min<std::size_t>(workers, cfg.grid.size() - next);
    const int inner = batch == 1 ? workers : 1;
    std::vector<PointOutput> results(batch);
    std::vector<std::exception_ptr> errors(batch);
    std::vector<std::thread> threads;
    for (std::size_t b = 0; b < batch; ++b) {
      auto job = [&, b] {
        try {
          results[b] = run_point(cfg, spec, family, next + b, inner, g.timing, g.verbose);
        } catch (...) {
          errors[b] = std::current_exception();
        }
      };
      if (batch == 1) {
        job();
      } else {
        threads.emplace_back(job);
      }
    }
    for (auto& t : threads) t.join();
    for (std::size_t b = 0; b < batch; ++b) {
      if (errors[b]) std::rethrow_exception(errors[b]);
      for (const auto& r : results[b].rows) write_csv_row(*sink, r.fields);
      sink->flush();
      if (rep_file.is_open()) {
        for (const auto& r : results[b].replications) write_csv_row(rep_file, r.fields);
        rep_file.flush();
      }
    }
    next += batch;
  }
}

void cmd_compare(const std::string& simulated, const std::string& predicted,
                 const std::optional<std::string>& out_dir, std::ostream& out) {
  std::ifstream sim_in(simulated, std::ios::binary);
  if (!sim_in) throw InvalidArgument("cannot open simulated CSV '" + simulated + "'");
  const auto sim = read_csv(sim_in);
  if (sim.empty()) throw InvalidArgument("simulated CSV is empty");
  std::map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < sim.front().size(); ++i) col[sim.front()[i]] = i;
  for (const auto& c : simulate_columns()) {
    if (!col.count(c)) throw InvalidArgument("simulated CSV lacks column '" + c + "'");
  }

  std::ifstream pred_in(predicted);
  if (!pred_in) throw InvalidArgument("cannot open predicted JSON '" + predicted + "'");
  json pred;
  try {
    pred_in >> pred;
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("predicted JSON is malformed: ") + e.what());
  }
  if (pred.value("schema_version", 0) != kSchemaVersion || !pred.contains("points")) {
    throw InvalidArgument("predicted JSON has an unsupported schema");
  }

  // Predicted slope and efficiency values keyed by grid point and test.
  std::map<PredKey, std::optional<double>> slope_pred;
  std::map<PredKey, std::string> slope_status;
  std::map<std::pair<std::int64_t, std::int64_t>, json> eff_pred;
  std::set<std::pair<std::int64_t, std::int64_t>> pred_points;
  for (const auto& p : pred.at("points")) {
    const auto n = p.at("n").get<std::int64_t>();
    const auto N = p.at("N").get<std::int64_t>();
    pred_points.insert({n, N});
    for (const auto& e : p.at("predictions")) {
      const PredKey k{n, N, e.at("test").get<std::string>()};
      const auto status = e.at("status").get<std::string>();
      slope_status[k] = status;
      if (status == "ok" && e.contains("value") && e.at("value").is_number()) {
        slope_pred[k] = e.at("value").get<double>();
      } else {
        slope_pred[k] = std::nullopt;
      }
    }
    eff_pred[{n, N}] = p.value("efficiency", json::array());
  }

  std::set<std::pair<std::int64_t, std::int64_t>> sim_points;
  std::set<PredKey> sim_keys;
  for (std::size_t i = 1; i < sim.size(); ++i) {
    const auto& r = sim[i];
    const std::int64_t n = std::stoll(r[col["n"]]);
    const std::int64_t N = std::stoll(r[col["N"]]);
    sim_points.insert({n, N});
    sim_keys.insert({n, N, r[col["test"]]});
  }
  json only_sim = json::array();
  json only_pred = json::array();
  json missing_tests = json::array();
  for (const auto& k : sim_points) {
    if (!pred_points.count(k)) only_sim.push_back(json{{"n", k.first}, {"N", k.second}});
  }
  for (const auto& k : pred_points) {
    if (!sim_points.count(k)) only_pred.push_back(json{{"n", k.first}, {"N", k.second}});
  }
  for (const auto& k : sim_keys) {
    if (pred_points.count({k.n, k.cells}) && !slope_status.count(k)) {
      missing_tests.push_back(json{{"n", k.n}, {"N", k.cells}, {"test", k.test}});
    }
  }
  if (!only_sim.empty() || !only_pred.empty() || !missing_tests.empty()) {
    const json diff{{"error", "grid key mismatch"},
                    {"only_in_simulated", only_sim},
                    {"only_in_predicted", only_pred},
                    {"tests_without_prediction", missing_tests}};
    throw KeyMismatch("simulated and predicted grids do not match", diff.dump(2));
  }

  // Ratio table over alpha rows.
  std::vector<std::vector<std::string>> ratios{
      {"schema_version", "n", "N", "lambda", "test", "method", "slope_empirical", "slope_ci_low",
       "slope_ci_high", "slope_predicted", "ratio", "ratio_ci_low", "ratio_ci_high",
       "prediction_status", "row_status"}};
  struct Series {
    std::vector<std::pair<std::int64_t, double>> points;
  };
  std::map<std::pair<std::string, std::string>, Series> series;
  // (n, N, method) -> test -> empirical slope, for the efficiency table
  std::map<std::tuple<std::int64_t, std::int64_t, std::string>, std::map<std::string, std::array<double, 3>>>
      slopes;
  for (std::size_t i = 1; i < sim.size(); ++i) {
    const auto& r = sim[i];
    if (r[col["quantity"]] != "alpha") continue;
    const std::int64_t n = std::stoll(r[col["n"]]);
    const std::int64_t N = std::stoll(r[col["N"]]);
    const std::string test = r[col["test"]];
    const std::string method = r[col["method"]];
    const double se = field_double(r, col["slope_empirical"]);
    const double lo = field_double(r, col["slope_ci_low"]);
    const double hi = field_double(r, col["slope_ci_high"]);
    const auto sp = slope_pred.at({n, N, test});
    double ratio = std::nan("");
    double rlo = std::nan("");
    double rhi = std::nan("");
    if (sp && *sp > 0 && std::isfinite(se)) {
      ratio = se / *sp;
      rlo = lo / *sp;
      rhi = hi / *sp;
      series[{test, method}].points.push_back({n, ratio});
    }
    if (r[col["status"]] == "ok") slopes[{n, N, method}][test] = {se, lo, hi};
    ratios.push_back({std::to_string(kSchemaVersion), std::to_string(n), std::to_string(N),
                      r[col["lambda"]], test, method, r[col["slope_empirical"]],
                      r[col["slope_ci_low"]], r[col["slope_ci_high"]], format_optional(sp),
                      std::isnan(ratio) ? "" : format_double(ratio),
                      std::isnan(rlo) ? "" : format_double(rlo),
                      std::isnan(rhi) ? "" : format_double(rhi), slope_status.at({n, N, test}),
                      r[col["status"]]});
  }

  std::vector<std::vector<std::string>> trends{
      {"schema_version", "test", "method", "points", "first_n", "last_n", "first_ratio",
       "last_ratio", "last_distance", "last3_distance_decreasing", "toward_one"}};
  for (auto& [key, s] : series) {
    std::sort(s.points.begin(), s.points.end());
    const auto& pts = s.points;
    std::vector<double> dist;
    for (const auto& [n, r] : pts) dist.push_back(std::abs(r - 1.0));
    bool last3 = dist.size() >= 3;
    for (std::size_t i = dist.size() >= 3 ? dist.size() - 2 : dist.size(); i < dist.size(); ++i) {
      last3 = last3 && dist[i] < dist[i - 1];
    }
    const bool toward = dist.size() >= 2 && dist.back() < dist.front();
    trends.push_back({std::to_string(kSchemaVersion), key.first, key.second,
                      std::to_string(pts.size()), std::to_string(pts.front().first),
                      std::to_string(pts.back().first), format_double(pts.front().second),
                      format_double(pts.back().second), format_double(dist.back()),
                      last3 ? "true" : "false", toward ? "true" : "false"});
  }

  std::vector<std::vector<std::string>> efficiency{
      {"schema_version", "n", "N", "method", "first", "second", "kind", "empirical_ratio",
       "empirical_ci_low", "empirical_ci_high", "theoretical", "marker", "status"}};
  for (const auto& [key, by_test] : slopes) {
    const auto& [n, N, method] = key;
    const auto chi = by_test.find("chi2");
    if (chi == by_test.end()) continue;
    for (const auto& e : eff_pred.at({n, N})) {
      const auto second = e.at("second").get<std::string>();
      const auto other = by_test.find(second);
      if (other == by_test.end()) continue;
      const auto& a = chi->second;
      const auto& b = other->second;
      const double ratio = a[0] / b[0];
      const std::string status = e.at("status").get<std::string>();
      std::string theo;
      if (status == "ok") {
        theo = e.at("value").is_number() ? format_double(e.at("value").get<double>())
                                         : e.at("value").get<std::string>();
      }
      efficiency.push_back({std::to_string(kSchemaVersion), std::to_string(n), std::to_string(N),
                            method, "chi2", second, e.at("kind").get<std::string>(),
                            format_double(ratio), format_double(a[1] / b[2]),
                            format_double(a[2] / b[1]), theo, e.value("marker", ""), status});
    }
  }

  if (out_dir) {
    const fs::path dir = prepare_out_dir(*out_dir);
    write_file(dir / "compare_ratios.csv", csv_text(ratios));
    write_file(dir / "compare_trends.csv", csv_text(trends));
    write_file(dir / "compare_efficiency.csv", csv_text(efficiency));
    const json summary{{"schema_version", kSchemaVersion},
                       {"command", "compare"},
                       {"simulated", simulated},
                       {"predicted", predicted},
                       {"predicted_config", pred.value("config", json::object())},
                       {"seed", pred.value("seed", json(nullptr))},
                       {"files", {"compare_ratios.csv", "compare_trends.csv", "compare_efficiency.csv"}}};
    write_file(dir / "compare.json", summary.dump(2) + "\n");
  }
  out << csv_text(ratios) << "\n" << csv_text(trends) << "\n" << csv_text(efficiency);
}

void cmd_oracle(std::int64_t n, std::int64_t cells, const std::string& kernel, double threshold,
                const std::vector<double>& p, bool strict, bool lower, std::ostream& out) {
  if (n < 1 || cells < 1) throw InvalidArgument("oracle needs n >= 1 and N >= 1");
  std::vector<double> probs = p;
  if (probs.empty()) probs.assign(static_cast<std::size_t>(cells), 1.0 / static_cast<double>(cells));
  if (static_cast<std::int64_t>(probs.size()) != cells) {
    throw InvalidArgument("--p needs exactly N values");
  }
  TailQuery q{n, probs, HFunction::by_name(kernel), threshold,
              lower ? TailSide::kLower : TailSide::kUpper, strict};
  const auto t = exact_tail(q);
  json j{{"schema_version", kSchemaVersion},
         {"command", "oracle"},
         {"n", n},
         {"N", cells},
         {"kernel", kernel},
         {"threshold", threshold},
         {"strict", strict},
         {"side", lower ? "lower" : "upper"},
         {"p", probs},
         {"probability", t.p_hat},
         {"log_probability", number_or_null(t.log_p_hat)},
         {"compositions", t.replicates}};
  out << j.dump(2) << "\n";
}

void cmd_group(const std::string& input, std::int64_t cells, const std::string& cdf,
               std::ostream& out) {
  if (cells < 1) throw InvalidArgument("--cells must be >= 1");
  std::vector<double> raw;
  if (input == "-") {
    raw = read_samples(std::cin);
  } else {
    raw = read_sample_file(input);
  }
  const auto sample = transform_sample(raw, parse_cdf(cdf));
  const auto counts = count_occupancy(sample, make_equal_cells(static_cast<std::size_t>(cells)));
  const std::vector<double> p0(static_cast<std::size_t>(cells), 1.0 / static_cast<double>(cells));
  json j{{"schema_version", kSchemaVersion},
         {"command", "group"},
         {"n", counts.sample_size()},
         {"N", cells},
         {"lambda", counts.lambda()},
         {"counts", std::vector<std::int64_t>(counts.counts().begin(), counts.counts().end())}};
  if (!counts.degenerate()) {
    j["chi2"] = chi_square(counts, p0).value;
    j["lr"] = log_likelihood_ratio(counts, p0).value;
  }
  out << j.dump(2) << "\n";
}

}  // namespace gofslope::cli
