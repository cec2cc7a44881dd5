#include "config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>

#include "gofslope/errors.hpp"

namespace gofslope::cli {
namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw InvalidArgument(path.empty() ? "config: " + what : "config " + path + ": " + what);
}

template <class T>
T get(const json& j, const std::string& key, const std::string& path) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    fail(path + "." + key, e.what());
  }
}

template <class T>
T get_or(const json& j, const std::string& key, const T& fallback, const std::string& path) {
  if (!j.contains(key)) return fallback;
  return get<T>(j, key, path);
}

void only_keys(const json& j, const std::set<std::string>& allowed, const std::string& path) {
  if (!j.is_object()) fail(path, "expected an object");
  for (const auto& [k, v] : j.items()) {
    if (!allowed.count(k)) fail(path, "unknown field '" + k + "'");
  }
}

std::vector<std::int64_t> n_values(const json& g) {
  if (g.contains("n")) return get<std::vector<std::int64_t>>(g, "n", "grid");
  if (g.contains("n_pow2")) {
    const auto r = get<std::vector<int>>(g, "n_pow2", "grid");
    if (r.size() != 3 || r[2] <= 0 || r[0] > r[1] || r[0] < 0 || r[1] > 40) {
      fail("grid.n_pow2", "expected [from, to, step] with 0 <= from <= to <= 40, step > 0");
    }
    std::vector<std::int64_t> out;
    for (int e = r[0]; e <= r[1]; e += r[2]) out.push_back(std::int64_t{1} << e);
    return out;
  }
  fail("grid", "needs 'points', 'n' or 'n_pow2'");
}

}  // namespace

std::int64_t CellsRule::operator()(std::int64_t n) const {
  // The relative nudge keeps exact powers such as (2^20)^0.3 = 64 from flooring to 63.
  const double v = c * std::pow(static_cast<double>(n), a) * (1.0 + 1e-12);
  return static_cast<std::int64_t>(std::floor(v));
}

std::string to_string(Quantity q) {
  switch (q) {
    case Quantity::kAlpha: return "alpha";
    case Quantity::kBeta: return "beta";
    case Quantity::kPower: return "power";
  }
  return "?";
}

DeltaSchedule parse_schedule(const json& j) {
  if (!j.is_object()) fail("schedule", "expected an object");
  const auto kind = get<std::string>(j, "kind", "schedule");
  if (kind == "power_law") {
    only_keys(j, {"kind", "gamma"}, "schedule");
    return DeltaSchedule::power_law(get<double>(j, "gamma", "schedule"));
  }
  if (kind == "pitman") {
    only_keys(j, {"kind"}, "schedule");
    return DeltaSchedule::pitman();
  }
  if (kind == "constant") {
    only_keys(j, {"kind", "delta"}, "schedule");
    return DeltaSchedule::constant(get<double>(j, "delta", "schedule"));
  }
  if (kind == "explicit") {
    only_keys(j, {"kind", "values"}, "schedule");
    return DeltaSchedule::explicit_values(
        get<std::vector<std::pair<std::int64_t, double>>>(j, "values", "schedule"));
  }
  fail("schedule.kind", "unknown kind '" + kind + "'");
}

AlternativeSpec ExperimentConfig::alternative() const {
  const auto sched = parse_schedule(schedule);
  const auto kind = direction.value("kind", std::string("cosine"));
  if (kind == "contrast") {
    return AlternativeSpec(direction.at("d").get<std::vector<double>>(), sched);
  }
  return AlternativeSpec(DirectionFunction::cosine(direction.value("k", 1)), sched);
}

FamilyTag ExperimentConfig::resolve_family() const {
  if (family != "auto") return parse_family(family);
  std::map<std::int64_t, std::int64_t> by_n;
  for (const auto& p : grid) {
    auto [it, fresh] = by_n.emplace(p.n, p.cells);
    if (!fresh && it->second != p.cells) {
      throw InvalidArgument("family 'auto' needs one N per n; set 'family' explicitly");
    }
  }
  if (by_n.size() < 3) {
    throw InvalidArgument("family 'auto' needs at least 3 distinct n; set 'family' explicitly");
  }
  std::vector<std::int64_t> ns;
  for (const auto& [n, N] : by_n) ns.push_back(n);
  return classify_family(parse_schedule(schedule), ns, [&](std::int64_t n) {
    if (cells_rule) return (*cells_rule)(n);
    return by_n.at(n);
  });
}

nlohmann::json ExperimentConfig::to_json() const {
  json points = json::array();
  for (const auto& p : grid) points.push_back({p.n, p.cells});
  json j;
  j["schema_version"] = kSchemaVersion;
  j["grid"] = {{"points", points}};
  if (cells_rule) j["grid"]["cells_rule"] = {{"c", cells_rule->c}, {"a", cells_rule->a}};
  j["schedule"] = schedule;
  j["direction"] = direction;
  j["family"] = family;
  j["tests"] = tests;
  json q = json::array();
  for (auto v : quantities) q.push_back(to_string(v));
  j["quantities"] = q;
  json m = json::array();
  for (auto v : methods) m.push_back(to_string(v));
  j["methods"] = m;
  j["power_offsets"] = power_offsets;
  j["threshold_mode"] = to_string(threshold_mode);
  j["lambda_regime"] = lambda_regime;
  j["budget"] = budget;
  j["seed"] = seed;
  j["mean_samples"] = mean_samples;
  j["estimator"] = {{"replications", estimator.replications},
                    {"sweeps", estimator.sweeps},
                    {"particles", estimator.particles},
                    {"chunk", estimator.chunk}};
  j["prediction"] = {{"strip_slack", prediction.strip_slack}, {"theta", prediction.theta}};
  return j;
}

ExperimentConfig parse_config(const json& j) {
  only_keys(j,
            {"schema_version", "grid", "schedule", "direction", "family", "tests", "quantities",
             "methods", "power_offsets", "threshold_mode", "lambda_regime", "budget", "seed",
             "workers", "mean_samples", "estimator", "prediction"},
            "");
  const int version = get_or<int>(j, "schema_version", kSchemaVersion, "");
  if (version != kSchemaVersion) fail("schema_version", "unsupported version " + std::to_string(version));

  ExperimentConfig c;
  if (!j.contains("grid")) fail("grid", "missing");
  const json& g = j.at("grid");
  only_keys(g, {"points", "n", "n_pow2", "cells", "cells_rule"}, "grid");
  if (g.contains("points")) {
    for (const auto& p : get<std::vector<std::pair<std::int64_t, std::int64_t>>>(g, "points", "grid")) {
      c.grid.push_back({p.first, p.second});
    }
  } else {
    const auto ns = n_values(g);
    if (g.contains("cells_rule")) {
      const json& r = g.at("cells_rule");
      only_keys(r, {"c", "a"}, "grid.cells_rule");
      c.cells_rule = CellsRule{get_or<double>(r, "c", 1.0, "grid.cells_rule"),
                               get<double>(r, "a", "grid.cells_rule")};
      for (auto n : ns) c.grid.push_back({n, (*c.cells_rule)(n)});
    } else if (g.contains("cells")) {
      for (auto n : ns) {
        for (auto N : get<std::vector<std::int64_t>>(g, "cells", "grid")) c.grid.push_back({n, N});
      }
    } else {
      fail("grid", "'n' needs 'cells' or 'cells_rule'");
    }
  }
  if (c.grid.empty()) fail("grid", "no points");
  for (std::size_t i = 0; i < c.grid.size(); ++i) {
    if (c.grid[i].n < 1 || c.grid[i].cells < 2) {
      fail("grid[" + std::to_string(i) + "]", "needs n >= 1 and N >= 2 (got n = " +
                                                  std::to_string(c.grid[i].n) + ", N = " +
                                                  std::to_string(c.grid[i].cells) + ")");
    }
  }

  if (!j.contains("schedule")) fail("schedule", "missing");
  c.schedule = j.at("schedule");
  parse_schedule(c.schedule);
  c.direction = j.value("direction", json{{"kind", "cosine"}, {"k", 1}});
  const auto dkind = c.direction.value("kind", std::string("cosine"));
  if (dkind == "cosine") {
    only_keys(c.direction, {"kind", "k"}, "direction");
  } else if (dkind == "contrast") {
    only_keys(c.direction, {"kind", "d"}, "direction");
  } else {
    fail("direction.kind", "unknown kind '" + dkind + "'");
  }

  c.family = get_or<std::string>(j, "family", "auto", "");
  if (c.family != "auto") parse_family(c.family);
  c.tests = get_or<std::vector<std::string>>(j, "tests", c.tests, "");
  if (c.tests.empty()) fail("tests", "empty");
  for (const auto& t : c.tests) HFunction::by_name(t);

  if (j.contains("quantities")) {
    c.quantities.clear();
    for (const auto& q : get<std::vector<std::string>>(j, "quantities", "")) {
      if (q == "alpha") c.quantities.push_back(Quantity::kAlpha);
      else if (q == "beta") c.quantities.push_back(Quantity::kBeta);
      else if (q == "power") c.quantities.push_back(Quantity::kPower);
      else fail("quantities", "unknown quantity '" + q + "'");
    }
  }
  if (j.contains("methods")) {
    c.methods.clear();
    for (const auto& m : get<std::vector<std::string>>(j, "methods", "")) {
      c.methods.push_back(parse_tail_method(m));
    }
  }
  if (c.quantities.empty() || c.methods.empty()) fail("", "quantities and methods must be non-empty");
  c.power_offsets = get_or<std::vector<double>>(j, "power_offsets", c.power_offsets, "");
  c.threshold_mode = parse_threshold_mode(
      get_or<std::string>(j, "threshold_mode", to_string(c.threshold_mode), ""));
  c.lambda_regime = get_or<std::string>(j, "lambda_regime", "auto", "");
  if (c.lambda_regime != "auto" && c.lambda_regime != "fixed" && c.lambda_regime != "growing") {
    fail("lambda_regime", "expected auto, fixed or growing");
  }
  c.budget = get_or<std::uint64_t>(j, "budget", c.budget, "");
  c.seed = get_or<std::uint64_t>(j, "seed", c.seed, "");
  c.workers = get_or<int>(j, "workers", c.workers, "");
  c.mean_samples = get_or<std::int64_t>(j, "mean_samples", c.mean_samples, "");
  if (c.budget < 1) fail("budget", "must be >= 1");
  if (c.workers < 1) fail("workers", "must be >= 1");

  if (j.contains("estimator")) {
    const json& e = j.at("estimator");
    only_keys(e, {"replications", "sweeps", "particles", "chunk"}, "estimator");
    c.estimator.replications = get_or<int>(e, "replications", c.estimator.replications, "estimator");
    c.estimator.sweeps = get_or<int>(e, "sweeps", c.estimator.sweeps, "estimator");
    c.estimator.particles = get_or<std::int64_t>(e, "particles", c.estimator.particles, "estimator");
    c.estimator.chunk = get_or<std::int64_t>(e, "chunk", c.estimator.chunk, "estimator");
  }
  if (j.contains("prediction")) {
    const json& p = j.at("prediction");
    only_keys(p, {"strip_slack", "theta"}, "prediction");
    c.prediction.strip_slack = get_or<double>(p, "strip_slack", c.prediction.strip_slack, "prediction");
    c.prediction.theta = get_or<double>(p, "theta", c.prediction.theta, "prediction");
  }

  // Every point must admit a valid alternative.
  const auto spec = c.alternative();
  for (const auto& p : c.grid) {
    try {
      cell_probabilities(spec, p.n, p.cells);
    } catch (const InvalidArgument& e) {
      fail("grid point (" + std::to_string(p.n) + ", " + std::to_string(p.cells) + ")", e.what());
    }
  }
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open config file '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw InvalidArgument("config '" + path + "' is not valid JSON: " + e.what());
  }
  return parse_config(j);
}

}  // namespace gofslope::cli
