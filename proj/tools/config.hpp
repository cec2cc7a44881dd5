#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "gofslope/alternatives.hpp"
#include "gofslope/largedev.hpp"
#include "gofslope/montecarlo.hpp"

namespace gofslope::cli {

inline constexpr int kSchemaVersion = 1;

/// N = ⌊c·n^a⌋.
struct CellsRule {
  double c = 1.0;
  double a = 0.5;
  std::int64_t operator()(std::int64_t n) const;
};

struct GridPoint {
  std::int64_t n = 0;
  std::int64_t cells = 0;
};

enum class Quantity { kAlpha, kBeta, kPower };

std::string to_string(Quantity q);

/// Fully resolved experiment description; built from JSON plus CLI overrides.
struct ExperimentConfig {
  std::vector<GridPoint> grid;
  std::optional<CellsRule> cells_rule;
  nlohmann::json schedule;   // as given, re-emitted verbatim in echoes
  nlohmann::json direction;  // {"kind":"cosine","k":1} or {"kind":"contrast","d":[...]}
  std::string family = "auto";
  std::vector<std::string> tests{"chi2", "lr"};
  std::vector<Quantity> quantities{Quantity::kAlpha};
  std::vector<TailMethod> methods{TailMethod::kAuto};
  std::vector<double> power_offsets{0.0};
  ThresholdMode threshold_mode = ThresholdMode::kPoissonShift;
  std::string lambda_regime = "auto";  // fixed | growing | auto
  std::uint64_t budget = 1000000;
  std::uint64_t seed = 1;
  int workers = 1;
  std::int64_t mean_samples = 10000;
  EstimatorOptions estimator;
  PredictionOptions prediction;

  AlternativeSpec alternative() const;
  /// The configured tag, or classify_family over the grid when "auto".
  FamilyTag resolve_family() const;
  nlohmann::json to_json() const;
};

/// Parses and validates; throws InvalidArgument with a field path on failure.
ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::string& path);

DeltaSchedule parse_schedule(const nlohmann::json& j);

}  // namespace gofslope::cli
