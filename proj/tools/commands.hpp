#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "config.hpp"
#include "gofslope/errors.hpp"

namespace gofslope::cli {

/// Flags shared by the config-driven subcommands; set values override the config.
struct GlobalOptions {
  std::optional<std::string> config;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> budget;
  std::optional<std::string> out;
  std::optional<int> workers;
  bool timing = false;
  bool verbose = false;
  std::int64_t start_point = 0;
};

/// Raised for a grid mismatch in compare; carries the structured diff.
class KeyMismatch : public InvalidArgument {
 public:
  KeyMismatch(std::string message, std::string diff_json)
      : InvalidArgument(std::move(message)), diff_(std::move(diff_json)) {}
  const std::string& diff() const { return diff_; }

 private:
  std::string diff_;
};

ExperimentConfig resolve_config(const GlobalOptions& g);

void cmd_moments(const std::string& kernel, const std::vector<double>& lambdas, std::int64_t cells,
                 double tol, std::ostream& out);
void cmd_predict(const GlobalOptions& g, std::ostream& out);
void cmd_simulate(const GlobalOptions& g, std::ostream& out);
void cmd_compare(const std::string& simulated, const std::string& predicted,
                 const std::optional<std::string>& out_dir, std::ostream& out);
void cmd_oracle(std::int64_t n, std::int64_t cells, const std::string& kernel, double threshold,
                const std::vector<double>& p, bool strict, bool lower, std::ostream& out);
void cmd_group(const std::string& input, std::int64_t cells, const std::string& cdf,
               std::ostream& out);

/// Fixed simulate CSV columns, without the optional trailing runtime column.
const std::vector<std::string>& simulate_columns();

}  // namespace gofslope::cli
