#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "commands.hpp"

using namespace gofslope;
using namespace gofslope::cli;

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitRuntime = 3;

void add_globals(CLI::App* sub, GlobalOptions& g) {
  sub->add_option("--config", g.config, "Experiment config (JSON)")->envname("GOFSLOPE_CONFIG");
  sub->add_option("--seed", g.seed, "Master seed")->envname("GOFSLOPE_SEED");
  sub->add_option("--budget", g.budget, "Statistic evaluations per estimate")
      ->envname("GOFSLOPE_BUDGET");
  sub->add_option("--out", g.out, "Output directory")->envname("GOFSLOPE_OUT");
  sub->add_option("--workers", g.workers, "Worker threads")->envname("GOFSLOPE_WORKERS");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gofslope: grouped goodness-of-fit statistics, slopes and rare-event simulation"};
  app.require_subcommand(1);

  GlobalOptions g;

  std::string kernel;
  std::vector<double> lambdas;
  std::int64_t cells = 0;
  double tol = 1e-12;
  auto* moments = app.add_subcommand("moments", "Poisson moments of a kernel");
  moments->add_option("--kernel", kernel, "chi2, lr or empty")->required();
  moments->add_option("--lambda", lambdas, "Comma-separated λ values")->delimiter(',')->required();
  moments->add_option("--cells", cells, "N for the Lyapunov ratio (0 skips it)");
  moments->add_option("--tol", tol, "Truncation tolerance");

  auto* predict = app.add_subcommand("predict", "Theoretical slopes and efficiencies");
  add_globals(predict, g);

  auto* simulate = app.add_subcommand("simulate", "Empirical slopes and power");
  add_globals(simulate, g);
  simulate->add_flag("--timing", g.timing, "Append a runtime_s column");
  simulate->add_flag("--verbose", g.verbose, "Write replications.csv");
  simulate->add_option("--start-point", g.start_point, "Resume from this grid point index");

  std::string sim_csv;
  std::string pred_json;
  std::optional<std::string> compare_out;
  auto* compare = app.add_subcommand("compare", "Empirical versus predicted tables");
  compare->add_option("--simulated", sim_csv, "simulate.csv")->required();
  compare->add_option("--predicted", pred_json, "predict.json")->required();
  compare->add_option("--out", compare_out, "Output directory")->envname("GOFSLOPE_OUT");

  std::int64_t o_n = 0;
  std::int64_t o_cells = 0;
  std::string o_kernel = "chi2";
  double o_threshold = 0.0;
  std::vector<double> o_p;
  bool o_strict = false;
  bool o_lower = false;
  auto* oracle = app.add_subcommand("oracle", "Exact tail probability by enumeration");
  oracle->add_option("--n", o_n, "Sample size")->required();
  oracle->add_option("--cells", o_cells, "Number of cells")->required();
  oracle->add_option("--kernel", o_kernel, "chi2, lr or empty");
  oracle->add_option("--threshold", o_threshold, "Threshold")->required();
  oracle->add_option("--p", o_p, "Cell probabilities (default equal)")->delimiter(',');
  oracle->add_flag("--strict", o_strict, "Use > instead of >=");
  oracle->add_flag("--lower", o_lower, "Lower tail");

  std::string g_input;
  std::int64_t g_cells = 0;
  std::string g_cdf = "uniform";
  auto* group = app.add_subcommand("group", "Group a sample file into equal cells");
  group->add_option("--input", g_input, "Newline-delimited sample file, or - for stdin")->required();
  group->add_option("--cells", g_cells, "Number of cells")->required();
  group->add_option("--cdf", g_cdf, "uniform, exponential:<rate> or normal:<mu>:<sigma>");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitValidation;
  }

  try {
    if (*moments) cmd_moments(kernel, lambdas, cells, tol, std::cout);
    if (*predict) cmd_predict(g, std::cout);
    if (*simulate) cmd_simulate(g, std::cout);
    if (*compare) cmd_compare(sim_csv, pred_json, compare_out, std::cout);
    if (*oracle) cmd_oracle(o_n, o_cells, o_kernel, o_threshold, o_p, o_strict, o_lower, std::cout);
    if (*group) cmd_group(g_input, g_cells, g_cdf, std::cout);
  } catch (const KeyMismatch& e) {
    std::cerr << "error: " << e.what() << "\n" << e.diff() << "\n";
    return kExitValidation;
  } catch (const InvalidArgument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const Unclassified& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const OpenProblem& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return 0;
}
