// infotraj command-line driver: solve / extract / plot / validate.
//
// Worker threads default to $INFOTRAJ_WORKERS, else the hardware concurrency.

#include <CLI11.hpp>
#include <iostream>

#include "infotraj/commands.hpp"
#include "infotraj/persistence.hpp"

using namespace infotraj;

namespace {

int run_solve(const std::string& config, const std::string& out, int workers) {
  const auto s = scenario::load_scenario(config);
  const std::string dir = out.empty() ? s.output_dir : out;
  if (dir.empty()) throw InputError("no output directory: pass --out or set output_dir");
  cli::cmd_solve(s, dir, workers, std::cout);
  return cli::kOk;
}

int run_extract(const std::string& solution, const std::vector<std::string>& x0,
                const std::string& scenario_path, const std::string& out, int workers) {
  std::vector<StateVector> states;
  std::string dir = solution;
  if (!scenario_path.empty()) {
    const auto s = scenario::load_scenario(scenario_path);
    states = s.all_initial_states();
    if (dir.empty()) dir = s.output_dir;
  }
  for (const auto& text : x0) states.push_back(cli::parse_state(text));
  if (dir.empty()) throw InputError("no solution directory: pass --solution");
  const std::string target = out.empty() ? (std::filesystem::path(dir) / "trajectories").string() : out;
  cli::cmd_extract(dir, states, target, workers, std::cout);
  return cli::kOk;
}

int run_validate(const std::string& suite, const std::string& report_path, int workers) {
  const auto report = cli::cmd_validate(suite, workers, std::cerr);
  std::cout << report.summary();
  if (!report_path.empty()) io::write_json(report_path, report.to_json());
  return report.passed() ? cli::kOk : cli::kValidationFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Information-optimal trajectories by hybrid Hamilton-Jacobi solves"};
  app.require_subcommand(1);
  int workers = 0;
  app.add_option("--workers", workers, "worker threads (0: $INFOTRAJ_WORKERS or all cores)")
      ->check(CLI::NonNegativeNumber);

  std::string config, out;
  auto* solve = app.add_subcommand("solve", "solve the value function for a scenario");
  solve->add_option("--config", config, "scenario JSON")->required()->check(CLI::ExistingFile);
  solve->add_option("--out", out, "output directory (default: the scenario's output_dir)");

  std::string solution, scenario_path, extract_out;
  std::vector<std::string> x0;
  auto* extract = app.add_subcommand("extract", "extract optimal trajectories from a solution");
  extract->add_option("--solution", solution, "solution directory");
  extract->add_option("--x0", x0, "initial state as X,Y,psi (repeatable)");
  extract->add_option("--scenario", scenario_path, "take initial states from a scenario")
      ->check(CLI::ExistingFile);
  extract->add_option("--out", extract_out, "output directory (default: <solution>/trajectories)");

  std::string plot_in, plot_out, plot_scenario;
  auto* plot = app.add_subcommand("plot", "draw trajectory CSVs as SVG");
  plot->add_option("--in", plot_in, "directory with trajectory CSVs")->required();
  plot->add_option("--out", plot_out, "SVG file")->required();
  plot->add_option("--scenario", plot_scenario, "scenario providing the prior")
      ->check(CLI::ExistingFile);

  std::string suite, report;
  auto* validate = app.add_subcommand("validate", "run the oracle suite");
  validate->add_option("--suite", suite, "validation suite JSON")->required()->check(CLI::ExistingFile);
  validate->add_option("--report", report, "write the JSON report here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? cli::kOk : cli::kInputError;
  }

  try {
    if (*solve) return run_solve(config, out, workers);
    if (*extract) return run_extract(solution, x0, scenario_path, extract_out, workers);
    if (*plot) {
      std::optional<scenario::Scenario> sc;
      if (!plot_scenario.empty()) sc = scenario::load_scenario(plot_scenario);
      cli::cmd_plot(plot_in, plot_out, sc);
      return cli::kOk;
    }
    if (*validate) return run_validate(suite, report, workers);
  } catch (const InstabilityError& e) {
    std::cerr << "error: " << e.what() << " (step " << e.step() << ")\n";
    return cli::kInstability;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return cli::kInputError;
  }
  return cli::kOk;
}
