#pragma once

#include <filesystem>
#include <iosfwd>
#include <json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "infotraj/errors.hpp"
#include "infotraj/hjsolver.hpp"
#include "infotraj/scenario.hpp"
#include "infotraj/validation.hpp"

namespace infotraj::cli {

namespace fs = std::filesystem;
using nlohmann::json;

/// Process exit codes.
enum ExitCode : int { kOk = 0, kValidationFailed = 1, kInputError = 2, kInstability = 3 };

/// Runs the hybrid solver for a scenario and writes manifest.json, the field
/// snapshots and timings.json into `out`. Everything except timings.json is
/// byte-identical across runs and worker counts.
hj::HybridSolution cmd_solve(const scenario::Scenario& s, const fs::path& out, int workers,
                             std::ostream& log);

/// Extracts one trajectory per initial state from a stored solution. Writes
/// traj_NNN.csv and summary.json into `out`; returns the summary.
/// An empty state list writes nothing and returns an empty summary.
json cmd_extract(const fs::path& solution, const std::vector<StateVector>& states,
                 const fs::path& out, int workers, std::ostream& log);

/// Draws every *.csv in `in` (sorted by name) and the prior ellipse recorded in
/// in/summary.json, or the one from `scenario` when given.
void cmd_plot(const fs::path& in, const fs::path& out,
              const std::optional<scenario::Scenario>& scenario);

/// Validation suite file:
/// {
///   "schema_version": 1,
///   "mutation": "none" | "dissipation_form_sum" | "policy_sign_flip",
///   "thresholds": { ... },
///   "toy": { "dx", "refined_dx", "z0_gradient_dx", "residual_dx": [...], "brute_force_segments" },
///   "scenarios": [ { "path", "checks": [...], "brute_force_segments", "z0_gradient_step" } ]
/// }
/// Scenario paths are relative to the suite file. Scenario checks are any of
/// "monotonicity", "oracle_gap", "residuals", "z0_gradient", "value_band".
validation::ValidationReport cmd_validate(const fs::path& suite, int workers, std::ostream& log);

/// Parses "X,Y,psi" style state lists.
StateVector parse_state(const std::string& text);

}  // namespace infotraj::cli
