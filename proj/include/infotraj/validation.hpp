#pragma once

#include <json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "infotraj/hjsolver.hpp"
#include "infotraj/trajectories.hpp"

namespace infotraj::validation {

using nlohmann::json;

// --- 1-D toy: xdot = u, |u| <= 1, zdot = x^2, G = -log z ------------------

/// Closed-form toy value: the optimal control drives |x| up at full speed,
/// so V(t, x, z) = -log(z + x^2 t + |x| t^2 + t^3 / 3).
double toy_exact_value(double x, double z, double t);

struct ToyOptions {
  double dx = 0.05;        // also the z spacing of the joint grid
  double x_half = 2.0;     // x in [-x_half, x_half]
  double interior = 1.0;   // errors measured on |x| <= interior
  double z_min = 0.5;
  double z_max = 4.5;
  double z0 = 1.0;
  double horizon = 1.0;
  double cfl = 0.5;
  hj::Integrator integrator = hj::Integrator::Euler;
  /// Applied to the hybrid solve only; the full-grid reference always uses
  /// the difference form.
  hj::DissipationForm form = hj::DissipationForm::Difference;
  hj::DissipationMode dissipation = hj::DissipationMode::Global;
  /// Dissipation of the full-grid reference.
  hj::DissipationMode classic_dissipation = hj::DissipationMode::Local;
  int workers = 0;
};

struct ToyComparison {
  double vs_classic = 0.0;  // max |phi_hybrid - phi_classic| on the interior
  double vs_exact = 0.0;    // max |phi_hybrid - closed form| on the interior
  double classic_vs_exact = 0.0;
  double seconds = 0.0;
};

ToyComparison compare_toy(const ToyOptions& opts);

// --- Phi against finite differences of perturbed re-solves ------

struct GradientCheck {
  long interior_points = 0;
  long passing = 0;
  long excluded_points = 0;
  double max_rel_error = 0.0;
  double median_rel_error = 0.0;

  double fraction() const {
    return interior_points ? double(passing) / double(interior_points) : 0.0;
  }
  double excluded_fraction() const {
    const long all = interior_points + excluded_points;
    return all ? double(excluded_points) / double(all) : 0.0;
  }
};

/// Re-solves with z0 +- step e_j for every component j and compares the
/// central difference of phi(t, x^k) with Phi(t, x^k) at nodes at least
/// `boundary_cells` from every bounded face.
GradientCheck z0_gradient_check(const dynamics::CascadeSystem& sys,
                             const matrixcore::TerminalMetric& metric,
                             const grid::GridSpec& grid, const grid::VectorField& info_field,
                             const InfoVector& z0, const hj::SolverConfig& cfg,
                             double step, double rel_tol, double boundary_cells);

// --- value monotonicity in the horizon ------------------------------------

struct MonotonicityReport {
  long checked = 0;
  long violations = 0;
  double eps_diss = 0.0;  // largest increase of phi between consecutive snapshots
};

MonotonicityReport monotonicity(const hj::HybridSolution& sol, double boundary_cells,
                                double tol);

// --- report ---------------------------------------------------------------

struct Check {
  std::string name;
  double value = 0.0;
  double threshold = 0.0;
  bool upper = true;  // value <= threshold passes; otherwise value >= threshold
  std::string detail;

  bool passed() const { return upper ? value <= threshold : value >= threshold; }
};

struct ValidationReport {
  std::vector<Check> checks;
  json details = json::object();

  void add(std::string name, double value, double threshold, bool upper,
           std::string detail = {});
  bool passed() const;
  std::vector<std::string> violations() const;
  json to_json() const;
  std::string summary() const;
};

struct Thresholds {
  double terminal_costate_ratio = 0.1;
  double lambda_rel = 0.05;
  double value_gap = 5e-2;
  double oracle_gap_rel = 0.02;
  double monotonicity_eps = 1e-3;
  double z0_gradient_rel_tol = 1e-2;
  double z0_gradient_fraction = 0.9;
  double toy_max_error = 5e-2;
  double toy_ratio_min = 0.4;
  double toy_ratio_max = 0.6;
};

/// Oracle outputs gathered for one solution/trajectory pair. Missing entries
/// are simply not checked.
struct OracleOutputs {
  std::optional<double> brute_force_cost;
  std::optional<GradientCheck> z0_gradient;
  std::optional<MonotonicityReport> monotone;
  std::optional<ToyComparison> toy_coarse;
  std::optional<ToyComparison> toy_fine;
  /// max ||p(0)|| over the initial states examined (for the costate ratio)
  std::optional<double> max_initial_costate;
};

/// Residuals of `traj` plus whichever oracle outputs are present.
ValidationReport validate(const hj::HybridSolution& sol, const dynamics::Trajectory& traj,
                          const matrixcore::TerminalMetric& metric,
                          const OracleOutputs& oracles, const Thresholds& th,
                          const std::string& label = {});

/// Appends every check of `part` to `into`, prefixing names with `label`.
void merge(ValidationReport& into, const ValidationReport& part, const std::string& label);

}  // namespace infotraj::validation
