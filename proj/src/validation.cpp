#include "infotraj/validation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "infotraj/errors.hpp"
#include "infotraj/grid.hpp"

namespace infotraj::validation {

double toy_exact_value(double x, double z, double t) {
  const double ax = std::abs(x);
  return -std::log(z + x * x * t + ax * t * t + t * t * t / 3.0);
}

namespace {

int nodes_for(double lo, double hi, double h) {
  return static_cast<int>(std::lround((hi - lo) / h)) + 1;
}

}  // namespace

ToyComparison compare_toy(const ToyOptions& o) {
  const auto start = std::chrono::steady_clock::now();
  const auto sys = dynamics::ScalarCascade::toy();
  const matrixcore::LogDetMetric metric;

  const grid::GridSpec xg({{-o.x_half, o.x_half, nodes_for(-o.x_half, o.x_half, o.dx), false}});
  const grid::GridSpec joint({{-o.x_half, o.x_half, nodes_for(-o.x_half, o.x_half, o.dx), false},
                              {o.z_min, o.z_max, nodes_for(o.z_min, o.z_max, o.dx), false}});

  hj::SolverConfig cfg;
  cfg.horizon = o.horizon;
  cfg.cfl = o.cfl;
  cfg.integrator = o.integrator;
  cfg.workers = o.workers;
  hj::SolverConfig hybrid_cfg = cfg;
  hybrid_cfg.dissipation_form = o.form;
  hybrid_cfg.dissipation = o.dissipation;
  cfg.dissipation = o.classic_dissipation;

  const auto info = hj::precompute_info_field(*sys, xg, o.workers);
  const InfoVector z0 = InfoVector::Constant(1, o.z0);
  const auto hybrid = hj::hybrid_solve(*sys, metric, xg, info, z0, hybrid_cfg);
  const auto classic = hj::classic_solve(*sys, metric, joint, cfg);

  ToyComparison out;
  const auto& phi = hybrid.final().phi;
  for (std::size_t k = 0; k < xg.size(); ++k) {
    const double x = xg.node(k)[0];
    if (std::abs(x) > o.interior + 1e-12) continue;
    const double c = grid::interpolate(classic, StateVector{{x, o.z0}});
    const double e = toy_exact_value(x, o.z0, o.horizon);
    out.vs_classic = std::max(out.vs_classic, std::abs(phi.values[k] - c));
    out.vs_exact = std::max(out.vs_exact, std::abs(phi.values[k] - e));
    out.classic_vs_exact = std::max(out.classic_vs_exact, std::abs(c - e));
  }
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

GradientCheck z0_gradient_check(const dynamics::CascadeSystem& sys,
                             const matrixcore::TerminalMetric& metric,
                             const grid::GridSpec& grid, const grid::VectorField& info_field,
                             const InfoVector& z0, const hj::SolverConfig& cfg,
                             double step, double rel_tol, double boundary_cells) {
  hj::SolverConfig c = cfg;
  c.snapshot_stride = 0;
  const auto base = hj::hybrid_solve(sys, metric, grid, info_field, z0, c);
  const auto& Phi = base.final().Phi;
  const int m = Phi.width;
  const std::size_t N = grid.size();
  std::vector<double> fd(N * std::size_t(m));
  for (int j = 0; j < m; ++j) {
    InfoVector up = z0, down = z0;
    up[j] += step;
    down[j] -= step;
    const auto a = hj::hybrid_solve(sys, metric, grid, info_field, up, c);
    const auto b = hj::hybrid_solve(sys, metric, grid, info_field, down, c);
    for (std::size_t k = 0; k < N; ++k) {
      fd[k * std::size_t(m) + std::size_t(j)] =
          (a.final().phi.values[k] - b.final().phi.values[k]) / (2.0 * step);
    }
  }

  GradientCheck out;
  std::vector<double> errors;
  for (std::size_t k = 0; k < N; ++k) {
    if (grid.cells_from_boundary(grid.node(k)) < boundary_cells) {
      ++out.excluded_points;
      continue;
    }
    const Eigen::Map<const Eigen::VectorXd> ref(&fd[k * std::size_t(m)], m);
    const double err = (Phi.at(k) - ref).norm() / std::max(ref.norm(), 1e-300);
    errors.push_back(err);
    ++out.interior_points;
    if (err <= rel_tol) ++out.passing;
    out.max_rel_error = std::max(out.max_rel_error, err);
  }
  if (!errors.empty()) {
    auto mid = errors.begin() + std::ptrdiff_t(errors.size() / 2);
    std::nth_element(errors.begin(), mid, errors.end());
    out.median_rel_error = *mid;
  }
  return out;
}

MonotonicityReport monotonicity(const hj::HybridSolution& sol, double boundary_cells,
                                double tol) {
  MonotonicityReport out;
  const auto& g = sol.grid;
  std::vector<char> inside(g.size());
  for (std::size_t k = 0; k < g.size(); ++k) {
    inside[k] = g.cells_from_boundary(g.node(k)) >= boundary_cells;
  }
  for (std::size_t i = 1; i < sol.snapshots.size(); ++i) {
    const auto& a = sol.snapshots[i - 1].phi.values;
    const auto& b = sol.snapshots[i].phi.values;
    for (std::size_t k = 0; k < g.size(); ++k) {
      if (!inside[k]) continue;
      ++out.checked;
      const double rise = b[k] - a[k];
      out.eps_diss = std::max(out.eps_diss, rise);
      if (rise > tol) ++out.violations;
    }
  }
  return out;
}

// --- report ---------------------------------------------------------------

void ValidationReport::add(std::string name, double value, double threshold, bool upper,
                           std::string detail) {
  checks.push_back({std::move(name), value, threshold, upper, std::move(detail)});
}

bool ValidationReport::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.passed(); });
}

std::vector<std::string> ValidationReport::violations() const {
  std::vector<std::string> out;
  for (const auto& c : checks)
    if (!c.passed()) out.push_back(c.name);
  return out;
}

json ValidationReport::to_json() const {
  json list = json::array();
  for (const auto& c : checks) {
    list.push_back({{"name", c.name},
                    {"value", c.value},
                    {"threshold", c.threshold},
                    {"relation", c.upper ? "<=" : ">="},
                    {"passed", c.passed()},
                    {"detail", c.detail}});
  }
  return {{"passed", passed()}, {"violations", violations()}, {"checks", list},
          {"details", details}};
}

std::string ValidationReport::summary() const {
  std::ostringstream os;
  for (const auto& c : checks) {
    char line[256];
    std::snprintf(line, sizeof line, "%-4s %-44s %12.5g %s %-10.4g", c.passed() ? "ok" : "FAIL",
                  c.name.c_str(), c.value, c.upper ? "<=" : ">=", c.threshold);
    os << line;
    if (!c.detail.empty()) os << "  " << c.detail;
    os << '\n';
  }
  os << (passed() ? "all checks passed" : std::to_string(violations().size()) + " check(s) failed")
     << '\n';
  return os.str();
}

void merge(ValidationReport& into, const ValidationReport& part, const std::string& label) {
  for (auto c : part.checks) {
    if (!label.empty()) c.name = label + "." + c.name;
    into.checks.push_back(std::move(c));
  }
  if (!part.details.empty()) into.details[label.empty() ? "main" : label] = part.details;
}

ValidationReport validate(const hj::HybridSolution& sol, const dynamics::Trajectory& traj,
                          const matrixcore::TerminalMetric& metric,
                          const OracleOutputs& o, const Thresholds& th,
                          const std::string& label) {
  ValidationReport r;
  const std::string pre = label.empty() ? "" : label + ".";
  if (traj.residuals) {
    const auto& res = *traj.residuals;
    const double scale = o.max_initial_costate.value_or(res.initial_costate);
    if (scale > 0.0) {
      r.add(pre + "terminal_costate_ratio", res.terminal_costate / scale,
            th.terminal_costate_ratio, true, "||p(t)|| / max ||p(0)||");
    }
    r.add(pre + "lambda_mismatch_rel", res.lambda_mismatch_rel, th.lambda_rel, true,
          "||lambda(0) - G_z(xi(t))|| relative");
    r.add(pre + "value_gap", res.value_gap, th.value_gap, true, "|phi(t,x0) - G(xi(t))|");
  }
  const double g0 = metric.value(sol.z0);
  if (o.brute_force_cost) {
    const double scale = std::max(std::abs(*o.brute_force_cost - g0), 1e-12);
    r.add(pre + "oracle_gap_rel", (traj.terminal_cost - *o.brute_force_cost) / scale,
          th.oracle_gap_rel, true, "(extracted - brute force) / |brute force gain|");
  }
  if (o.z0_gradient) {
    r.add(pre + "z0_gradient_fraction", o.z0_gradient->fraction(), th.z0_gradient_fraction, false,
          "share of interior nodes within the relative tolerance");
    r.details["z0_gradient"] = {{"interior_points", o.z0_gradient->interior_points},
                             {"excluded_fraction", o.z0_gradient->excluded_fraction()},
                             {"max_rel_error", o.z0_gradient->max_rel_error},
                             {"median_rel_error", o.z0_gradient->median_rel_error}};
  }
  if (o.monotone) {
    r.add(pre + "monotonicity_eps", o.monotone->eps_diss, th.monotonicity_eps, true,
          std::to_string(o.monotone->violations) + " violations of " +
              std::to_string(o.monotone->checked));
  }
  if (o.toy_coarse) {
    r.add(pre + "toy_hybrid_vs_classic", o.toy_coarse->vs_classic, th.toy_max_error, true);
    r.add(pre + "toy_hybrid_vs_exact", o.toy_coarse->vs_exact, th.toy_max_error, true);
    if (o.toy_fine && o.toy_coarse->vs_classic > 0.0) {
      const double ratio = o.toy_fine->vs_classic / o.toy_coarse->vs_classic;
      r.add(pre + "toy_refinement_ratio_min", ratio, th.toy_ratio_min, false);
      r.add(pre + "toy_refinement_ratio_max", ratio, th.toy_ratio_max, true);
    }
  }
  return r;
}

}  // namespace infotraj::validation
