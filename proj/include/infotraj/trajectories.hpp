#pragma once

#include <vector>

#include "infotraj/dynamics.hpp"
#include "infotraj/errors.hpp"
#include "infotraj/hjsolver.hpp"

namespace infotraj::traj {

using dynamics::ControlSignal;
using dynamics::Trajectory;

/// The extracted path left the grid; partial() holds everything up to the exit.
class BoundaryExitError : public InputError {
 public:
  BoundaryExitError(const std::string& what, Trajectory partial)
      : InputError(what), partial_(std::move(partial)) {}
  const Trajectory& partial() const { return partial_; }

 private:
  Trajectory partial_;
};

struct ExtractOptions {
  double dt = 0.05;  // s, RK4 step
  /// |g^T p| below this keeps the previous control.
  double hysteresis = 1e-9;
  /// Integrate only this long (<= 0: the full horizon). Used by receding legs.
  double duration = 0.0;
  /// Mutation hook for the validation suite: -1 turns the policy around.
  double policy_sign = 1.0;
};

/// d vec(Q) / dx by central differences, step h_i per axis.
Eigen::MatrixXd info_jacobian(const dynamics::CascadeSystem& sys, const StateVector& x,
                              const Eigen::VectorXd& step);

/// Forward characteristic integration seeded from the final snapshot:
/// p(0) = interpolated central D_x phi, lambda = interpolated Phi (constant),
///   x' = f + g u, z' = vec Q(x), p' = -f_x^T p - l_x^T lambda,
/// with u the policy at p held over each RK4 step.
Trajectory extract_characteristic(const hj::HybridSolution& sol,
                                  const dynamics::CascadeSystem& sys,
                                  const matrixcore::TerminalMetric& metric,
                                  const StateVector& x0, const ExtractOptions& opts = {});

/// K legs; before each, re-solves from the current z over the remaining horizon.
Trajectory extract_receding(const dynamics::CascadeSystem& sys,
                            const matrixcore::TerminalMetric& metric,
                            const grid::GridSpec& grid, const grid::VectorField& info_field,
                            const StateVector& x0, const InfoVector& z0,
                            const hj::SolverConfig& cfg, int legs,
                            const ExtractOptions& opts = {});

struct BruteForceResult {
  double cost = 0.0;
  ControlSignal control;
  long evaluated = 0;
};

/// Minimum of G(xi(t)) over the 3^K controls taking values {0, -c, +c} on K
/// equal segments, optionally followed by coordinate descent on the switch
/// times. Ties keep the first sequence found, and u = 0 comes first.
BruteForceResult brute_force_value(const dynamics::CascadeSystem& sys,
                                   const matrixcore::TerminalMetric& metric,
                                   const StateVector& x0, const InfoVector& z0, double t,
                                   int segments, bool refine, double dt);

/// Switch instants of a sampled control (midpoints between differing samples).
std::vector<double> switch_times(const Trajectory& traj);

/// Angle in radians between the mean velocity over the last `fraction` of the
/// path and the ray from `center` to the final position.
double radial_misalignment(const Trajectory& traj, const Eigen::Vector2d& center,
                           double fraction = 0.2);

}  // namespace infotraj::traj
