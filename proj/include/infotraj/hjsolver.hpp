#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "infotraj/dynamics.hpp"
#include "infotraj/grid.hpp"
#include "infotraj/matrixcore.hpp"

namespace infotraj::hj {

using dynamics::CascadeSystem;

/// Costates: p for x, lambda for z.
struct Adjoint {
  Eigen::VectorXd p;
  InfoVector lambda;
};

enum class Integrator { Euler, TvdRk2 };
enum class DissipationMode { Global, Local };
/// Sum reproduces a misprinted Lax-Friedrichs display, (s+ + s-)/2 in the
/// dissipation. It exists only so the validation suite can show it fails.
enum class DissipationForm { Difference, Sum };

struct SolverConfig {
  double horizon = 1.0;  // s
  double cfl = 0.5;
  Integrator integrator = Integrator::Euler;
  DissipationMode dissipation = DissipationMode::Global;
  DissipationForm dissipation_form = DissipationForm::Difference;
  /// Keep every n-th step (0: only the initial and final fields).
  int snapshot_stride = 0;
  /// 0 selects resolve_workers(0).
  int workers = 0;

  /// Throws ConfigError.
  void check() const;
};

/// H(x, u, sigma) = <f(x), p> + <g(x) u, p> + <vec Q, lambda>.
double hamiltonian(const CascadeSystem& sys, const StateVector& x, double u,
                   const Adjoint& sigma, const InfoMatrix& Q);

/// min over |u| <= c of H:  <f, p> - c |g^T p| + <vec Q, lambda>.
double optimal_hamiltonian(const CascadeSystem& sys, const StateVector& x,
                           const Adjoint& sigma, const InfoMatrix& Q);

/// Minimizing bang-bang control -c sign(g^T p); zero when |g^T p| <= tie.
double policy(const CascadeSystem& sys, const StateVector& x,
              const Eigen::VectorXd& p, double tie = 1e-12);

/// Bounds on |dH/dp_i|: the global ones or those at x.
Eigen::VectorXd dissipation_coeffs(const CascadeSystem& sys, DissipationMode mode,
                                   const StateVector& x);

/// Lax-Friedrichs numerical Hamiltonian on the x-costate,
///   optimal_hamiltonian(x, (p+ + p-)/2) + sum_i alpha_i (p+_i - p-_i)/2.
/// The value function is marched forward as phi_s = this quantity, so the
/// dissipation enters with a plus sign (it is a diffusion term). lambda carries
/// no differencing.
double lf_hamiltonian(const CascadeSystem& sys, const StateVector& x,
                      const Eigen::VectorXd& p_plus, const Eigen::VectorXd& p_minus,
                      const InfoVector& lambda, const InfoMatrix& Q,
                      const Eigen::VectorXd& alpha,
                      DissipationForm form = DissipationForm::Difference);

/// c / sum_i (alpha_i / dx_i). Throws ConfigError when every alpha_i is zero.
double cfl_dt(const grid::GridSpec& grid, const Eigen::VectorXd& alpha, double c);

/// R_x = (dPhi/dx)(f + g u) at node k, with each derivative taken on the side
/// the vehicle is heading to (D+ where the velocity component is positive).
InfoVector rx_term(const grid::VectorField& Phi, const CascadeSystem& sys,
                   double u, std::size_t k);

/// vec Q(x^k) at every node.
grid::VectorField precompute_info_field(const CascadeSystem& sys,
                                        const grid::GridSpec& grid, int workers = 0);

struct Snapshot {
  double time = 0.0;
  grid::ScalarField phi;
  grid::VectorField Phi;
};

struct HybridSolution {
  grid::GridSpec grid;
  InfoVector z0;
  SolverConfig config;
  std::vector<Snapshot> snapshots;  // time-ordered, first at s = 0, last at horizon
  long steps = 0;
  std::string provenance;

  const Snapshot& final() const { return snapshots.back(); }
};

/// Hybrid method of lines: at every x-node march
///   phi_s = lf_hamiltonian(x, D+phi, D-phi, Phi),
///   Phi_s = Upsilon(Q(x), Phi) + R_x(Phi, pi),
/// from phi = G(z0), Phi = G_z(z0), with Euler or TVD-RK2 steps sized by CFL.
/// Throws InstabilityError naming the step when a value becomes non-finite.
HybridSolution hybrid_solve(const CascadeSystem& sys,
                            const matrixcore::TerminalMetric& metric,
                            const grid::GridSpec& grid,
                            const grid::VectorField& info_field,
                            const InfoVector& z0, const SolverConfig& cfg);

/// Full-grid Lax-Friedrichs method of lines over the joint (x, z) grid whose
/// first state_dim axes are x and the remaining p^2 axes z. Reference only:
/// refuses more than three joint dimensions.
grid::ScalarField classic_solve(const CascadeSystem& sys,
                                const matrixcore::TerminalMetric& metric,
                                const grid::GridSpec& joint_grid,
                                const SolverConfig& cfg);

}  // namespace infotraj::hj
