#pragma once

#include <Eigen/Dense>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "infotraj/matrixcore.hpp"

namespace infotraj {

using StateVector = Eigen::VectorXd;

namespace dynamics {

inline constexpr double kPi = 3.14159265358979323846;

/// Wraps an angle into [-pi, pi).
double wrap_angle(double a);

/// Dubins vehicle pose: position in meters, heading in radians.
struct State {
  double X = 0.0;
  double Y = 0.0;
  double psi = 0.0;

  StateVector to_vector() const;
  static State from_vector(const StateVector& x);
};

/// Information rate Q(x) (per second) gathered by the sensors carried on a
/// vehicle at pose x moving with the given forward speed.
class InformationSource {
 public:
  virtual ~InformationSource() = default;
  virtual int param_dim() const = 0;
  virtual InfoMatrix rate(const State& x, double speed) const = 0;
};

/// Cascade dynamics  xdot = f(x) + g(x) u,  zdot = l(x) = vec(Q(x)),
/// with scalar control u in [-bound, bound].
///
/// g is assumed independent of x by the characteristic extractor.
class CascadeSystem {
 public:
  virtual ~CascadeSystem() = default;

  virtual int state_dim() const = 0;
  /// p, the side of the information matrix; z has p*p entries.
  virtual int info_dim() const = 0;

  virtual StateVector drift(const StateVector& x) const = 0;
  /// df/dx, state_dim x state_dim.
  virtual Eigen::MatrixXd drift_jacobian(const StateVector& x) const = 0;
  virtual StateVector control_gain(const StateVector& x) const = 0;
  virtual double control_bound() const = 0;

  virtual InfoMatrix info_matrix(const StateVector& x) const = 0;
  InfoVector info_rate(const StateVector& x) const;

  /// |dH/dp_i| bound at x over all admissible controls.
  virtual StateVector speed_bound(const StateVector& x) const = 0;
  /// |dH/dp_i| bound over the whole state space.
  virtual StateVector global_speed_bound() const = 0;

  /// Maps periodic coordinates back into their canonical range.
  virtual void wrap(StateVector& x) const { (void)x; }

  virtual std::vector<std::string> state_names() const = 0;
};

/// Constant-speed vehicle with bounded turn rate:
///   f = (v cos psi, v sin psi, 0), g = (0, 0, 1), |u| <= omega_max.
class DubinsCar final : public CascadeSystem {
 public:
  DubinsCar(double speed, double omega_max,
            std::shared_ptr<const InformationSource> info);

  double speed() const { return speed_; }
  double omega_max() const { return omega_max_; }
  const InformationSource* information() const { return info_.get(); }

  int state_dim() const override { return 3; }
  int info_dim() const override;
  StateVector drift(const StateVector& x) const override;
  Eigen::MatrixXd drift_jacobian(const StateVector& x) const override;
  StateVector control_gain(const StateVector& x) const override;
  double control_bound() const override { return omega_max_; }
  InfoMatrix info_matrix(const StateVector& x) const override;
  StateVector speed_bound(const StateVector& x) const override;
  StateVector global_speed_bound() const override;
  void wrap(StateVector& x) const override;
  std::vector<std::string> state_names() const override {
    return {"X", "Y", "psi"};
  }

 private:
  double speed_;
  double omega_max_;
  std::shared_ptr<const InformationSource> info_;
};

/// One-dimensional cascade  xdot = a + b u, |u| <= c,  zdot = l(x) (p = 1).
/// Used for low-dimensional cross-checks against the full-grid solver.
class ScalarCascade final : public CascadeSystem {
 public:
  ScalarCascade(double drift, double gain, double bound,
                std::function<double(double)> info);

  /// xdot = u, |u| <= 1, zdot = x^2.
  static std::shared_ptr<ScalarCascade> toy();

  int state_dim() const override { return 1; }
  int info_dim() const override { return 1; }
  StateVector drift(const StateVector& x) const override;
  Eigen::MatrixXd drift_jacobian(const StateVector& x) const override;
  StateVector control_gain(const StateVector& x) const override;
  double control_bound() const override { return bound_; }
  InfoMatrix info_matrix(const StateVector& x) const override;
  StateVector speed_bound(const StateVector& x) const override;
  StateVector global_speed_bound() const override;
  std::vector<std::string> state_names() const override { return {"x"}; }

 private:
  double drift_;
  double gain_;
  double bound_;
  std::function<double(double)> info_;
};

/// Piecewise-constant control: value[k] applies on [breakpoints[k], breakpoints[k+1]).
struct ControlSignal {
  std::vector<double> breakpoints;
  std::vector<double> values;

  static ControlSignal constant(double u, double t);
  /// values.size() equal-length segments covering [0, t].
  static ControlSignal segments(std::vector<double> values, double t);

  double at(double s) const;
  double duration() const { return breakpoints.empty() ? 0.0 : breakpoints.back(); }
  /// Throws InputError on malformed breakpoints or a value outside [-bound, bound].
  void check(double bound) const;
};

struct TrajectorySample {
  double s = 0.0;
  StateVector x;
  double u = 0.0;
  InfoVector z;
  Eigen::VectorXd p;      // empty for open-loop rollouts
  InfoVector lambda;      // empty for open-loop rollouts
};

/// Characteristic residuals of an extracted trajectory.
struct Residuals {
  double terminal_costate = 0.0;     // ||p(t)||
  double initial_costate = 0.0;      // ||p(0)||
  double lambda_mismatch = 0.0;      // ||lambda(0) - G_z(xi(t))||
  double lambda_mismatch_rel = 0.0;  // ... / ||G_z(xi(t))||
  double value_gap = 0.0;            // |phi(t, x0) - G(xi(t))|
};

struct Trajectory {
  std::vector<std::string> state_names;
  std::vector<TrajectorySample> samples;
  double terminal_cost = 0.0;
  std::optional<Residuals> residuals;

  const TrajectorySample& front() const { return samples.front(); }
  const TrajectorySample& back() const { return samples.back(); }
  double duration() const { return samples.empty() ? 0.0 : samples.back().s; }
};

/// Derivative of the augmented state for a fixed control.
struct AugmentedRate {
  StateVector dx;
  InfoVector dz;
};
AugmentedRate augmented_rate(const CascadeSystem& sys, const StateVector& x,
                             double u);

/// One classical RK4 step of (x, z) under a constant control.
void rk4_step(const CascadeSystem& sys, StateVector& x, InfoVector& z, double u,
              double dt);

/// Rolls the cascade forward from (x0, z0) under u over [0, t] with fixed-step
/// RK4. Steps never straddle a control breakpoint.
Trajectory simulate_open_loop(const CascadeSystem& sys, const StateVector& x0,
                              const InfoVector& z0, const ControlSignal& u,
                              double t, double dt);

struct CostReport {
  double cost = 0.0;             // G(xi(t))
  double normalized_gain = 0.0;  // G(xi(t)) - G(xi(0))
};

CostReport evaluate_cost(const matrixcore::TerminalMetric& metric,
                         const Trajectory& traj);

/// CSV with '#' unit comments, a header row, then one row per sample:
/// s, <state names>, u, z_1..z_m, cost_so_far [, p_*, lambda_*].
void write_trajectory_csv(std::ostream& os, const Trajectory& traj,
                          const matrixcore::TerminalMetric& metric);
Trajectory read_trajectory_csv(std::istream& is);

}  // namespace dynamics
}  // namespace infotraj
