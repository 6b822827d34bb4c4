#include "infotraj/trajectories.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "infotraj/grid.hpp"

namespace infotraj::traj {

using dynamics::CascadeSystem;
using dynamics::TrajectorySample;

Eigen::MatrixXd info_jacobian(const CascadeSystem& sys, const StateVector& x,
                              const Eigen::VectorXd& step) {
  const int n = sys.state_dim();
  const int m = sys.info_dim() * sys.info_dim();
  Eigen::MatrixXd J(m, n);
  for (int i = 0; i < n; ++i) {
    StateVector hi = x, lo = x;
    hi[i] += step[i];
    lo[i] -= step[i];
    J.col(i) = (sys.info_rate(hi) - sys.info_rate(lo)) / (2.0 * step[i]);
  }
  return J;
}

namespace {

struct CharState {
  StateVector x;
  InfoVector z;
  Eigen::VectorXd p;
};

struct CharRate {
  StateVector dx;
  InfoVector dz;
  Eigen::VectorXd dp;
};

CharRate char_rate(const CascadeSystem& sys, const CharState& c, const InfoVector& lambda,
                   double u, const Eigen::VectorXd& fd_step) {
  CharRate r;
  r.dx = sys.drift(c.x) + sys.control_gain(c.x) * u;
  r.dz = sys.info_rate(c.x);
  r.dp = -sys.drift_jacobian(c.x).transpose() * c.p -
         info_jacobian(sys, c.x, fd_step).transpose() * lambda;
  return r;
}

CharState advance(const CharState& c, const CharRate& r, double h) {
  return {c.x + h * r.dx, c.z + h * r.dz, c.p + h * r.dp};
}

void rk4(const CascadeSystem& sys, CharState& c, const InfoVector& lambda, double u,
         double h, const Eigen::VectorXd& fd_step) {
  const auto k1 = char_rate(sys, c, lambda, u, fd_step);
  const auto k2 = char_rate(sys, advance(c, k1, 0.5 * h), lambda, u, fd_step);
  const auto k3 = char_rate(sys, advance(c, k2, 0.5 * h), lambda, u, fd_step);
  const auto k4 = char_rate(sys, advance(c, k3, h), lambda, u, fd_step);
  c.x += (h / 6.0) * (k1.dx + 2.0 * k2.dx + 2.0 * k3.dx + k4.dx);
  c.z += (h / 6.0) * (k1.dz + 2.0 * k2.dz + 2.0 * k3.dz + k4.dz);
  c.p += (h / 6.0) * (k1.dp + 2.0 * k2.dp + 2.0 * k3.dp + k4.dp);
  sys.wrap(c.x);
}

std::string describe(const StateVector& x) {
  std::ostringstream os;
  os << "(";
  for (Eigen::Index i = 0; i < x.size(); ++i) os << (i ? ", " : "") << x[i];
  os << ")";
  return os.str();
}

}  // namespace

Trajectory extract_characteristic(const hj::HybridSolution& sol, const CascadeSystem& sys,
                                  const matrixcore::TerminalMetric& metric,
                                  const StateVector& x0, const ExtractOptions& opts) {
  const auto& g = sol.grid;
  if (x0.size() != g.dims()) throw DimensionError("x0 has wrong dimension");
  StateVector start = x0;
  sys.wrap(start);
  if (!g.contains(start)) throw InputError("initial state " + describe(x0) + " lies outside the grid");
  if (!(opts.dt > 0.0)) throw InputError("extraction dt must be positive");

  const auto& last = sol.final();
  const double horizon = last.time;
  const double span = opts.duration > 0.0 ? std::min(opts.duration, horizon) : horizon;

  const auto grads = grid::central_gradient(last.phi);
  Eigen::VectorXd p0(g.dims());
  for (int a = 0; a < g.dims(); ++a) p0[a] = grid::interpolate(grads[std::size_t(a)], start);
  const InfoVector lambda = grid::interpolate(last.Phi, start);
  const double phi0 = grid::interpolate(last.phi, start);

  Eigen::VectorXd fd_step(g.dims());
  for (int a = 0; a < g.dims(); ++a) fd_step[a] = 0.5 * g.spacing(a);

  Trajectory traj;
  traj.state_names = sys.state_names();
  CharState c{start, sol.z0, p0};
  double u = 0.0;
  const auto choose = [&](const CharState& cs) {
    const double sw = opts.policy_sign * sys.control_gain(cs.x).dot(cs.p);
    if (std::abs(sw) >= opts.hysteresis) u = sw > 0.0 ? -sys.control_bound() : sys.control_bound();
    return u;
  };

  const long steps = std::max<long>(1, static_cast<long>(std::ceil(span / opts.dt - 1e-9)));
  const double h = span / double(steps);
  traj.samples.push_back({0.0, c.x, choose(c), c.z, c.p, lambda});
  for (long k = 0; k < steps; ++k) {
    const double uk = traj.samples.back().u;
    rk4(sys, c, lambda, uk, h, fd_step);
    const double s = (k + 1 == steps) ? span : h * double(k + 1);
    if (!g.contains(c.x)) {
      traj.samples.push_back({s, c.x, uk, c.z, c.p, lambda});
      traj.terminal_cost = metric.value(c.z);
      throw BoundaryExitError("trajectory from " + describe(x0) + " left the grid at s = " +
                                  std::to_string(s),
                              std::move(traj));
    }
    const double next = (k + 1 == steps) ? uk : choose(c);
    traj.samples.push_back({s, c.x, next, c.z, c.p, lambda});
  }

  traj.terminal_cost = metric.value(c.z);
  dynamics::Residuals r;
  r.terminal_costate = c.p.norm();
  r.initial_costate = p0.norm();
  const InfoVector gz = metric.gradient(c.z);
  r.lambda_mismatch = (lambda - gz).norm();
  r.lambda_mismatch_rel = r.lambda_mismatch / std::max(gz.norm(), 1e-300);
  r.value_gap = std::abs(phi0 - traj.terminal_cost);
  traj.residuals = r;
  return traj;
}

Trajectory extract_receding(const CascadeSystem& sys, const matrixcore::TerminalMetric& metric,
                            const grid::GridSpec& grid, const grid::VectorField& info_field,
                            const StateVector& x0, const InfoVector& z0,
                            const hj::SolverConfig& cfg, int legs,
                            const ExtractOptions& opts) {
  if (legs < 1) throw InputError("receding extraction needs at least one leg");
  const double t = cfg.horizon;
  Trajectory out;
  out.state_names = sys.state_names();
  StateVector x = x0;
  InfoVector z = z0;
  dynamics::Residuals first{};
  double phi0 = 0.0;
  for (int k = 0; k < legs; ++k) {
    const double tau = t * double(k) / double(legs);
    const double tau_next = (k + 1 == legs) ? t : t * double(k + 1) / double(legs);
    hj::SolverConfig leg_cfg = cfg;
    leg_cfg.horizon = t - tau;
    leg_cfg.snapshot_stride = 0;
    const auto sol = hj::hybrid_solve(sys, metric, grid, info_field, z, leg_cfg);
    ExtractOptions leg_opts = opts;
    leg_opts.duration = (k + 1 == legs) ? 0.0 : tau_next - tau;
    Trajectory leg;
    try {
      leg = extract_characteristic(sol, sys, metric, x, leg_opts);
    } catch (const BoundaryExitError& e) {
      Trajectory partial = e.partial();
      for (std::size_t i = out.samples.empty() ? 0 : 1; i < partial.samples.size(); ++i) {
        auto smp = partial.samples[i];
        smp.s += tau;
        out.samples.push_back(std::move(smp));
      }
      out.terminal_cost = partial.terminal_cost;
      throw BoundaryExitError(e.what(), std::move(out));
    }
    if (k == 0) {
      first = *leg.residuals;
      StateVector start = x;
      sys.wrap(start);
      phi0 = grid::interpolate(sol.final().phi, start);
    }
    if (!out.samples.empty()) {
      // the junction sample starts the new leg
      out.samples.back().u = leg.front().u;
      out.samples.back().p = leg.front().p;
      out.samples.back().lambda = leg.front().lambda;
    }
    for (std::size_t i = out.samples.empty() ? 0 : 1; i < leg.samples.size(); ++i) {
      auto smp = leg.samples[i];
      smp.s += tau;
      out.samples.push_back(std::move(smp));
    }
    if (k + 1 == legs) {
      first.terminal_costate = leg.residuals->terminal_costate;
    }
    x = leg.back().x;
    z = leg.back().z;
  }
  out.terminal_cost = metric.value(out.back().z);
  const InfoVector gz = metric.gradient(out.back().z);
  const InfoVector& lambda0 = out.front().lambda;
  first.lambda_mismatch = (lambda0 - gz).norm();
  first.lambda_mismatch_rel = first.lambda_mismatch / std::max(gz.norm(), 1e-300);
  first.value_gap = std::abs(phi0 - out.terminal_cost);
  out.residuals = first;
  return out;
}

namespace {

double rollout_cost(const CascadeSystem& sys, const matrixcore::TerminalMetric& metric,
                    const StateVector& x0, const InfoVector& z0, const ControlSignal& u,
                    double t, double dt) {
  const auto traj = dynamics::simulate_open_loop(sys, x0, z0, u, t, dt);
  return metric.value(traj.back().z);
}

}  // namespace

BruteForceResult brute_force_value(const CascadeSystem& sys,
                                   const matrixcore::TerminalMetric& metric,
                                   const StateVector& x0, const InfoVector& z0, double t,
                                   int segments, bool refine, double dt) {
  if (segments < 1 || segments > 8) {
    throw InputError("exhaustive control search supports 1 to 8 segments, got " +
                     std::to_string(segments));
  }
  if (!(t >= 0.0)) throw InputError("horizon must be non-negative");
  BruteForceResult best;
  if (t == 0.0) {
    best.cost = metric.value(z0);
    best.control = ControlSignal{{0.0, 0.0}, {0.0}};
    return best;
  }
  const double c = sys.control_bound();
  const double levels[3] = {0.0, -c, c};
  long total = 1;
  for (int i = 0; i < segments; ++i) total *= 3;

  best.cost = std::numeric_limits<double>::infinity();
  std::vector<double> values(static_cast<std::size_t>(segments));
  for (long code = 0; code < total; ++code) {
    long rest = code;
    for (int i = 0; i < segments; ++i) {
      values[std::size_t(i)] = levels[rest % 3];
      rest /= 3;
    }
    const auto u = ControlSignal::segments(values, t);
    const double cost = rollout_cost(sys, metric, x0, z0, u, t, dt);
    ++best.evaluated;
    if (cost < best.cost) {
      best.cost = cost;
      best.control = u;
    }
  }

  if (refine && segments > 1) {
    double delta = t / double(segments) / 4.0;
    const double min_delta = t / double(segments) / 64.0;
    while (delta >= min_delta) {
      bool improved = true;
      while (improved) {
        improved = false;
        for (std::size_t b = 1; b + 1 < best.control.breakpoints.size(); ++b) {
          for (double dir : {-1.0, 1.0}) {
            ControlSignal trial = best.control;
            trial.breakpoints[b] += dir * delta;
            if (!(trial.breakpoints[b] > trial.breakpoints[b - 1] + 1e-9) ||
                !(trial.breakpoints[b] < trial.breakpoints[b + 1] - 1e-9)) {
              continue;
            }
            const double cost = rollout_cost(sys, metric, x0, z0, trial, t, dt);
            ++best.evaluated;
            if (cost < best.cost - 1e-15 * std::abs(best.cost)) {
              best.cost = cost;
              best.control = std::move(trial);
              improved = true;
              break;
            }
          }
        }
      }
      delta *= 0.5;
    }
  }
  return best;
}

std::vector<double> switch_times(const Trajectory& traj) {
  std::vector<double> out;
  for (std::size_t i = 1; i + 1 < traj.samples.size(); ++i) {
    if (traj.samples[i].u != traj.samples[i - 1].u) out.push_back(traj.samples[i].s);
  }
  return out;
}

double radial_misalignment(const Trajectory& traj, const Eigen::Vector2d& center,
                           double fraction) {
  if (traj.samples.size() < 2) throw InputError("trajectory too short");
  const double t = traj.duration();
  const double s0 = t * (1.0 - fraction);
  std::size_t i0 = 0;
  while (i0 + 1 < traj.samples.size() && traj.samples[i0].s < s0) ++i0;
  if (i0 + 1 >= traj.samples.size()) i0 = traj.samples.size() - 2;
  const auto& a = traj.samples[i0].x;
  const auto& b = traj.back().x;
  const Eigen::Vector2d vel(b[0] - a[0], b[1] - a[1]);
  const Eigen::Vector2d mid(0.5 * (a[0] + b[0]) - center[0], 0.5 * (a[1] + b[1]) - center[1]);
  if (vel.norm() == 0.0 || mid.norm() == 0.0) return dynamics::kPi;
  const double cosang = std::clamp(vel.dot(mid) / (vel.norm() * mid.norm()), -1.0, 1.0);
  return std::acos(cosang);
}

}  // namespace infotraj::traj
