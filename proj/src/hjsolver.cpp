#include "infotraj/hjsolver.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "infotraj/errors.hpp"
#include "infotraj/parallel.hpp"

namespace infotraj::hj {

namespace {

constexpr double kTie = 1e-12;
constexpr int kMaxInfoDim = 4;

double sign_policy(double switching, double bound, double tie) {
  if (std::abs(switching) <= tie) return 0.0;
  return switching > 0.0 ? -bound : bound;
}

}  // namespace

void SolverConfig::check() const {
  if (!(horizon > 0.0) || !std::isfinite(horizon)) {
    throw ConfigError("solver.horizon must be > 0");
  }
  if (!(cfl > 0.0 && cfl <= 1.0)) {
    throw ConfigError("solver.cfl must lie in (0, 1], got " + std::to_string(cfl));
  }
  if (snapshot_stride < 0) throw ConfigError("solver.snapshot_stride must be >= 0");
  if (workers < 0) throw ConfigError("solver.workers must be >= 0");
}

double hamiltonian(const CascadeSystem& sys, const StateVector& x, double u,
                   const Adjoint& sigma, const InfoMatrix& Q) {
  const StateVector f = sys.drift(x);
  const StateVector g = sys.control_gain(x);
  double h = f.dot(sigma.p) + u * g.dot(sigma.p);
  if (sigma.lambda.size() > 0) h += matrixcore::vec(Q).dot(sigma.lambda);
  return h;
}

double optimal_hamiltonian(const CascadeSystem& sys, const StateVector& x,
                           const Adjoint& sigma, const InfoMatrix& Q) {
  const StateVector f = sys.drift(x);
  const StateVector g = sys.control_gain(x);
  double h = f.dot(sigma.p) - sys.control_bound() * std::abs(g.dot(sigma.p));
  if (sigma.lambda.size() > 0) h += matrixcore::vec(Q).dot(sigma.lambda);
  return h;
}

double policy(const CascadeSystem& sys, const StateVector& x,
              const Eigen::VectorXd& p, double tie) {
  return sign_policy(sys.control_gain(x).dot(p), sys.control_bound(), tie);
}

Eigen::VectorXd dissipation_coeffs(const CascadeSystem& sys, DissipationMode mode,
                                   const StateVector& x) {
  return mode == DissipationMode::Global ? sys.global_speed_bound() : sys.speed_bound(x);
}

double lf_hamiltonian(const CascadeSystem& sys, const StateVector& x,
                      const Eigen::VectorXd& p_plus, const Eigen::VectorXd& p_minus,
                      const InfoVector& lambda, const InfoMatrix& Q,
                      const Eigen::VectorXd& alpha, DissipationForm form) {
  const Adjoint mid{0.5 * (p_plus + p_minus), lambda};
  const Eigen::VectorXd spread =
      form == DissipationForm::Difference ? Eigen::VectorXd(p_plus - p_minus)
                                          : Eigen::VectorXd(p_plus + p_minus);
  return optimal_hamiltonian(sys, x, mid, Q) + 0.5 * alpha.dot(spread);
}

double cfl_dt(const grid::GridSpec& grid, const Eigen::VectorXd& alpha, double c) {
  if (alpha.size() != grid.dims()) {
    throw DimensionError("dissipation coefficients do not match grid dimension");
  }
  double rate = 0.0;
  for (int a = 0; a < grid.dims(); ++a) {
    if (alpha[a] < 0.0) throw ConfigError("dissipation coefficients must be >= 0");
    rate += alpha[a] / grid.spacing(a);
  }
  if (!(rate > 0.0)) throw ConfigError("all dissipation coefficients are zero; no CFL step");
  return c / rate;
}

InfoVector rx_term(const grid::VectorField& Phi, const CascadeSystem& sys,
                   double u, std::size_t k) {
  const auto& g = Phi.grid;
  const auto idx = g.unravel(k);
  const StateVector x = g.node(k);
  const StateVector w = sys.drift(x) + u * sys.control_gain(x);
  InfoVector r = InfoVector::Zero(Phi.width);
  for (int a = 0; a < g.dims(); ++a) {
    if (w[a] == 0.0) continue;
    for (int j = 0; j < Phi.width; ++j) {
      const auto d = grid::one_sided(g, Phi.values.data(), Phi.width, j, k, idx, a);
      r[j] += w[a] * (w[a] > 0.0 ? d.plus : d.minus);
    }
  }
  return r;
}

grid::VectorField precompute_info_field(const CascadeSystem& sys,
                                        const grid::GridSpec& grid, int workers) {
  const int p = sys.info_dim();
  grid::VectorField out(grid, p * p, 0.0);
  parallel_for(grid.size(), resolve_workers(workers), [&](std::size_t b, std::size_t e) {
    for (std::size_t k = b; k < e; ++k) out.at(k) = sys.info_rate(grid.node(k));
  });
  return out;
}

namespace {

/// Node data frozen for the whole march.
struct NodeTables {
  int n = 0;
  std::vector<double> drift;  // N x n
  std::vector<double> gain;   // N x n
  std::vector<double> alpha;  // N x n
};

NodeTables tabulate(const CascadeSystem& sys, const grid::GridSpec& grid,
                    DissipationMode mode, int workers) {
  NodeTables t;
  t.n = grid.dims();
  const std::size_t N = grid.size();
  t.drift.resize(N * std::size_t(t.n));
  t.gain.resize(N * std::size_t(t.n));
  t.alpha.resize(N * std::size_t(t.n));
  parallel_for(N, workers, [&](std::size_t b, std::size_t e) {
    for (std::size_t k = b; k < e; ++k) {
      const StateVector x = grid.node(k);
      const StateVector f = sys.drift(x);
      const StateVector g = sys.control_gain(x);
      const StateVector a = dissipation_coeffs(sys, mode, x);
      for (int i = 0; i < t.n; ++i) {
        t.drift[k * std::size_t(t.n) + std::size_t(i)] = f[i];
        t.gain[k * std::size_t(t.n) + std::size_t(i)] = g[i];
        t.alpha[k * std::size_t(t.n) + std::size_t(i)] = a[i];
      }
    }
  });
  return t;
}

/// Right-hand side of the hybrid ODE family.
class HybridRates {
 public:
  HybridRates(const grid::GridSpec& grid, const NodeTables& tables,
              const std::vector<double>& info, int p, double bound,
              DissipationForm form, const matrixcore::TerminalMetric* other_metric)
      : grid_(grid), t_(tables), info_(info), p_(p), m_(p * p), bound_(bound),
        form_(form), other_metric_(other_metric) {}

  void operator()(const std::vector<double>& phi, const std::vector<double>& Phi,
                  std::vector<double>& dphi, std::vector<double>& dPhi,
                  std::size_t begin, std::size_t end) const {
    const int n = t_.n;
    const std::size_t um = std::size_t(m_);
    for (std::size_t k = begin; k < end; ++k) {
      const auto idx = grid_.unravel(k);
      const double* f = &t_.drift[k * std::size_t(n)];
      const double* g = &t_.gain[k * std::size_t(n)];
      const double* al = &t_.alpha[k * std::size_t(n)];
      const double* q = &info_[k * um];
      const double* lam = &Phi[k * um];

      double drift_term = 0.0, switching = 0.0, diss = 0.0;
      for (int a = 0; a < n; ++a) {
        const auto d = grid::one_sided(grid_, phi.data(), 1, 0, k, idx, a);
        const double mid = 0.5 * (d.plus + d.minus);
        drift_term += f[a] * mid;
        switching += g[a] * mid;
        diss += al[a] * (form_ == DissipationForm::Difference ? d.plus - d.minus
                                                              : d.plus + d.minus);
      }
      double info_term = 0.0;
      for (std::size_t j = 0; j < um; ++j) info_term += q[j] * lam[j];
      dphi[k] = drift_term - bound_ * std::abs(switching) + info_term + 0.5 * diss;

      const double u = sign_policy(switching, bound_, kTie);
      double* dl = &dPhi[k * um];
      if (other_metric_) {
        const InfoVector c = other_metric_->curvature(
            matrixcore::unvec(Eigen::Map<const InfoVector>(q, m_)), Eigen::Map<const InfoVector>(lam, m_));
        for (int j = 0; j < m_; ++j) dl[j] = c[j];
      } else {
        log_det_curvature(q, lam, dl);
      }

      // Backward transport along the closed-loop velocity.
      for (int a = 0; a < n; ++a) {
        const double w = f[a] + g[a] * u;
        if (w == 0.0) continue;
        for (int j = 0; j < m_; ++j) {
          const auto d = grid::one_sided(grid_, Phi.data(), m_, j, k, idx, a);
          dl[j] += w * (w > 0.0 ? d.plus : d.minus);
        }
      }
    }
  }

 private:
  // Upsilon = sym(L Q L), L = unvec(Phi_k), column-major.
  void log_det_curvature(const double* q, const double* lam, double* dl) const {
    std::array<double, kMaxInfoDim * kMaxInfoDim> lq{}, out{};
    for (int r = 0; r < p_; ++r)
      for (int c = 0; c < p_; ++c) {
        double s = 0.0;
        for (int l = 0; l < p_; ++l) s += lam[l * p_ + r] * q[c * p_ + l];
        lq[std::size_t(c * p_ + r)] = s;
      }
    for (int r = 0; r < p_; ++r)
      for (int c = 0; c < p_; ++c) {
        double s = 0.0;
        for (int l = 0; l < p_; ++l) s += lq[std::size_t(l * p_ + r)] * lam[c * p_ + l];
        out[std::size_t(c * p_ + r)] = s;
      }
    for (int r = 0; r < p_; ++r)
      for (int c = 0; c < p_; ++c)
        dl[c * p_ + r] = 0.5 * (out[std::size_t(c * p_ + r)] + out[std::size_t(r * p_ + c)]);
  }

  const grid::GridSpec& grid_;
  const NodeTables& t_;
  const std::vector<double>& info_;
  int p_;
  int m_;
  double bound_;
  DissipationForm form_;
  const matrixcore::TerminalMetric* other_metric_;  // null: log-det fast path
};

bool all_finite(const std::vector<double>& v) {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

/// Steps from 0 to the horizon; the final step is shortened to land on it.
template <class Advance, class Record>
long march(double horizon, double dt, int stride, Advance&& advance, Record&& record) {
  double s = 0.0;
  long step = 0;
  record(0.0);
  while (s < horizon) {
    double h = std::min(dt, horizon - s);
    if (horizon - (s + h) < 1e-12 * horizon) h = horizon - s;
    advance(h, step + 1);
    ++step;
    s = (horizon - (s + h) < 1e-12 * horizon) ? horizon : s + h;
    if (s == horizon || (stride > 0 && step % stride == 0)) record(s);
  }
  return step;
}

}  // namespace

HybridSolution hybrid_solve(const CascadeSystem& sys,
                            const matrixcore::TerminalMetric& metric,
                            const grid::GridSpec& grid,
                            const grid::VectorField& info_field,
                            const InfoVector& z0, const SolverConfig& cfg) {
  cfg.check();
  const int p = sys.info_dim();
  const int m = p * p;
  if (p > kMaxInfoDim) throw DimensionError("information dimension above 4 is not supported");
  if (grid.dims() != sys.state_dim()) {
    throw DimensionError("grid dimension does not match the vehicle state dimension");
  }
  if (z0.size() != m) throw DimensionError("z0 length does not match p^2");
  if (!(info_field.grid == grid) || info_field.width != m) {
    throw DimensionError("information field does not match the grid");
  }
  (void)matrixcore::logdet_spd(matrixcore::unvec(z0));

  const int workers = resolve_workers(cfg.workers);
  const NodeTables tables = tabulate(sys, grid, cfg.dissipation, workers);
  const HybridRates rates(grid, tables, info_field.values, p, sys.control_bound(),
                          cfg.dissipation_form,
                          dynamic_cast<const matrixcore::LogDetMetric*>(&metric) ? nullptr : &metric);
  // Without transport there is no CFL limit; a single step covers the horizon.
  const Eigen::VectorXd speed = sys.global_speed_bound();
  const double dt = speed.isZero(0.0) ? cfg.horizon : cfl_dt(grid, speed, cfg.cfl);

  const std::size_t N = grid.size();
  std::vector<double> phi(N, metric.value(z0));
  std::vector<double> Phi(N * std::size_t(m));
  {
    const InfoVector lam0 = metric.gradient(z0);
    for (std::size_t k = 0; k < N; ++k)
      for (int j = 0; j < m; ++j) Phi[k * std::size_t(m) + std::size_t(j)] = lam0[j];
  }

  HybridSolution sol;
  sol.grid = grid;
  sol.z0 = z0;
  sol.config = cfg;

  std::vector<double> dphi(N), dPhi(N * std::size_t(m));
  std::vector<double> phi1, Phi1;
  const auto eval = [&](const std::vector<double>& a, const std::vector<double>& b) {
    parallel_for(N, workers, [&](std::size_t lo, std::size_t hi) {
      rates(a, b, dphi, dPhi, lo, hi);
    });
  };
  const auto axpy = [](std::vector<double>& y, const std::vector<double>& x,
                       const std::vector<double>& d, double h) {
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = x[i] + h * d[i];
  };

  const auto advance = [&](double h, long step) {
    eval(phi, Phi);
    if (cfg.integrator == Integrator::Euler) {
      axpy(phi, phi, dphi, h);
      axpy(Phi, Phi, dPhi, h);
    } else {
      phi1.resize(N);
      Phi1.resize(Phi.size());
      axpy(phi1, phi, dphi, h);
      axpy(Phi1, Phi, dPhi, h);
      eval(phi1, Phi1);
      for (std::size_t i = 0; i < N; ++i) phi[i] = 0.5 * phi[i] + 0.5 * (phi1[i] + h * dphi[i]);
      for (std::size_t i = 0; i < Phi.size(); ++i)
        Phi[i] = 0.5 * Phi[i] + 0.5 * (Phi1[i] + h * dPhi[i]);
    }
    if (!all_finite(phi) || !all_finite(Phi)) {
      throw InstabilityError("non-finite value after time step " + std::to_string(step), step);
    }
  };
  const auto record = [&](double s) {
    Snapshot snap;
    snap.time = s;
    snap.phi = grid::ScalarField(grid, 0.0);
    snap.phi.values = phi;
    snap.Phi = grid::VectorField(grid, m, 0.0);
    snap.Phi.values = Phi;
    sol.snapshots.push_back(std::move(snap));
  };

  sol.steps = march(cfg.horizon, dt, cfg.snapshot_stride, advance, record);
  return sol;
}

grid::ScalarField classic_solve(const CascadeSystem& sys,
                                const matrixcore::TerminalMetric& metric,
                                const grid::GridSpec& joint_grid,
                                const SolverConfig& cfg) {
  cfg.check();
  const int n = sys.state_dim();
  const int m = sys.info_dim() * sys.info_dim();
  const int d = joint_grid.dims();
  if (d > 3) throw ConfigError("classic solver refuses more than 3 joint dimensions");
  if (d != n + m) throw DimensionError("joint grid must have state_dim + p^2 axes");

  const std::size_t N = joint_grid.size();
  const int workers = resolve_workers(cfg.workers);
  std::vector<double> f(N * std::size_t(n)), g(N * std::size_t(n)),
      ell(N * std::size_t(m)), alpha_x(N * std::size_t(n));
  std::vector<double> phi(N);
  Eigen::VectorXd alpha = Eigen::VectorXd::Zero(d);
  alpha.head(n) = sys.global_speed_bound();
  for (std::size_t k = 0; k < N; ++k) {
    const StateVector node = joint_grid.node(k);
    const StateVector x = node.head(n);
    const StateVector fx = sys.drift(x), gx = sys.control_gain(x);
    const StateVector ax = dissipation_coeffs(sys, cfg.dissipation, x);
    const InfoVector lx = sys.info_rate(x);
    for (int i = 0; i < n; ++i) {
      f[k * std::size_t(n) + std::size_t(i)] = fx[i];
      g[k * std::size_t(n) + std::size_t(i)] = gx[i];
      alpha_x[k * std::size_t(n) + std::size_t(i)] = ax[i];
    }
    for (int j = 0; j < m; ++j) {
      ell[k * std::size_t(m) + std::size_t(j)] = lx[j];
      alpha[n + j] = std::max(alpha[n + j], std::abs(lx[j]));
    }
    phi[k] = metric.value(node.tail(m));
  }
  const double dt = cfl_dt(joint_grid, alpha, cfg.cfl);
  const double bound = sys.control_bound();

  std::vector<double> dphi(N), phi1;
  const auto eval = [&](const std::vector<double>& v) {
    parallel_for(N, workers, [&](std::size_t lo, std::size_t hi) {
      for (std::size_t k = lo; k < hi; ++k) {
        const auto idx = joint_grid.unravel(k);
        double h = 0.0, sw = 0.0, diss = 0.0;
        for (int a = 0; a < d; ++a) {
          const auto ds = grid::one_sided(joint_grid, v.data(), 1, 0, k, idx, a);
          const double mid = 0.5 * (ds.plus + ds.minus);
          const double spread = cfg.dissipation_form == DissipationForm::Difference
                                    ? ds.plus - ds.minus
                                    : ds.plus + ds.minus;
          double al;
          if (a < n) {
            h += f[k * std::size_t(n) + std::size_t(a)] * mid;
            sw += g[k * std::size_t(n) + std::size_t(a)] * mid;
            al = cfg.dissipation == DissipationMode::Global
                     ? alpha[a]
                     : alpha_x[k * std::size_t(n) + std::size_t(a)];
          } else {
            const double l = ell[k * std::size_t(m) + std::size_t(a - n)];
            h += l * mid;
            al = cfg.dissipation == DissipationMode::Global ? alpha[a] : std::abs(l);
          }
          diss += al * spread;
        }
        dphi[k] = h - bound * std::abs(sw) + 0.5 * diss;
      }
    });
  };

  const auto advance = [&](double h, long step) {
    eval(phi);
    if (cfg.integrator == Integrator::Euler) {
      for (std::size_t k = 0; k < N; ++k) phi[k] += h * dphi[k];
    } else {
      phi1.resize(N);
      for (std::size_t k = 0; k < N; ++k) phi1[k] = phi[k] + h * dphi[k];
      eval(phi1);
      for (std::size_t k = 0; k < N; ++k) phi[k] = 0.5 * phi[k] + 0.5 * (phi1[k] + h * dphi[k]);
    }
    if (!all_finite(phi)) {
      throw InstabilityError("non-finite value after time step " + std::to_string(step), step);
    }
  };
  march(cfg.horizon, dt, 0, advance, [](double) {});

  grid::ScalarField out(joint_grid, 0.0);
  out.values = std::move(phi);
  return out;
}

}  // namespace infotraj::hj
