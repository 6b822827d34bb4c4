#include "infotraj/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

#include "infotraj/errors.hpp"

namespace infotraj::dynamics {

double wrap_angle(double a) {
  const double two_pi = 2.0 * kPi;
  double w = a - two_pi * std::floor((a + kPi) / two_pi);
  // floor can land exactly on the excluded end through rounding
  if (w >= kPi) w -= two_pi;
  if (w < -kPi) w = -kPi;
  return w;
}

StateVector State::to_vector() const { return StateVector{{X, Y, psi}}; }

State State::from_vector(const StateVector& x) {
  if (x.size() != 3) throw DimensionError("Dubins state must have 3 entries");
  return State{x[0], x[1], x[2]};
}

InfoVector CascadeSystem::info_rate(const StateVector& x) const {
  return matrixcore::vec(info_matrix(x));
}

// --- DubinsCar -------------------------------------------------------------

DubinsCar::DubinsCar(double speed, double omega_max,
                     std::shared_ptr<const InformationSource> info)
    : speed_(speed), omega_max_(omega_max), info_(std::move(info)) {
  if (!(speed > 0.0)) throw ConfigError("vehicle speed must be positive");
  if (!(omega_max > 0.0)) throw ConfigError("omega_max must be positive");
  if (!info_) throw ConfigError("DubinsCar needs an information source");
}

int DubinsCar::info_dim() const { return info_->param_dim(); }

StateVector DubinsCar::drift(const StateVector& x) const {
  return StateVector{{speed_ * std::cos(x[2]), speed_ * std::sin(x[2]), 0.0}};
}

Eigen::MatrixXd DubinsCar::drift_jacobian(const StateVector& x) const {
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(3, 3);
  J(0, 2) = -speed_ * std::sin(x[2]);
  J(1, 2) = speed_ * std::cos(x[2]);
  return J;
}

StateVector DubinsCar::control_gain(const StateVector&) const {
  return StateVector{{0.0, 0.0, 1.0}};
}

InfoMatrix DubinsCar::info_matrix(const StateVector& x) const {
  return info_->rate(State::from_vector(x), speed_);
}

StateVector DubinsCar::speed_bound(const StateVector& x) const {
  return StateVector{{speed_ * std::abs(std::cos(x[2])),
                      speed_ * std::abs(std::sin(x[2])), omega_max_}};
}

StateVector DubinsCar::global_speed_bound() const {
  return StateVector{{speed_, speed_, omega_max_}};
}

void DubinsCar::wrap(StateVector& x) const { x[2] = wrap_angle(x[2]); }

// --- ScalarCascade ---------------------------------------------------------

ScalarCascade::ScalarCascade(double drift, double gain, double bound,
                             std::function<double(double)> info)
    : drift_(drift), gain_(gain), bound_(bound), info_(std::move(info)) {
  if (!(bound > 0.0)) throw ConfigError("control bound must be positive");
}

std::shared_ptr<ScalarCascade> ScalarCascade::toy() {
  return std::make_shared<ScalarCascade>(0.0, 1.0, 1.0,
                                         [](double x) { return x * x; });
}

StateVector ScalarCascade::drift(const StateVector&) const {
  return StateVector::Constant(1, drift_);
}

Eigen::MatrixXd ScalarCascade::drift_jacobian(const StateVector&) const {
  return Eigen::MatrixXd::Zero(1, 1);
}

StateVector ScalarCascade::control_gain(const StateVector&) const {
  return StateVector::Constant(1, gain_);
}

InfoMatrix ScalarCascade::info_matrix(const StateVector& x) const {
  return InfoMatrix::Constant(1, 1, info_(x[0]));
}

StateVector ScalarCascade::speed_bound(const StateVector&) const {
  return global_speed_bound();
}

StateVector ScalarCascade::global_speed_bound() const {
  return StateVector::Constant(1, std::abs(drift_) + std::abs(gain_) * bound_);
}

// --- ControlSignal ---------------------------------------------------------

ControlSignal ControlSignal::constant(double u, double t) {
  return ControlSignal{{0.0, t}, {u}};
}

ControlSignal ControlSignal::segments(std::vector<double> values, double t) {
  if (values.empty()) throw InputError("control needs at least one segment");
  ControlSignal c;
  const auto k = values.size();
  c.breakpoints.resize(k + 1);
  for (std::size_t i = 0; i <= k; ++i) c.breakpoints[i] = t * double(i) / double(k);
  c.breakpoints.back() = t;
  c.values = std::move(values);
  return c;
}

double ControlSignal::at(double s) const {
  if (values.empty()) return 0.0;
  const auto it = std::upper_bound(breakpoints.begin() + 1, breakpoints.end() - 1, s);
  return values[static_cast<std::size_t>(it - (breakpoints.begin() + 1))];
}

void ControlSignal::check(double bound) const {
  if (values.empty() || breakpoints.size() != values.size() + 1) {
    throw InputError("control signal needs K values and K+1 breakpoints");
  }
  if (breakpoints.front() != 0.0) throw InputError("control must start at s = 0");
  for (std::size_t i = 1; i < breakpoints.size(); ++i) {
    if (!(breakpoints[i] > breakpoints[i - 1])) {
      throw InputError("control breakpoints must be strictly increasing");
    }
  }
  for (double v : values) {
    if (!std::isfinite(v) || std::abs(v) > bound * (1.0 + 1e-12)) {
      std::ostringstream msg;
      msg << "control value " << v << " outside [-" << bound << ", " << bound << "]";
      throw InputError(msg.str());
    }
  }
}

// --- integration -----------------------------------------------------------

AugmentedRate augmented_rate(const CascadeSystem& sys, const StateVector& x,
                             double u) {
  return {sys.drift(x) + sys.control_gain(x) * u, sys.info_rate(x)};
}

void rk4_step(const CascadeSystem& sys, StateVector& x, InfoVector& z, double u,
              double dt) {
  const auto k1 = augmented_rate(sys, x, u);
  const auto k2 = augmented_rate(sys, x + 0.5 * dt * k1.dx, u);
  const auto k3 = augmented_rate(sys, x + 0.5 * dt * k2.dx, u);
  const auto k4 = augmented_rate(sys, x + dt * k3.dx, u);
  x += (dt / 6.0) * (k1.dx + 2.0 * k2.dx + 2.0 * k3.dx + k4.dx);
  z += (dt / 6.0) * (k1.dz + 2.0 * k2.dz + 2.0 * k3.dz + k4.dz);
  sys.wrap(x);
}

Trajectory simulate_open_loop(const CascadeSystem& sys, const StateVector& x0,
                              const InfoVector& z0, const ControlSignal& u,
                              double t, double dt) {
  if (!(dt > 0.0)) throw InputError("dt must be positive");
  if (!(t >= 0.0)) throw InputError("horizon must be non-negative");
  if (x0.size() != sys.state_dim()) throw DimensionError("x0 has wrong dimension");
  const int p = sys.info_dim();
  if (z0.size() != p * p) throw DimensionError("z0 has wrong dimension");
  u.check(sys.control_bound());
  if (u.duration() < t * (1.0 - 1e-12)) {
    throw InputError("control signal does not cover the horizon");
  }

  Trajectory traj;
  traj.state_names = sys.state_names();
  StateVector x = x0;
  sys.wrap(x);
  InfoVector z = z0;
  double s = 0.0;
  traj.samples.push_back({0.0, x, u.at(0.0), z, {}, {}});

  std::size_t seg = 0;
  while (s < t) {
    while (seg + 1 < u.values.size() && u.breakpoints[seg + 1] <= s) ++seg;
    const double seg_end =
        (seg + 1 == u.values.size()) ? t : std::min(t, u.breakpoints[seg + 1]);
    const double control = u.values[seg];
    // number of steps in this segment chosen so that none exceeds dt
    const double span = seg_end - s;
    const auto nsteps = std::max<long>(1, static_cast<long>(std::ceil(span / dt - 1e-9)));
    const double h = span / double(nsteps);
    for (long k = 0; k < nsteps; ++k) {
      traj.samples.back().u = control;
      rk4_step(sys, x, z, control, h);
      s = (k + 1 == nsteps) ? seg_end : s + h;
      traj.samples.push_back({s, x, control, z, {}, {}});
    }
  }
  if (traj.samples.size() > 1) {
    traj.samples.back().u = traj.samples[traj.samples.size() - 2].u;
  }
  return traj;
}

CostReport evaluate_cost(const matrixcore::TerminalMetric& metric,
                         const Trajectory& traj) {
  if (traj.samples.empty()) throw InputError("empty trajectory");
  CostReport r;
  r.cost = metric.value(traj.back().z);
  r.normalized_gain = r.cost - metric.value(traj.front().z);
  return r;
}

// --- CSV -------------------------------------------------------------------

namespace {

std::string unit_of(const std::string& name) {
  if (name == "X" || name == "Y") return "m";
  if (name == "psi") return "rad";
  return "-";
}

void put(std::ostream& os, double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  os << buf;
}

}  // namespace

void write_trajectory_csv(std::ostream& os, const Trajectory& traj,
                          const matrixcore::TerminalMetric& metric) {
  if (traj.samples.empty()) throw InputError("empty trajectory");
  const auto& first = traj.front();
  const auto m = first.z.size();
  const auto np = first.p.size();
  const auto nl = first.lambda.size();
  const bool dubins = std::find(traj.state_names.begin(), traj.state_names.end(),
                                "psi") != traj.state_names.end();

  os << "# units: s [s]";
  for (const auto& n : traj.state_names) os << "; " << n << " [" << unit_of(n) << "]";
  os << "; u [" << (dubins ? "rad/s" : "-") << "]; z_j [information]; cost_so_far [-]";
  if (np > 0) os << "; p_j [cost/state]; lambda_j [cost/information]";
  os << "\n";
  if (traj.residuals) {
    const auto& r = *traj.residuals;
    os << "# residuals: terminal_costate=";
    put(os, r.terminal_costate);
    os << " initial_costate=";
    put(os, r.initial_costate);
    os << " lambda_mismatch=";
    put(os, r.lambda_mismatch);
    os << " lambda_mismatch_rel=";
    put(os, r.lambda_mismatch_rel);
    os << " value_gap=";
    put(os, r.value_gap);
    os << "\n";
  }

  os << "s";
  for (const auto& n : traj.state_names) os << ',' << n;
  os << ",u";
  for (Eigen::Index j = 0; j < m; ++j) os << ",z_" << (j + 1);
  os << ",cost_so_far";
  for (Eigen::Index j = 0; j < np; ++j) os << ",p_" << traj.state_names[std::size_t(j)];
  for (Eigen::Index j = 0; j < nl; ++j) os << ",lambda_" << (j + 1);
  os << "\n";

  for (const auto& smp : traj.samples) {
    put(os, smp.s);
    for (Eigen::Index i = 0; i < smp.x.size(); ++i) {
      os << ',';
      put(os, smp.x[i]);
    }
    os << ',';
    put(os, smp.u);
    for (Eigen::Index j = 0; j < smp.z.size(); ++j) {
      os << ',';
      put(os, smp.z[j]);
    }
    os << ',';
    put(os, metric.value(smp.z));
    for (Eigen::Index j = 0; j < smp.p.size(); ++j) {
      os << ',';
      put(os, smp.p[j]);
    }
    for (Eigen::Index j = 0; j < smp.lambda.size(); ++j) {
      os << ',';
      put(os, smp.lambda[j]);
    }
    os << "\n";
  }
}

Trajectory read_trajectory_csv(std::istream& is) {
  std::string line;
  std::vector<std::string> header;
  long lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) header.push_back(cell);
    break;
  }
  if (header.size() < 3 || header[0] != "s") {
    throw InputError("trajectory CSV: missing header row starting with 's'");
  }
  const auto u_col = std::find(header.begin(), header.end(), "u");
  if (u_col == header.end()) throw InputError("trajectory CSV: no 'u' column");

  Trajectory traj;
  traj.state_names.assign(header.begin() + 1, u_col);
  const auto n = traj.state_names.size();
  std::vector<std::size_t> zc, pc, lc;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i].rfind("z_", 0) == 0) zc.push_back(i);
    if (header[i].rfind("p_", 0) == 0) pc.push_back(i);
    if (header[i].rfind("lambda_", 0) == 0) lc.push_back(i);
  }

  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      char* end = nullptr;
      const double v = std::strtod(cell.c_str(), &end);
      if (end == cell.c_str() || *end != '\0') {
        throw InputError("trajectory CSV line " + std::to_string(lineno) +
                         ": malformed number '" + cell + "'");
      }
      row.push_back(v);
    }
    if (row.size() != header.size()) {
      throw InputError("trajectory CSV line " + std::to_string(lineno) +
                       ": expected " + std::to_string(header.size()) +
                       " columns, got " + std::to_string(row.size()));
    }
    TrajectorySample smp;
    smp.s = row[0];
    smp.x.resize(Eigen::Index(n));
    for (std::size_t i = 0; i < n; ++i) smp.x[Eigen::Index(i)] = row[1 + i];
    smp.u = row[1 + n];
    smp.z.resize(Eigen::Index(zc.size()));
    for (std::size_t j = 0; j < zc.size(); ++j) smp.z[Eigen::Index(j)] = row[zc[j]];
    smp.p.resize(Eigen::Index(pc.size()));
    for (std::size_t j = 0; j < pc.size(); ++j) smp.p[Eigen::Index(j)] = row[pc[j]];
    smp.lambda.resize(Eigen::Index(lc.size()));
    for (std::size_t j = 0; j < lc.size(); ++j) smp.lambda[Eigen::Index(j)] = row[lc[j]];
    traj.samples.push_back(std::move(smp));
  }
  if (traj.samples.empty()) throw InputError("trajectory CSV has no samples");
  return traj;
}

}  // namespace infotraj::dynamics
