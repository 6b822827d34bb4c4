#include "infotraj/sensing.hpp"

#include <cmath>
#include <iostream>
#include <mutex>
#include <random>
#include <string>

#include "infotraj/errors.hpp"

namespace infotraj::sensing {

using matrixcore::symmetrize;

void GaussianPrior::check() const {
  if (mean.size() == 0) throw DimensionError("prior mean is empty");
  if (cov.rows() != mean.size() || cov.cols() != mean.size()) {
    throw DimensionError("prior covariance must be " +
                         std::to_string(mean.size()) + "x" +
                         std::to_string(mean.size()));
  }
  if ((cov - cov.transpose()).cwiseAbs().maxCoeff() >
      1e-12 * std::max(1.0, cov.cwiseAbs().maxCoeff())) {
    throw NotPositiveDefiniteError("prior covariance is not symmetric");
  }
  (void)matrixcore::logdet_spd(cov);
}

GaussianPrior GaussianPrior::isotropic(int dim, double std_dev) {
  return {Eigen::VectorXd::Zero(dim),
          std_dev * std_dev * Eigen::MatrixXd::Identity(dim, dim)};
}

// --- Doppler ---------------------------------------------------------------

DopplerSensor::DopplerSensor(Params params) : params_(params) {
  if (!(params_.altitude >= 0.0)) throw ConfigError("doppler altitude must be >= 0");
  if (!(params_.kappa > 0.0)) throw ConfigError("doppler kappa must be > 0");
  if (!(params_.sigma > 0.0)) throw ConfigError("doppler sigma must be > 0");
  if (!(params_.rate > 0.0)) throw ConfigError("doppler rate must be > 0");
}

namespace {

struct LineOfSight {
  Eigen::Vector3d r;    // receiver minus emitter
  Eigen::Vector3d vel;  // receiver velocity
  double range;
};

LineOfSight line_of_sight(double altitude, const State& x, double speed,
                          const Eigen::Vector2d& theta) {
  LineOfSight los;
  los.r = Eigen::Vector3d(x.X - theta[0], x.Y - theta[1], altitude);
  los.vel = Eigen::Vector3d(speed * std::cos(x.psi), speed * std::sin(x.psi), 0.0);
  los.range = los.r.norm();
  if (!(los.range > 1e-9)) {
    throw GeometryError("receiver and emitter positions coincide");
  }
  return los;
}

Eigen::Vector2d as_planar(const Eigen::VectorXd& theta) {
  if (theta.size() != 2) throw DimensionError("Doppler target parameter must be 2-D");
  return {theta[0], theta[1]};
}

}  // namespace

double doppler_mean(const DopplerSensor& sen, const State& x, double speed,
                    const Eigen::Vector2d& theta) {
  const auto los = line_of_sight(sen.params().altitude, x, speed, theta);
  return -sen.params().kappa * los.vel.dot(los.r) / los.range;
}

Eigen::RowVector2d doppler_jacobian(const DopplerSensor& sen, const State& x,
                                    double speed, const Eigen::Vector2d& theta) {
  const auto los = line_of_sight(sen.params().altitude, x, speed, theta);
  const double d = los.range;
  const double closing = los.vel.dot(los.r);
  // d r / d theta_k = -e_k
  Eigen::RowVector2d J;
  for (int k = 0; k < 2; ++k) {
    J[k] = sen.params().kappa * (los.vel[k] / d - closing * los.r[k] / (d * d * d));
  }
  return J;
}

Eigen::VectorXd DopplerSensor::mean(const State& x, double speed,
                                    const Eigen::VectorXd& theta) const {
  return Eigen::VectorXd::Constant(1, doppler_mean(*this, x, speed, as_planar(theta)));
}

Eigen::MatrixXd DopplerSensor::jacobian(const State& x, double speed,
                                        const Eigen::VectorXd& theta) const {
  return doppler_jacobian(*this, x, speed, as_planar(theta));
}

Eigen::MatrixXd DopplerSensor::noise_cov() const {
  return Eigen::MatrixXd::Constant(1, 1, params_.sigma * params_.sigma);
}

// --- FIMs ------------------------------------------------------------------

InfoMatrix conditional_fim(const Sensor& sen, const State& x, double speed,
                           const Eigen::VectorXd& theta) {
  const Eigen::MatrixXd J = sen.jacobian(x, speed, theta);
  const Eigen::MatrixXd S = sen.noise_cov();
  Eigen::LLT<Eigen::MatrixXd> llt(S);
  if (llt.info() != Eigen::Success) {
    throw NotPositiveDefiniteError("sensor noise covariance is not SPD");
  }
  const Eigen::MatrixXd W = llt.matrixL().solve(J);  // L^{-1} J
  return symmetrize(W.transpose() * W);
}

InfoMatrix expected_fim(const Sensor& sen, const State& x, double speed,
                        const GaussianPrior& prior, const ExpectationOptions& opts,
                        bool* fell_back) {
  const int d = prior.dim();
  if (d != sen.param_dim()) {
    throw DimensionError("prior dimension does not match sensor parameter dimension");
  }
  if (fell_back) *fell_back = false;
  const Eigen::VectorXd& mu = prior.mean;
  const InfoMatrix center = conditional_fim(sen, x, speed, mu);
  if (prior.cov.cwiseAbs().maxCoeff() == 0.0) return center;

  const double h = opts.hessian_step;
  auto at = [&](int a, double sa, int b, double sb) {
    Eigen::VectorXd th = mu;
    th[a] += sa * h;
    th[b] += sb * h;
    return conditional_fim(sen, x, speed, th);
  };

  // correction = 1/2 sum_ab Sigma_ab d2Q/dtheta_a dtheta_b
  InfoMatrix correction = InfoMatrix::Zero(d, d);
  for (int a = 0; a < d; ++a) {
    Eigen::VectorXd plus = mu, minus = mu;
    plus[a] += h;
    minus[a] -= h;
    const InfoMatrix second = (conditional_fim(sen, x, speed, plus) - 2.0 * center +
                               conditional_fim(sen, x, speed, minus)) /
                              (h * h);
    correction += 0.5 * prior.cov(a, a) * second;
    for (int b = a + 1; b < d; ++b) {
      if (prior.cov(a, b) == 0.0 && prior.cov(b, a) == 0.0) continue;
      const InfoMatrix mixed =
          (at(a, 1, b, 1) - at(a, 1, b, -1) - at(a, -1, b, 1) + at(a, -1, b, -1)) /
          (4.0 * h * h);
      correction += 0.5 * (prior.cov(a, b) + prior.cov(b, a)) * mixed;
    }
  }

  const InfoMatrix Q = symmetrize(center + correction);
  Eigen::SelfAdjointEigenSolver<InfoMatrix> es(Q);
  const Eigen::VectorXd ev = es.eigenvalues();
  if (ev.minCoeff() >= 0.0) return Q;
  const double floor = -opts.psd_tolerance * std::max(1.0, ev.cwiseAbs().maxCoeff());
  if (ev.minCoeff() < floor) {
    if (fell_back) *fell_back = true;
    return center;
  }
  const Eigen::VectorXd clipped = ev.cwiseMax(0.0);
  return symmetrize(es.eigenvectors() * clipped.asDiagonal() *
                    es.eigenvectors().transpose());
}

InfoMatrix prior_fim(const GaussianPrior& prior) {
  prior.check();
  return matrixcore::spd_inverse(prior.cov);
}

InfoMatrix suite_fim(std::span<const std::shared_ptr<const Sensor>> sensors,
                     const State& x, double speed, const GaussianPrior& prior,
                     const ExpectationOptions& opts) {
  const int d = prior.dim();
  InfoMatrix total = InfoMatrix::Zero(d, d);
  for (const auto& s : sensors) {
    if (s->param_dim() != d) {
      throw DimensionError("sensor parameter dimension " +
                           std::to_string(s->param_dim()) +
                           " does not match prior dimension " + std::to_string(d));
    }
    bool fell_back = false;
    total += s->rate() * expected_fim(*s, x, speed, prior, opts, &fell_back);
    if (fell_back) {
      static std::once_flag warned;
      std::call_once(warned, [] {
        std::clog << "warning: Taylor expectation of the FIM lost positive "
                     "semidefiniteness; using the FIM at the prior mean\n";
      });
    }
  }
  return total;
}

SensorSuite::SensorSuite(SensorList sensors, GaussianPrior prior,
                         ExpectationOptions opts)
    : sensors_(std::move(sensors)), prior_(std::move(prior)), opts_(opts) {
  prior_.check();
  for (const auto& s : sensors_) {
    if (!s) throw ConfigError("null sensor in suite");
    if (s->param_dim() != prior_.dim()) {
      throw DimensionError("sensor parameter dimension does not match prior");
    }
  }
}

InfoMatrix SensorSuite::rate(const State& x, double speed) const {
  return suite_fim(sensors_, x, speed, prior_, opts_);
}

// --- Monte Carlo -----------------------------------------------------------

namespace {

Eigen::VectorXd standard_normal(std::mt19937_64& rng, Eigen::Index n) {
  std::normal_distribution<double> nd(0.0, 1.0);
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = nd(rng);
  return v;
}

}  // namespace

InfoMatrix monte_carlo_score_fim(const Sensor& sen, const State& x, double speed,
                                 const Eigen::VectorXd& theta, long samples,
                                 std::uint64_t seed) {
  const Eigen::MatrixXd J = sen.jacobian(x, speed, theta);
  const Eigen::MatrixXd S = sen.noise_cov();
  const Eigen::MatrixXd Sinv = matrixcore::spd_inverse(S);
  const Eigen::MatrixXd L = Eigen::LLT<Eigen::MatrixXd>(S).matrixL();
  std::mt19937_64 rng(seed);
  InfoMatrix acc = InfoMatrix::Zero(J.cols(), J.cols());
  for (long i = 0; i < samples; ++i) {
    // y - mean
    const Eigen::VectorXd resid = L * standard_normal(rng, S.rows());
    const Eigen::VectorXd score = J.transpose() * (Sinv * resid);
    acc += score * score.transpose();
  }
  return symmetrize(acc / double(samples));
}

InfoMatrix monte_carlo_expected_fim(const Sensor& sen, const State& x,
                                    double speed, const GaussianPrior& prior,
                                    long samples, std::uint64_t seed) {
  prior.check();
  const Eigen::MatrixXd L = Eigen::LLT<Eigen::MatrixXd>(prior.cov).matrixL();
  std::mt19937_64 rng(seed);
  InfoMatrix acc = InfoMatrix::Zero(prior.dim(), prior.dim());
  for (long i = 0; i < samples; ++i) {
    const Eigen::VectorXd theta = prior.mean + L * standard_normal(rng, prior.dim());
    acc += conditional_fim(sen, x, speed, theta);
  }
  return symmetrize(acc / double(samples));
}

InfoMatrix monte_carlo_prior_fim(const GaussianPrior& prior, long samples,
                                 std::uint64_t seed) {
  prior.check();
  const Eigen::MatrixXd L = Eigen::LLT<Eigen::MatrixXd>(prior.cov).matrixL();
  const Eigen::MatrixXd Sinv = matrixcore::spd_inverse(prior.cov);
  std::mt19937_64 rng(seed);
  InfoMatrix acc = InfoMatrix::Zero(prior.dim(), prior.dim());
  for (long i = 0; i < samples; ++i) {
    const Eigen::VectorXd dev = L * standard_normal(rng, prior.dim());
    const Eigen::VectorXd score = -Sinv * dev;
    acc += score * score.transpose();
  }
  return symmetrize(acc / double(samples));
}

}  // namespace infotraj::sensing
