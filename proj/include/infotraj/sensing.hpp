#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "infotraj/dynamics.hpp"
#include "infotraj/matrixcore.hpp"

namespace infotraj::sensing {

using dynamics::State;

/// theta ~ N(mean, cov); theta is the planar target position in meters.
struct GaussianPrior {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;

  int dim() const { return static_cast<int>(mean.size()); }
  /// Throws DimensionError / NotPositiveDefiniteError.
  void check() const;

  static GaussianPrior isotropic(int dim, double std_dev);
};

/// Sensor with Gaussian measurements y ~ N(mean(x, theta), noise_cov) sampled
/// at a constant rate. The noise covariance does not depend on theta.
class Sensor {
 public:
  virtual ~Sensor() = default;
  virtual int measurement_dim() const = 0;
  virtual int param_dim() const = 0;
  virtual Eigen::VectorXd mean(const State& x, double speed,
                               const Eigen::VectorXd& theta) const = 0;
  /// d mean / d theta, measurement_dim x param_dim.
  virtual Eigen::MatrixXd jacobian(const State& x, double speed,
                                   const Eigen::VectorXd& theta) const = 0;
  virtual Eigen::MatrixXd noise_cov() const = 0;
  /// Samples per second.
  virtual double rate() const = 0;
};

/// Passive receiver measuring the Doppler shift of an emitter on the ground.
///
/// The receiver flies at altitude h; the emitter sits at (theta_1, theta_2, 0).
/// The shift is -kappa times the range rate, so a receding emitter gives a
/// negative shift. kappa is the carrier frequency over the speed of light.
class DopplerSensor final : public Sensor {
 public:
  struct Params {
    double altitude = 1000.0;  // m
    double kappa = 3.33;       // Hz per m/s (about a 1 GHz carrier)
    double sigma = 1.0;        // Hz
    double rate = 1.0;         // Hz
  };

  explicit DopplerSensor(Params params);

  const Params& params() const { return params_; }

  int measurement_dim() const override { return 1; }
  int param_dim() const override { return 2; }
  Eigen::VectorXd mean(const State& x, double speed,
                       const Eigen::VectorXd& theta) const override;
  Eigen::MatrixXd jacobian(const State& x, double speed,
                           const Eigen::VectorXd& theta) const override;
  Eigen::MatrixXd noise_cov() const override;
  double rate() const override { return params_.rate; }

 private:
  Params params_;
};

/// Doppler shift in Hz. Throws GeometryError when receiver and emitter coincide.
double doppler_mean(const DopplerSensor& sen, const State& x, double speed,
                    const Eigen::Vector2d& theta);
Eigen::RowVector2d doppler_jacobian(const DopplerSensor& sen, const State& x,
                                    double speed, const Eigen::Vector2d& theta);

/// Q(x; theta) = J^T Sigma^{-1} J for one measurement.
InfoMatrix conditional_fim(const Sensor& sen, const State& x, double speed,
                           const Eigen::VectorXd& theta);

struct ExpectationOptions {
  /// Finite-difference step for the theta-Hessians of Q_ij (m).
  double hessian_step = 1e-2;
  /// Negative eigenvalues down to -tol * max(1, |lambda_max|) are clipped.
  double psd_tolerance = 1e-8;
};

/// E_theta[Q(x; theta)] by a second-order Taylor expansion about the prior mean:
///   Q_ij(x; mu) + 1/2 tr(Sigma H_ij(x; mu)).
/// The result is symmetrized and its small negative eigenvalues clipped. If the
/// correction breaks positive semidefiniteness beyond the tolerance the
/// uncorrected Q(x; mu) is returned and *fell_back is set.
InfoMatrix expected_fim(const Sensor& sen, const State& x, double speed,
                        const GaussianPrior& prior,
                        const ExpectationOptions& opts = {},
                        bool* fell_back = nullptr);

/// Q0 = Sigma_theta^{-1}.
InfoMatrix prior_fim(const GaussianPrior& prior);

using SensorList = std::vector<std::shared_ptr<const Sensor>>;

/// sum_i F^i E_theta[Q^i(x; theta)].
InfoMatrix suite_fim(std::span<const std::shared_ptr<const Sensor>> sensors,
                     const State& x, double speed, const GaussianPrior& prior,
                     const ExpectationOptions& opts = {});

/// Information source for a vehicle carrying a suite of sensors.
class SensorSuite final : public dynamics::InformationSource {
 public:
  SensorSuite(SensorList sensors, GaussianPrior prior,
              ExpectationOptions opts = {});

  int param_dim() const override { return prior_.dim(); }
  InfoMatrix rate(const State& x, double speed) const override;

  const SensorList& sensors() const { return sensors_; }
  const GaussianPrior& prior() const { return prior_; }

 private:
  SensorList sensors_;
  GaussianPrior prior_;
  ExpectationOptions opts_;
};

// Monte-Carlo estimators, seeded and deterministic.

/// E_y[s s^T] with s = d log rho(y | theta) / d theta.
InfoMatrix monte_carlo_score_fim(const Sensor& sen, const State& x, double speed,
                                 const Eigen::VectorXd& theta, long samples,
                                 std::uint64_t seed);
/// E_theta[Q(x; theta)] by sampling the prior.
InfoMatrix monte_carlo_expected_fim(const Sensor& sen, const State& x,
                                    double speed, const GaussianPrior& prior,
                                    long samples, std::uint64_t seed);
/// E_theta[s s^T] for the prior score s = d log rho(theta) / d theta.
InfoMatrix monte_carlo_prior_fim(const GaussianPrior& prior, long samples,
                                 std::uint64_t seed);

}  // namespace infotraj::sensing
