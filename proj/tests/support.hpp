#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <memory>
#include <random>

#include "infotraj/dynamics.hpp"
#include "infotraj/sensing.hpp"

namespace test {

inline std::filesystem::path source_dir() { return INFOTRAJ_SOURCE_DIR; }
inline std::filesystem::path scenario_path(const char* name) {
  return source_dir() / "scenarios" / name;
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("infotraj_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline Eigen::MatrixXd random_spd(std::mt19937_64& rng, int n, double floor = 0.5) {
  std::normal_distribution<double> nd(0.0, 1.0);
  Eigen::MatrixXd A(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) A(i, j) = nd(rng);
  return A * A.transpose() + floor * Eigen::MatrixXd::Identity(n, n);
}

inline Eigen::MatrixXd random_psd(std::mt19937_64& rng, int n, int rank) {
  std::normal_distribution<double> nd(0.0, 1.0);
  Eigen::MatrixXd B(n, rank);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < rank; ++j) B(i, j) = nd(rng);
  return B * B.transpose();
}

inline std::shared_ptr<infotraj::sensing::SensorSuite> doppler_suite(double prior_std = 10.0) {
  using namespace infotraj::sensing;
  SensorList s{std::make_shared<DopplerSensor>(DopplerSensor::Params{})};
  return std::make_shared<SensorSuite>(s, GaussianPrior::isotropic(2, prior_std));
}

/// The figure scenario vehicle: 5 m/s, 0.05 rad/s, one Doppler receiver.
inline infotraj::dynamics::DubinsCar doppler_car(double speed = 5.0) {
  return infotraj::dynamics::DubinsCar(speed, 0.05, doppler_suite());
}

/// Information source with a fixed rate matrix.
class ConstantSource final : public infotraj::dynamics::InformationSource {
 public:
  explicit ConstantSource(infotraj::InfoMatrix Q) : Q_(std::move(Q)) {}
  int param_dim() const override { return int(Q_.rows()); }
  infotraj::InfoMatrix rate(const infotraj::dynamics::State&, double) const override { return Q_; }

 private:
  infotraj::InfoMatrix Q_;
};

}  // namespace test
