#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstddef>
#include <filesystem>
#include <vector>

#include "infotraj/dynamics.hpp"

namespace infotraj::grid {

inline constexpr int kMaxDims = 4;

/// One grid axis. A periodic axis has n cells covering [min, max) with no
/// duplicated seam node; a bounded axis has n nodes including both ends.
struct Axis {
  double min = 0.0;
  double max = 1.0;
  int n = 3;
  bool periodic = false;

  double spacing() const;
  double node(int i) const { return min + spacing() * i; }
};

/// Cartesian grid, row-major with the last axis varying fastest.
class GridSpec {
 public:
  using Index = std::array<int, kMaxDims>;

  GridSpec() = default;
  /// Throws ConfigError on n < 3, max <= min, or too many axes.
  explicit GridSpec(std::vector<Axis> axes);

  /// (X, Y, psi) grid with psi periodic over [-pi, pi).
  static GridSpec dubins(double x_min, double x_max, int nx, double y_min,
                         double y_max, int ny, int npsi);

  int dims() const { return static_cast<int>(axes_.size()); }
  const Axis& axis(int a) const { return axes_[std::size_t(a)]; }
  const std::vector<Axis>& axes() const { return axes_; }
  std::size_t size() const { return size_; }
  std::size_t stride(int a) const { return strides_[std::size_t(a)]; }
  double spacing(int a) const { return axes_[std::size_t(a)].spacing(); }

  Index unravel(std::size_t k) const;
  std::size_t ravel(const Index& idx) const;
  StateVector node(std::size_t k) const;

  /// True if x lies in the closed box of every bounded axis.
  bool contains(const StateVector& x, double slack = 0.0) const;
  /// Distance from x to the nearest bounded-axis face, in cells.
  double cells_from_boundary(const StateVector& x) const;

  bool operator==(const GridSpec& o) const;

 private:
  std::vector<Axis> axes_;
  std::vector<std::size_t> strides_;
  std::size_t size_ = 0;
};

/// phi on the grid, one value per node.
struct ScalarField {
  GridSpec grid;
  std::vector<double> values;

  ScalarField() = default;
  ScalarField(GridSpec g, double fill);
  bool all_finite() const;
};

/// Phi on the grid, m values per node stored contiguously.
struct VectorField {
  GridSpec grid;
  int width = 1;
  std::vector<double> values;

  VectorField() = default;
  VectorField(GridSpec g, int m, double fill);
  VectorField(GridSpec g, const Eigen::VectorXd& uniform);

  Eigen::Map<const Eigen::VectorXd> at(std::size_t k) const {
    return {values.data() + k * std::size_t(width), width};
  }
  Eigen::Map<Eigen::VectorXd> at(std::size_t k) {
    return {values.data() + k * std::size_t(width), width};
  }
  bool all_finite() const;
};

struct OneSided {
  double minus = 0.0;
  double plus = 0.0;
};

/// First-order one-sided differences of component `comp` of a field with
/// `width` values per node, at node k (unravelled as idx) along axis a.
/// Periodic axes wrap; bounded axes use a linearly extrapolated ghost node,
/// which makes the outward difference equal the inward one.
inline OneSided one_sided(const GridSpec& g, const double* data, int width,
                          int comp, std::size_t k, const GridSpec::Index& idx,
                          int a) {
  const Axis& ax = g.axis(a);
  const std::size_t st = g.stride(a) * std::size_t(width);
  const std::size_t here = k * std::size_t(width) + std::size_t(comp);
  const double h = ax.spacing();
  const int i = idx[std::size_t(a)];
  const double c = data[here];
  double left, right;
  if (ax.periodic) {
    const std::size_t span = std::size_t(ax.n) * st;
    left = (i == 0) ? data[here + span - st] : data[here - st];
    right = (i == ax.n - 1) ? data[here + st - span] : data[here + st];
  } else if (i == 0) {
    right = data[here + st];
    left = 2.0 * c - right;
  } else if (i == ax.n - 1) {
    left = data[here - st];
    right = 2.0 * c - left;
  } else {
    left = data[here - st];
    right = data[here + st];
  }
  return {(c - left) / h, (right - c) / h};
}

/// D- and D+ of a scalar field along one axis, one value per node.
struct AxisGradients {
  std::vector<double> minus;
  std::vector<double> plus;
};

std::vector<AxisGradients> upwind_gradients(const ScalarField& field);

/// (D+ + D-)/2 along each axis.
std::vector<ScalarField> central_gradient(const ScalarField& field);

/// Multilinear interpolation; periodic axes wrap. Throws InputError when a
/// bounded coordinate falls outside the grid.
double interpolate(const ScalarField& field, const StateVector& x);
Eigen::VectorXd interpolate(const VectorField& field, const StateVector& x);

/// Raw little-endian float64 array in the field's storage order.
void write_binary(const std::filesystem::path& path, const std::vector<double>& values);
std::vector<double> read_binary(const std::filesystem::path& path, std::size_t count);

}  // namespace infotraj::grid
