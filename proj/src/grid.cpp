#include "infotraj/grid.hpp"

#include <bit>
#include <cmath>
#include <algorithm>
#include <fstream>
#include <limits>
#include <string>

#include "infotraj/errors.hpp"

namespace infotraj::grid {

static_assert(std::endian::native == std::endian::little,
              "snapshot files are written in host order and assume little-endian");

double Axis::spacing() const {
  return periodic ? (max - min) / double(n) : (max - min) / double(n - 1);
}

GridSpec::GridSpec(std::vector<Axis> axes) : axes_(std::move(axes)) {
  if (axes_.empty() || axes_.size() > std::size_t(kMaxDims)) {
    throw ConfigError("grid must have 1 to " + std::to_string(kMaxDims) + " axes");
  }
  for (std::size_t a = 0; a < axes_.size(); ++a) {
    const auto& ax = axes_[a];
    if (ax.n < 3) {
      throw ConfigError("grid axis " + std::to_string(a) + " needs at least 3 points");
    }
    if (!(ax.max > ax.min) || !std::isfinite(ax.min) || !std::isfinite(ax.max)) {
      throw ConfigError("grid axis " + std::to_string(a) + " needs min < max");
    }
  }
  strides_.assign(axes_.size(), 1);
  size_ = 1;
  for (int a = dims() - 1; a >= 0; --a) {
    strides_[std::size_t(a)] = size_;
    size_ *= std::size_t(axes_[std::size_t(a)].n);
  }
}

GridSpec GridSpec::dubins(double x_min, double x_max, int nx, double y_min,
                          double y_max, int ny, int npsi) {
  return GridSpec({{x_min, x_max, nx, false},
                   {y_min, y_max, ny, false},
                   {-dynamics::kPi, dynamics::kPi, npsi, true}});
}

GridSpec::Index GridSpec::unravel(std::size_t k) const {
  Index idx{};
  for (int a = 0; a < dims(); ++a) {
    idx[std::size_t(a)] = static_cast<int>(k / strides_[std::size_t(a)]);
    k %= strides_[std::size_t(a)];
  }
  return idx;
}

std::size_t GridSpec::ravel(const Index& idx) const {
  std::size_t k = 0;
  for (int a = 0; a < dims(); ++a) k += std::size_t(idx[std::size_t(a)]) * strides_[std::size_t(a)];
  return k;
}

StateVector GridSpec::node(std::size_t k) const {
  const auto idx = unravel(k);
  StateVector x(dims());
  for (int a = 0; a < dims(); ++a) x[a] = axis(a).node(idx[std::size_t(a)]);
  return x;
}

bool GridSpec::contains(const StateVector& x, double slack) const {
  for (int a = 0; a < dims(); ++a) {
    const auto& ax = axis(a);
    if (ax.periodic) continue;
    if (x[a] < ax.min - slack || x[a] > ax.max + slack) return false;
  }
  return true;
}

double GridSpec::cells_from_boundary(const StateVector& x) const {
  double best = std::numeric_limits<double>::infinity();
  for (int a = 0; a < dims(); ++a) {
    const auto& ax = axis(a);
    if (ax.periodic) continue;
    const double h = ax.spacing();
    best = std::min({best, (x[a] - ax.min) / h, (ax.max - x[a]) / h});
  }
  return best;
}

bool GridSpec::operator==(const GridSpec& o) const {
  if (axes_.size() != o.axes_.size()) return false;
  for (std::size_t a = 0; a < axes_.size(); ++a) {
    const auto &p = axes_[a], &q = o.axes_[a];
    if (p.min != q.min || p.max != q.max || p.n != q.n || p.periodic != q.periodic) return false;
  }
  return true;
}

ScalarField::ScalarField(GridSpec g, double fill)
    : grid(std::move(g)), values(grid.size(), fill) {}

bool ScalarField::all_finite() const {
  for (double v : values)
    if (!std::isfinite(v)) return false;
  return true;
}

VectorField::VectorField(GridSpec g, int m, double fill)
    : grid(std::move(g)), width(m), values(grid.size() * std::size_t(m), fill) {}

VectorField::VectorField(GridSpec g, const Eigen::VectorXd& uniform)
    : VectorField(std::move(g), static_cast<int>(uniform.size()), 0.0) {
  for (std::size_t k = 0; k < grid.size(); ++k) at(k) = uniform;
}

bool VectorField::all_finite() const {
  for (double v : values)
    if (!std::isfinite(v)) return false;
  return true;
}

std::vector<AxisGradients> upwind_gradients(const ScalarField& field) {
  const auto& g = field.grid;
  std::vector<AxisGradients> out(std::size_t(g.dims()));
  for (auto& o : out) {
    o.minus.resize(g.size());
    o.plus.resize(g.size());
  }
  for (std::size_t k = 0; k < g.size(); ++k) {
    const auto idx = g.unravel(k);
    for (int a = 0; a < g.dims(); ++a) {
      const auto d = one_sided(g, field.values.data(), 1, 0, k, idx, a);
      out[std::size_t(a)].minus[k] = d.minus;
      out[std::size_t(a)].plus[k] = d.plus;
    }
  }
  return out;
}

std::vector<ScalarField> central_gradient(const ScalarField& field) {
  const auto ud = upwind_gradients(field);
  std::vector<ScalarField> out;
  for (const auto& d : ud) {
    ScalarField f(field.grid, 0.0);
    for (std::size_t k = 0; k < f.values.size(); ++k) f.values[k] = 0.5 * (d.minus[k] + d.plus[k]);
    out.push_back(std::move(f));
  }
  return out;
}

namespace {

struct Bracket {
  int lo;
  int hi;
  double w;  // weight of hi
};

Bracket bracket(const Axis& ax, double x) {
  const double h = ax.spacing();
  if (ax.periodic) {
    double t = (x - ax.min) / h;
    t -= double(ax.n) * std::floor(t / double(ax.n));
    int lo = static_cast<int>(std::floor(t));
    double w = t - lo;
    if (lo >= ax.n) {
      lo = 0;
      w = 0.0;
    }
    return {lo, (lo + 1) % ax.n, w};
  }
  const double t = (x - ax.min) / h;
  const double eps = 1e-9;
  if (t < -eps || t > double(ax.n - 1) + eps || !std::isfinite(t)) {
    throw InputError("interpolation point " + std::to_string(x) + " outside [" +
                     std::to_string(ax.min) + ", " + std::to_string(ax.max) + "]");
  }
  int lo = std::clamp(static_cast<int>(std::floor(t)), 0, ax.n - 2);
  const double w = std::clamp(t - lo, 0.0, 1.0);
  return {lo, lo + 1, w};
}

template <class Accumulate>
void for_each_corner(const GridSpec& g, const StateVector& x, Accumulate&& acc) {
  const int d = g.dims();
  if (x.size() != d) throw DimensionError("interpolation point has wrong dimension");
  std::array<Bracket, kMaxDims> br{};
  for (int a = 0; a < d; ++a) br[std::size_t(a)] = bracket(g.axis(a), x[a]);
  for (int corner = 0; corner < (1 << d); ++corner) {
    double w = 1.0;
    std::size_t k = 0;
    for (int a = 0; a < d; ++a) {
      const auto& b = br[std::size_t(a)];
      const bool up = (corner >> a) & 1;
      w *= up ? b.w : 1.0 - b.w;
      k += std::size_t(up ? b.hi : b.lo) * g.stride(a);
    }
    if (w != 0.0) acc(k, w);
  }
}

}  // namespace

double interpolate(const ScalarField& field, const StateVector& x) {
  double v = 0.0;
  for_each_corner(field.grid, x, [&](std::size_t k, double w) { v += w * field.values[k]; });
  return v;
}

Eigen::VectorXd interpolate(const VectorField& field, const StateVector& x) {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(field.width);
  for_each_corner(field.grid, x, [&](std::size_t k, double w) { v += w * field.at(k); });
  return v;
}

void write_binary(const std::filesystem::path& path, const std::vector<double>& values) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw InputError("cannot open " + path.string() + " for writing");
  os.write(reinterpret_cast<const char*>(values.data()),
           static_cast<std::streamsize>(values.size() * sizeof(double)));
  if (!os) throw InputError("failed writing " + path.string());
}

std::vector<double> read_binary(const std::filesystem::path& path, std::size_t count) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw InputError("cannot open " + path.string());
  std::vector<double> values(count);
  is.read(reinterpret_cast<char*>(values.data()),
          static_cast<std::streamsize>(count * sizeof(double)));
  if (is.gcount() != static_cast<std::streamsize>(count * sizeof(double))) {
    throw InputError(path.string() + " is shorter than the manifest says");
  }
  if (is.peek() != std::char_traits<char>::eof()) {
    throw InputError(path.string() + " is longer than the manifest says");
  }
  return values;
}

}  // namespace infotraj::grid
