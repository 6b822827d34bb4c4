#include <doctest.h>

#include <cmath>

#include "infotraj/errors.hpp"
#include "infotraj/matrixcore.hpp"
#include "support.hpp"

using namespace infotraj;
using namespace infotraj::matrixcore;

namespace {

// Laplace expansion along the first row.
double cofactor_det(const Eigen::MatrixXd& A) {
  const auto n = A.rows();
  if (n == 1) return A(0, 0);
  double det = 0.0;
  for (Eigen::Index c = 0; c < n; ++c) {
    Eigen::MatrixXd minor(n - 1, n - 1);
    for (Eigen::Index r = 1; r < n; ++r) {
      Eigen::Index k = 0;
      for (Eigen::Index j = 0; j < n; ++j)
        if (j != c) minor(r - 1, k++) = A(r, j);
    }
    det += ((c % 2) ? -1.0 : 1.0) * A(0, c) * cofactor_det(minor);
  }
  return det;
}

InfoVector v(std::initializer_list<double> xs) {
  InfoVector out(Eigen::Index(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) out[i++] = x;
  return out;
}

}  // namespace

TEST_CASE("vec stacks columns") {
  CHECK(vec(Eigen::Matrix2d::Identity()) == v({1, 0, 0, 1}));
  Eigen::Matrix2d Z;
  Z << 1, 2, 2, 3;
  CHECK(vec(Z) == v({1, 2, 2, 3}));
  Eigen::Matrix2d A;
  A << 1, 2, 5, 3;  // asymmetric: column-major order is visible
  CHECK(vec(A) == v({1, 5, 2, 3}));
}

TEST_CASE("unvec inverts vec") {
  CHECK(unvec(v({1, 0, 0, 1})) == Eigen::MatrixXd::Identity(2, 2));
  Eigen::Matrix2d Z;
  Z << 1, 2, 2, 3;
  CHECK(unvec(v({1, 2, 2, 3})) == Eigen::MatrixXd(Z));
  CHECK_THROWS_AS(unvec(v({1, 2, 3, 4, 5})), DimensionError);

  std::mt19937_64 rng(7);
  for (int t = 0; t < 20; ++t) {
    const Eigen::MatrixXd S = test::random_spd(rng, 3);
    CHECK(unvec(vec(S)) == S);
  }
}

TEST_CASE("logdet_spd") {
  CHECK(logdet_spd(Eigen::MatrixXd::Identity(2, 2)) == 0.0);
  CHECK(logdet_spd(Eigen::Vector2d(2, 3).asDiagonal().toDenseMatrix()) ==
        doctest::Approx(std::log(6.0)).epsilon(1e-15));

  std::mt19937_64 rng(11);
  for (int t = 0; t < 25; ++t) {
    const Eigen::MatrixXd S = test::random_spd(rng, 4);
    const double ref = std::log(cofactor_det(S));
    CHECK(std::abs(logdet_spd(S) - ref) <= 1e-10 * std::abs(ref) + 1e-12);
  }

  Eigen::Matrix2d indefinite;
  indefinite << 1, 0, 0, -1;
  CHECK_THROWS_AS(logdet_spd(indefinite), NotPositiveDefiniteError);
}

TEST_CASE("spd_inverse is symmetric and inverts") {
  std::mt19937_64 rng(3);
  const Eigen::MatrixXd S = test::random_spd(rng, 3);
  const Eigen::MatrixXd inv = spd_inverse(S);
  CHECK((inv - inv.transpose()).norm() == 0.0);
  CHECK((inv * S - Eigen::MatrixXd::Identity(3, 3)).norm() < 1e-12);
  CHECK(min_eigenvalue(S) > 0.0);
}

TEST_CASE("logdet metric value and gradient") {
  const LogDetMetric G;
  CHECK(G.value(v({1, 0, 0, 1})) == 0.0);
  CHECK(G.value(v({2, 0, 0, 3})) == doctest::Approx(-std::log(6.0)));
  const InfoVector q0 = v({0.01, 0, 0, 0.01});
  CHECK(normalized_gain(G, q0, q0) == 0.0);

  CHECK(G.gradient(v({1, 0, 0, 1})) == -v({1, 0, 0, 1}));
  CHECK((G.gradient(v({2, 0, 0, 4})) + v({0.5, 0, 0, 0.25})).norm() < 1e-15);

  std::mt19937_64 rng(5);
  for (int t = 0; t < 10; ++t) {
    const InfoVector z = vec(test::random_spd(rng, 3));
    const InfoVector g = metric_gradient(G, z);
    for (Eigen::Index j = 0; j < z.size(); ++j) {
      InfoVector up = z, dn = z;
      up[j] += 1e-6;
      dn[j] -= 1e-6;
      const double fd = (metric_value(G, up) - metric_value(G, dn)) / 2e-6;
      CHECK(std::abs(fd - g[j]) <= 1e-5 * std::max(1.0, std::abs(g[j])));
    }
  }
}

TEST_CASE("upsilon closed form") {
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(2, 2);
  CHECK(upsilon(I, -vec(I)) == vec(I));

  const InfoMatrix Z = Eigen::Vector2d(2, 1).asDiagonal();
  const InfoMatrix Q = Eigen::Vector2d(4, 0).asDiagonal();
  const InfoVector lam = -vec(spd_inverse(Z));
  CHECK((upsilon(Q, lam) - v({1, 0, 0, 0})).norm() < 1e-15);
  CHECK(LogDetMetric().curvature(Q, lam) == upsilon(Q, lam));
}

TEST_CASE("upsilon is the z-derivative of <G_z, vec Q>") {
  const LogDetMetric G;
  std::mt19937_64 rng(17);
  for (int t = 0; t < 20; ++t) {
    const Eigen::MatrixXd Z = test::random_spd(rng, 3);
    const Eigen::MatrixXd Q = test::random_psd(rng, 3, 2);
    const InfoVector z = vec(Z);
    const InfoVector analytic = upsilon(Q, G.gradient(z));
    InfoVector fd(z.size());
    for (Eigen::Index j = 0; j < z.size(); ++j) {
      InfoVector up = z, dn = z;
      up[j] += 1e-6;
      dn[j] -= 1e-6;
      fd[j] = (G.gradient(up).dot(vec(Q)) - G.gradient(dn).dot(vec(Q))) / 2e-6;
    }
    CHECK((fd - analytic).norm() <= 1e-5 * analytic.norm());
  }
}

TEST_CASE("upsilon of a PSD rate is symmetric PSD") {
  std::mt19937_64 rng(23);
  for (int t = 0; t < 50; ++t) {
    const Eigen::MatrixXd Z = test::random_spd(rng, 3);
    const Eigen::MatrixXd Q = test::random_psd(rng, 3, 1 + t % 3);
    const InfoMatrix U = unvec(upsilon(Q, -vec(spd_inverse(Z))));
    CHECK((U - U.transpose()).norm() == 0.0);
    CHECK(min_eigenvalue(U) >= -1e-10 * std::max(1.0, U.norm()));
  }
}
