#pragma once

#include <Eigen/Dense>
#include <memory>

namespace infotraj {

/// p x p information matrix Z (symmetric; SPD when it is an information state).
using InfoMatrix = Eigen::MatrixXd;
/// Column-major stacking z = vec(Z), length m = p^2.
using InfoVector = Eigen::VectorXd;

namespace matrixcore {

InfoVector vec(const InfoMatrix& Z);

/// Inverse of vec. Throws DimensionError if the length is not a perfect square.
InfoMatrix unvec(const InfoVector& z);

/// Side length p of the matrix represented by a length-m vector.
int side_length(Eigen::Index m);

/// (A + A^T) / 2.
InfoMatrix symmetrize(const InfoMatrix& A);

/// log det of the symmetric part of Z, computed from an unpivoted Cholesky
/// factor. Throws NotPositiveDefiniteError when the factorization fails.
double logdet_spd(const InfoMatrix& Z);

/// Inverse of the symmetric part of an SPD matrix (symmetric result).
InfoMatrix spd_inverse(const InfoMatrix& Z);

/// Smallest eigenvalue of the symmetric part.
double min_eigenvalue(const InfoMatrix& Z);

/// Terminal cost on the information state.
///
/// Implementations provide the value G(z), the gradient G_z(z), and the
/// curvature contraction Upsilon(Q, lambda) = d/dz <G_z(xi), vec(Q)> expressed
/// through lambda = G_z(xi). The hybrid solver only ever touches the metric
/// through these three maps.
class TerminalMetric {
 public:
  virtual ~TerminalMetric() = default;
  virtual double value(const InfoVector& z) const = 0;
  virtual InfoVector gradient(const InfoVector& z) const = 0;
  virtual InfoVector curvature(const InfoMatrix& Q,
                               const InfoVector& lambda) const = 0;
};

/// G(z) = -log det(unvec(z)): the D-optimal criterion.
class LogDetMetric final : public TerminalMetric {
 public:
  double value(const InfoVector& z) const override;
  /// -vec(Z^{-1})
  InfoVector gradient(const InfoVector& z) const override;
  /// vec(L Q L) with L = unvec(lambda)
  InfoVector curvature(const InfoMatrix& Q,
                       const InfoVector& lambda) const override;
};

std::shared_ptr<const TerminalMetric> make_logdet_metric();

double metric_value(const TerminalMetric& G, const InfoVector& z);
InfoVector metric_gradient(const TerminalMetric& G, const InfoVector& z);

/// G(z) - G(z0). For logdet with z0 = vec(Q0) this is
/// -log det Z + log det Q0, i.e. zero at the prior.
double normalized_gain(const TerminalMetric& G, const InfoVector& z,
                       const InfoVector& z0);

/// vec(unvec(lambda) * Q * unvec(lambda)), symmetrized.
InfoVector upsilon(const InfoMatrix& Q, const InfoVector& lambda);

}  // namespace matrixcore
}  // namespace infotraj
