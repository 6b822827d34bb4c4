#include "infotraj/matrixcore.hpp"

#include <cmath>
#include <string>

#include "infotraj/errors.hpp"

namespace infotraj::matrixcore {

InfoVector vec(const InfoMatrix& Z) {
  return Eigen::Map<const InfoVector>(Z.data(), Z.size());
}

int side_length(Eigen::Index m) {
  if (m <= 0) throw DimensionError("empty information vector");
  const auto p = static_cast<Eigen::Index>(std::llround(std::sqrt(double(m))));
  if (p * p != m) {
    throw DimensionError("vector of length " + std::to_string(m) +
                         " does not represent a square matrix");
  }
  return static_cast<int>(p);
}

InfoMatrix unvec(const InfoVector& z) {
  const int p = side_length(z.size());
  return Eigen::Map<const InfoMatrix>(z.data(), p, p);
}

InfoMatrix symmetrize(const InfoMatrix& A) {
  if (A.rows() != A.cols()) throw DimensionError("matrix is not square");
  return 0.5 * (A + A.transpose());
}

namespace {

Eigen::LLT<InfoMatrix> cholesky(const InfoMatrix& Z) {
  Eigen::LLT<InfoMatrix> llt(symmetrize(Z));
  if (llt.info() != Eigen::Success) {
    throw NotPositiveDefiniteError("matrix is not positive definite");
  }
  // LLT reports success on some indefinite inputs whose pivots underflow;
  // require a strictly positive, finite diagonal.
  const auto d = llt.matrixLLT().diagonal();
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    if (!(d[i] > 0.0) || !std::isfinite(d[i])) {
      throw NotPositiveDefiniteError("matrix is not positive definite");
    }
  }
  return llt;
}

}  // namespace

double logdet_spd(const InfoMatrix& Z) {
  const auto llt = cholesky(Z);
  return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

InfoMatrix spd_inverse(const InfoMatrix& Z) {
  const auto llt = cholesky(Z);
  const InfoMatrix inv = llt.solve(InfoMatrix::Identity(Z.rows(), Z.cols()));
  return symmetrize(inv);
}

double min_eigenvalue(const InfoMatrix& Z) {
  Eigen::SelfAdjointEigenSolver<InfoMatrix> es(symmetrize(Z),
                                               Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

double LogDetMetric::value(const InfoVector& z) const {
  return -logdet_spd(unvec(z));
}

InfoVector LogDetMetric::gradient(const InfoVector& z) const {
  return -vec(spd_inverse(unvec(z)));
}

InfoVector LogDetMetric::curvature(const InfoMatrix& Q,
                                   const InfoVector& lambda) const {
  return upsilon(Q, lambda);
}

std::shared_ptr<const TerminalMetric> make_logdet_metric() {
  return std::make_shared<LogDetMetric>();
}

double metric_value(const TerminalMetric& G, const InfoVector& z) {
  return G.value(z);
}

InfoVector metric_gradient(const TerminalMetric& G, const InfoVector& z) {
  return G.gradient(z);
}

double normalized_gain(const TerminalMetric& G, const InfoVector& z,
                       const InfoVector& z0) {
  return G.value(z) - G.value(z0);
}

InfoVector upsilon(const InfoMatrix& Q, const InfoVector& lambda) {
  const InfoMatrix L = unvec(lambda);
  if (Q.rows() != L.rows() || Q.cols() != L.cols()) {
    throw DimensionError("upsilon: Q is " + std::to_string(Q.rows()) + "x" +
                         std::to_string(Q.cols()) + ", lambda represents " +
                         std::to_string(L.rows()) + "x" +
                         std::to_string(L.cols()));
  }
  return vec(symmetrize(L * Q * L));
}

}  // namespace infotraj::matrixcore
