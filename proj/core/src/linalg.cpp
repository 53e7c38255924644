#include "olu/linalg.hpp"

#include "olu/error.hpp"

#include <cmath>

namespace olu {

Vector gaussian_vector(Eigen::Index d, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector v(d);
  for (Eigen::Index i = 0; i < d; ++i) v[i] = normal(rng);
  return v;
}

Matrix random_orthonormal(Eigen::Index d, Eigen::Index count, Rng& rng) {
  if (count > d) throw Error(Errc::DimensionMismatch, "more orthonormal columns than dimensions");
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix g(d, count);
  for (Eigen::Index j = 0; j < count; ++j)
    for (Eigen::Index i = 0; i < d; ++i) g(i, j) = normal(rng);
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ() * Matrix::Identity(d, count);
  const Matrix& r = qr.matrixQR();
  // Sign convention R_jj > 0 makes Q Haar-distributed.
  for (Eigen::Index j = 0; j < count; ++j) {
    if (r(j, j) < 0.0) q.col(j) *= -1.0;
  }
  return q;
}

Matrix spd_with_spectrum(Eigen::Index d, double lo, double hi, Rng& rng) {
  const Matrix q = random_orthonormal(d, d, rng);
  std::uniform_real_distribution<double> unif(std::log(lo), std::log(hi));
  Vector eig(d);
  for (Eigen::Index i = 0; i < d; ++i) eig[i] = std::exp(unif(rng));
  if (d >= 2) {
    eig[0] = lo;
    eig[d - 1] = hi;
  } else {
    eig[0] = lo;
  }
  return symmetrize(q * eig.asDiagonal() * q.transpose());
}

Matrix clamp_spectrum(const Matrix& sym, double lo, double hi) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(sym);
  Vector eig = es.eigenvalues().cwiseMax(lo).cwiseMin(hi);
  return symmetrize(es.eigenvectors() * eig.asDiagonal() * es.eigenvectors().transpose());
}

}  // namespace olu
