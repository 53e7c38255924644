#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>

namespace olu {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Rng = std::mt19937_64;

Vector gaussian_vector(Eigen::Index d, Rng& rng);

/// Columns are orthonormal; `count` may not exceed `d`.
Matrix random_orthonormal(Eigen::Index d, Eigen::Index count, Rng& rng);

/// Symmetric positive-definite matrix with a random orthogonal eigenbasis and
/// log-uniform eigenvalues on [lo, hi]. For d >= 2 the extremes are pinned so
/// the condition number is exactly hi / lo.
Matrix spd_with_spectrum(Eigen::Index d, double lo, double hi, Rng& rng);

/// Eigenvalue projection of a symmetric matrix onto [lo, hi].
Matrix clamp_spectrum(const Matrix& sym, double lo, double hi);

inline Matrix symmetrize(const Matrix& m) { return 0.5 * (m + m.transpose()); }

}  // namespace olu
