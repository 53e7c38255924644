#pragma once

#include "olu/olbfgs.hpp"
#include "olu/stream.hpp"

#include <memory>
#include <random>
#include <vector>

namespace olu::testing {

/// Dense BFGS inverse-Hessian built pair by pair from gamma I; the textbook
/// form the two-loop recursion is supposed to apply implicitly.
inline Matrix dense_inverse_hessian(const MemoryState& m) {
  const Eigen::Index d = m.empty() ? 0 : m[0].s.size();
  Matrix h = m.gamma() * Matrix::Identity(d, d);
  for (std::size_t i = 0; i < m.size(); ++i) {
    const Vector& s = m[i].s;
    const Vector& y = m[i].y;
    const double rho = 1.0 / s.dot(y);
    const Matrix left = Matrix::Identity(d, d) - rho * s * y.transpose();
    h = left * h * left.transpose() + rho * s * s.transpose();
  }
  return h;
}

/// Memory filled with `count` random pairs that satisfy s^T y > 0.
inline MemoryState random_memory(Eigen::Index d, std::size_t tau, std::size_t count, Rng& rng,
                                 Scaling scaling = {}) {
  MemoryState m(tau, scaling);
  std::normal_distribution<double> n(0.0, 1.0);
  for (std::size_t i = 0; i < count; ++i) {
    Vector s(d), y(d);
    do {
      for (Eigen::Index j = 0; j < d; ++j) s[j] = n(rng);
      // y = A s with A SPD keeps the curvature condition.
      Matrix a = Matrix::Random(d, d);
      a = a * a.transpose() + Matrix::Identity(d, d);
      y = a * s;
    } while (s.dot(y) <= 1e-8);
    m.push(CurvaturePair::make(s, y, {static_cast<SampleIndex>(i + 1)}, i + 1));
  }
  return m;
}

inline Event quadratic_event(std::uint64_t t, const Matrix& h, const Vector& a) {
  return Event::insert(t, t, QuadraticSample{std::make_shared<const Matrix>(h), a});
}

/// Small drifting-quadratic stream for fast unit tests.
inline StreamConfig small_stream_config() {
  StreamConfig c;
  c.dimension = 4;
  c.length = 120;
  c.kappa = 5.0;
  c.deletion_time = 60;
  c.horizon = 50;
  c.deletion_size = 3;
  return c;
}

}  // namespace olu::testing
