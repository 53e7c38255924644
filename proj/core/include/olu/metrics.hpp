#pragma once

#include "olu/linalg.hpp"
#include "olu/olbfgs.hpp"
#include "olu/stream.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace olu {

/// Fixed unit probe vectors shared by every method within a run.
struct ProbeSet {
  std::vector<Vector> probes;
  std::uint64_t seed = 0;

  std::size_t size() const noexcept { return probes.size(); }
};

ProbeSet make_probes(Eigen::Index dimension, std::size_t count, std::uint64_t seed);

double param_error(const Vector& a, const Vector& b);

/// RMS over probes of |H_a q - H_b q|.
double memory_operator_error(const MemoryState& a, const MemoryState& b, const ProbeSet& probes);

/// Same as memory_operator_error, with the second state's probe actions
/// precomputed (one vector per probe).
double memory_operator_error(const MemoryState& a, std::span<const Vector> b_actions,
                             const ProbeSet& probes);
std::vector<Vector> probe_actions(const MemoryState& m, const ProbeSet& probes);

double state_error(double e_w, double e_z, double lambda_z);

/// 1 - cos(d_a, d_b); nullopt when either direction has norm below 1e-14.
std::optional<double> update_direction_error(const OptimizerState& a, const OptimizerState& b,
                                             const Event& event, double ridge);
std::optional<double> direction_error(const Vector& da, const Vector& db);

/// Per post-deletion step k = 0..H. Missing values are NaN.
struct MetricTrace {
  std::vector<double> e_w;
  std::vector<double> e_z;
  std::vector<double> e_theta;
  std::vector<double> d_upd;
  std::vector<std::size_t> m_direct;
  std::vector<double> loss;
  double lambda_z = 1.0;

  std::size_t size() const noexcept { return e_theta.size(); }
};

/// Plain sum; NaN entries (missing values) are skipped.
double auc(std::span<const double> values);

/// First k with zero mass, nullopt when the mass never clears.
std::optional<std::size_t> direct_clearance_time(std::span<const std::size_t> mass);

struct DecayFit {
  double rho_hat = 1.0;
  double c_hat = 0.0;
  std::size_t k_lo = 0;
  std::size_t k_hi = 0;
  double r_squared = 1.0;
};

inline constexpr double kDecayFloor = 1e-15;

/// Least-squares fit of log(max(trace[k], floor)) = log C + k log rho over
/// k in [k_lo, k_hi] inclusive.
DecayFit fit_decay_rate(std::span<const double> trace, std::size_t k_lo, std::size_t k_hi);

struct PhaseBounds {
  std::size_t p1_end = 0;  // P1 = [0, p1_end]
  std::size_t p2_end = 0;  // P2 = [p1_end, p2_end]
  std::size_t horizon = 0; // P3 = [p2_end, horizon]
};

/// P1 ends at the direct-clearance time when one is known, otherwise at tau;
/// P2 ends at 2 tau; P3 runs to the horizon.
PhaseBounds phase_bounds(std::optional<std::size_t> clearance, std::size_t tau,
                         std::size_t horizon);

struct PhaseFits {
  std::optional<DecayFit> p1, p2, p3;
};

PhaseFits fit_phases(std::span<const double> trace, const PhaseBounds& bounds);

}  // namespace olu
