#include "olu/metrics.hpp"

#include "olu/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace olu {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void require_same_size(Eigen::Index a, Eigen::Index b, const char* what) {
  if (a != b) throw Error(Errc::DimensionMismatch, what);
}

}  // namespace

ProbeSet make_probes(Eigen::Index dimension, std::size_t count, std::uint64_t seed) {
  ProbeSet set;
  set.seed = seed;
  Rng rng(seed);
  set.probes.reserve(count);
  while (set.probes.size() < count) {
    Vector v = gaussian_vector(dimension, rng);
    const double n = v.norm();
    if (n < 1e-12) continue;
    set.probes.push_back(v / n);
  }
  return set;
}

double param_error(const Vector& a, const Vector& b) {
  require_same_size(a.size(), b.size(), "parameter vectors differ in dimension");
  return (a - b).norm();
}

std::vector<Vector> probe_actions(const MemoryState& m, const ProbeSet& probes) {
  std::vector<Vector> out;
  out.reserve(probes.size());
  for (const auto& q : probes.probes) out.push_back(two_loop(m, q));
  return out;
}

double memory_operator_error(const MemoryState& a, std::span<const Vector> b_actions,
                             const ProbeSet& probes) {
  if (probes.size() == 0) return 0.0;
  if (b_actions.size() != probes.size())
    throw Error(Errc::DimensionMismatch, "probe action count differs from probe count");
  double sum = 0.0;
  for (std::size_t j = 0; j < probes.size(); ++j) {
    require_same_size(b_actions[j].size(), probes.probes[j].size(), "probe dimension mismatch");
    sum += (two_loop(a, probes.probes[j]) - b_actions[j]).squaredNorm();
  }
  return std::sqrt(sum / static_cast<double>(probes.size()));
}

double memory_operator_error(const MemoryState& a, const MemoryState& b, const ProbeSet& probes) {
  const auto actions = probe_actions(b, probes);
  return memory_operator_error(a, actions, probes);
}

double state_error(double e_w, double e_z, double lambda_z) {
  if (e_w < 0.0 || e_z < 0.0 || lambda_z < 0.0)
    throw Error(Errc::NegativeInput, "state error inputs must be non-negative");
  return e_w + lambda_z * e_z;
}

std::optional<double> direction_error(const Vector& da, const Vector& db) {
  require_same_size(da.size(), db.size(), "update directions differ in dimension");
  const double na = da.norm();
  const double nb = db.norm();
  if (na < 1e-14 || nb < 1e-14) return std::nullopt;
  if (da == db) return 0.0;
  const double cosine = std::clamp(da.dot(db) / (na * nb), -1.0, 1.0);
  return 1.0 - cosine;
}

std::optional<double> update_direction_error(const OptimizerState& a, const OptimizerState& b,
                                             const Event& event, double ridge) {
  if (!event.is_insert() || !event.payload)
    throw Error(Errc::NonInsertEvent, "update direction needs an insert event");
  return direction_error(update_direction(a, *event.payload, ridge),
                         update_direction(b, *event.payload, ridge));
}

double auc(std::span<const double> values) {
  if (values.empty()) throw Error(Errc::EmptyTrace, "AUC of an empty trace");
  double sum = 0.0;
  for (double v : values)
    if (!std::isnan(v)) sum += v;
  return sum;
}

std::optional<std::size_t> direct_clearance_time(std::span<const std::size_t> mass) {
  for (std::size_t k = 0; k < mass.size(); ++k)
    if (mass[k] == 0) return k;
  return std::nullopt;
}

DecayFit fit_decay_rate(std::span<const double> trace, std::size_t k_lo, std::size_t k_hi) {
  if (k_hi < k_lo + 2 || k_hi >= trace.size())
    throw Error(Errc::IntervalTooShort, "decay fit needs k_hi - k_lo >= 2 inside the trace");
  const double n = static_cast<double>(k_hi - k_lo + 1);
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (std::size_t k = k_lo; k <= k_hi; ++k) {
    if (trace[k] < 0.0) throw Error(Errc::NegativeInput, "decay fit needs a non-negative trace");
    const double x = static_cast<double>(k);
    const double y = std::log(std::max(trace[k], kDecayFloor));
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  const double intercept = (sy - slope * sx) / n;

  // r^2 over the points that were not floored.
  double mean = 0.0;
  std::size_t kept = 0;
  for (std::size_t k = k_lo; k <= k_hi; ++k) {
    if (trace[k] > kDecayFloor) {
      mean += std::log(trace[k]);
      ++kept;
    }
  }
  double r2 = 1.0;
  if (kept >= 2) {
    mean /= static_cast<double>(kept);
    double ss_res = 0.0, ss_tot = 0.0;
    for (std::size_t k = k_lo; k <= k_hi; ++k) {
      if (trace[k] <= kDecayFloor) continue;
      const double y = std::log(trace[k]);
      const double fit = intercept + slope * static_cast<double>(k);
      ss_res += (y - fit) * (y - fit);
      ss_tot += (y - mean) * (y - mean);
    }
    r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : (ss_res > 0.0 ? 0.0 : 1.0);
  } else if (kept == 1) {
    r2 = kNaN;
  }
  return DecayFit{std::exp(slope), std::exp(intercept), k_lo, k_hi, r2};
}

PhaseBounds phase_bounds(std::optional<std::size_t> clearance, std::size_t tau,
                         std::size_t horizon) {
  PhaseBounds b;
  b.horizon = horizon;
  b.p1_end = (clearance && *clearance > 0) ? *clearance : tau;
  b.p2_end = std::max(2 * tau, b.p1_end);
  b.p1_end = std::min(b.p1_end, horizon);
  b.p2_end = std::min(b.p2_end, horizon);
  return b;
}

PhaseFits fit_phases(std::span<const double> trace, const PhaseBounds& b) {
  auto try_fit = [&](std::size_t lo, std::size_t hi) -> std::optional<DecayFit> {
    if (hi < lo + 2 || hi >= trace.size()) return std::nullopt;
    return fit_decay_rate(trace, lo, hi);
  };
  return PhaseFits{try_fit(0, b.p1_end), try_fit(b.p1_end, b.p2_end), try_fit(b.p2_end, b.horizon)};
}

}  // namespace olu
