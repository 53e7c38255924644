#pragma once

#include "olu/linalg.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

namespace olu {

using SampleIndex = std::uint64_t;

enum class Regime { Quadratic, Logistic };
enum class DeletionMode { Recent, Old, Random, HighGradient };

std::string_view to_string(Regime r) noexcept;
std::string_view to_string(DeletionMode m) noexcept;
Regime parse_regime(std::string_view s);
DeletionMode parse_deletion_mode(std::string_view s);

/// l(w) = 1/2 (w - minimizer)^T hessian (w - minimizer). Streams without
/// curvature drift share one hessian across all events.
struct QuadraticSample {
  std::shared_ptr<const Matrix> hessian;
  Vector minimizer;
};

/// l(w) = log(1 + exp(-label * features^T w)) + ridge/2 |w|^2.
struct LogisticSample {
  Vector features;
  double label = 1.0;
};

using SamplePayload = std::variant<QuadraticSample, LogisticSample>;

Eigen::Index payload_dimension(const SamplePayload& p);

enum class EventOp { Insert, Delete };

struct Event {
  EventOp op = EventOp::Insert;
  SampleIndex index = 0;
  std::optional<SamplePayload> payload;
  std::uint64_t time = 0;

  static Event insert(std::uint64_t time, SampleIndex index, SamplePayload payload);
  static Event remove(std::uint64_t time, SampleIndex index);

  bool is_insert() const noexcept { return op == EventOp::Insert; }
};

struct StreamConfig {
  Regime regime = Regime::Quadratic;
  Eigen::Index dimension = 25;
  std::uint64_t length = 5000;
  double kappa = 10.0;
  double mu = 1.0;
  // Minimizer drift: a_t = a_0 + amp*sin(2 pi t/P) u1 + amp*cos(2 pi t/P) u2 + noise*xi_t.
  double drift_amplitude = 0.5;
  double drift_period = 200.0;
  double drift_noise = 0.01;
  // Curvature (or covariance) interpolation weight delta_H/2 * (1 + sin(2 pi t/P_H)).
  double curvature_drift = 0.0;
  double curvature_period = 500.0;
  // Logistic regime.
  double ridge = 0.05;
  double label_drift = 0.5;
  double label_period = 500.0;
  double beta0_scale = 1.0;
  // Deletion request.
  DeletionMode deletion_mode = DeletionMode::Recent;
  std::size_t deletion_size = 5;
  std::uint64_t deletion_time = 500;
  std::uint64_t horizon = 4500;
};

/// Throws InvalidConfig when the generator parameters are out of range.
void validate_generator(const StreamConfig& cfg);
/// Throws InvalidConfig unless 1 <= t_del < T, t_del + H <= T and |U| <= t_del.
void validate_deletion_window(const StreamConfig& cfg);

struct EventStream {
  std::vector<Event> events;
  Eigen::Index dimension = 0;
  Regime regime = Regime::Quadratic;
  StreamConfig config;
  std::uint64_t seed = 0;

  /// Events with time in [first, last], both 1-based.
  std::span<const Event> slice(std::uint64_t first, std::uint64_t last) const;
};

EventStream gen_quadratic_stream(const StreamConfig& cfg, std::uint64_t seed);
EventStream gen_logistic_stream(const StreamConfig& cfg, std::uint64_t seed);
EventStream generate_stream(const StreamConfig& cfg, std::uint64_t seed);

struct LossGrad {
  double loss = 0.0;
  Vector grad;
};

LossGrad loss_and_grad(const SamplePayload& payload, const Vector& w, double ridge);
Matrix loss_hessian(const SamplePayload& payload, const Vector& w, double ridge);

struct DeletionSet {
  std::vector<SampleIndex> indices;  // sorted ascending
  std::uint64_t requested_at = 0;
  DeletionMode mode = DeletionMode::Recent;

  bool contains(SampleIndex i) const;
  bool empty() const noexcept { return indices.empty(); }
  std::size_t size() const noexcept { return indices.size(); }
};

DeletionSet make_deletion_set(std::vector<SampleIndex> indices, std::uint64_t requested_at,
                              DeletionMode mode);

/// HighGradient ranks candidates by gradient norm at `grad_state`.
DeletionSet select_deletion_set(const EventStream& stream, std::uint64_t t_del,
                                DeletionMode mode, std::size_t size,
                                const std::optional<Vector>& grad_state = std::nullopt);

std::vector<Event> edit_history(std::span<const Event> prefix, const DeletionSet& deletions);

}  // namespace olu
