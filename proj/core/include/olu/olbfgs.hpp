#pragma once

#include "olu/linalg.hpp"
#include "olu/ring_buffer.hpp"
#include "olu/stream.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace olu {

/// One (s, y) update pair plus the sample indices whose event generated it.
struct CurvaturePair {
  Vector s;
  Vector y;
  double rho = 0.0;  // 1 / (s^T y)
  std::vector<SampleIndex> sources;
  std::uint64_t created_at = 0;

  static CurvaturePair make(Vector s, Vector y, std::vector<SampleIndex> sources,
                            std::uint64_t created_at);
};

enum class GammaMode {
  NewestPair,  // gamma = s^T y / y^T y of the newest pair, gamma0 when empty
  Fixed,       // gamma = gamma0 always
};

std::string_view to_string(GammaMode m) noexcept;
GammaMode parse_gamma_mode(std::string_view s);

struct Scaling {
  GammaMode mode = GammaMode::NewestPair;
  double gamma0 = 1.0;
};

/// Finite curvature memory Z: at most tau pairs, oldest first.
class MemoryState {
 public:
  MemoryState() = default;
  explicit MemoryState(std::size_t tau, Scaling scaling = {}) : pairs_(tau), scaling_(scaling) {}

  std::size_t tau() const noexcept { return pairs_.capacity(); }
  std::size_t size() const noexcept { return pairs_.size(); }
  bool empty() const noexcept { return pairs_.empty(); }
  const CurvaturePair& operator[](std::size_t i) const { return pairs_[i]; }
  const Scaling& scaling() const noexcept { return scaling_; }

  /// Appends, evicting the oldest pair when full. Returns true on eviction.
  bool push(CurvaturePair p) { return pairs_.push(std::move(p)); }
  void clear() noexcept { pairs_.clear(); }
  template <typename Pred>
  std::size_t erase_if(Pred pred) {
    return pairs_.erase_if(pred);
  }

  double gamma() const;

 private:
  RingBuffer<CurvaturePair> pairs_;
  Scaling scaling_;
};

struct StepConfig {
  double eta = 0.1;
  double curvature_eps = 1e-10;
  GammaMode gamma_mode = GammaMode::NewestPair;
  double gamma0 = 1.0;
  /// Ridge weight for logistic payloads; ignored by quadratic ones.
  double ridge = 0.0;
};

void validate(const StepConfig& cfg);

/// theta = (w, Z) plus the number of insert events consumed so far.
struct OptimizerState {
  Vector w;
  MemoryState memory;
  std::uint64_t step = 0;
};

/// Zero parameters and empty memory of capacity tau.
OptimizerState initial_state(Eigen::Index dimension, std::size_t tau, const StepConfig& cfg);

/// Implicit L-BFGS inverse-Hessian action H_Z q.
Vector two_loop(const MemoryState& memory, const Vector& q);

/// -H_Z grad l_e(w) at the given state.
Vector update_direction(const OptimizerState& state, const SamplePayload& payload, double ridge);

/// What a single update did, for cost accounting and clearance tracking.
struct StepInfo {
  bool pair_accepted = false;
  double loss = 0.0;  // loss at w before the move
};

StepInfo step_in_place(OptimizerState& state, const Event& event, const StepConfig& cfg);
OptimizerState step(const OptimizerState& state, const Event& event, const StepConfig& cfg);

/// Left fold of step over inserts; Delete events leave the state untouched.
OptimizerState replay(OptimizerState theta0, std::span<const Event> history,
                      const StepConfig& cfg);

std::size_t direct_memory_mass(const MemoryState& memory, const DeletionSet& deletions);

/// Versioned text snapshot with hex-float payloads; round-trips bit-exactly.
std::string serialize(const OptimizerState& state, const StepConfig& cfg);
OptimizerState deserialize(std::string_view text);
std::uint64_t config_hash(const StepConfig& cfg);

}  // namespace olu
