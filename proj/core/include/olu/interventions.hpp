#pragma once

#include "olu/olbfgs.hpp"
#include "olu/stream.hpp"

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace olu {

enum class InterventionType {
  OracleReplay,
  NoOp,
  ParameterOnly,
  RetainFineTune,
  FullMemoryReset,
  ContaminatedPairDrop,
  WindowReplay,
  DropAndRefill,
};

struct InterventionKind {
  InterventionType type = InterventionType::NoOp;
  std::size_t window = 0;  // replayed events, WindowReplay only

  friend bool operator==(const InterventionKind&, const InterventionKind&) = default;
};

/// Stable identifiers: oracle, noop, param_only, retain_ft, mem_reset,
/// pair_drop, window_tau, window_5tau, window_<N>, drop_refill.
std::string intervention_id(const InterventionKind& kind, std::size_t tau);
InterventionKind parse_intervention(std::string_view id, std::size_t tau);
/// The eight benchmarked methods, with WindowReplay at both tau and 5 tau.
std::vector<InterventionKind> all_interventions(std::size_t tau);

/// Where WindowReplay restarts before replaying the edited window.
enum class WindowRestart {
  Checkpoint,  // the actual state just before the window's first event
  Fresh,       // the global initial state theta0
};

std::string_view to_string(WindowRestart r) noexcept;
WindowRestart parse_window_restart(std::string_view s);

struct ReplayWindow {
  std::vector<Event> events;  // trailing events of the prefix, oldest first
  OptimizerState base;        // actual state before events.front()
};

struct InterventionContext {
  std::optional<std::vector<Event>> full_prefix;  // e_{1:t_del}
  std::map<std::size_t, ReplayWindow> windows;    // keyed by window length
  std::vector<Event> deleted_events;              // payloads of U, for ParameterOnly
  DeletionSet deletions;
  StepConfig step_cfg;
  OptimizerState theta0;
  OptimizerState actual;  // theta_{t_del}
  WindowRestart window_restart = WindowRestart::Checkpoint;
};

/// Trains the actual learner on `prefix` from `theta0`, recording a replay
/// window for every requested length.
InterventionContext build_context(const OptimizerState& theta0, std::span<const Event> prefix,
                                  const DeletionSet& deletions, const StepConfig& cfg,
                                  std::span<const std::size_t> window_lengths,
                                  bool keep_full_prefix = true);

enum class FutureMap { Actual, Counterfactual };

struct InterventionCost {
  std::size_t replayed_events = 0;
  std::size_t extra_grad_evals = 0;
  double wall_clock_seconds = 0.0;
};

struct IntervenedState {
  OptimizerState state;
  FutureMap future_map = FutureMap::Counterfactual;
  InterventionCost cost;
};

IntervenedState apply(const InterventionKind& kind, const InterventionContext& ctx);

}  // namespace olu
