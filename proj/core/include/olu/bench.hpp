#pragma once

#include "olu/certify.hpp"
#include "olu/interventions.hpp"
#include "olu/metrics.hpp"
#include "olu/olbfgs.hpp"
#include "olu/stream.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace olu {

enum class ExperimentKind { FiniteMemoryDecay, StateAware };
enum class PhasePolicy { Clearance, Nominal };

std::string_view to_string(ExperimentKind k) noexcept;
std::string_view to_string(PhasePolicy p) noexcept;
PhasePolicy parse_phase_policy(std::string_view s);

struct CertificateConfig {
  double epsilon = 1.0;
  double delta = 1e-5;
  std::size_t contraction_trials = 50;
  double contraction_radius = 1e-6;
};

struct ExperimentConfig {
  StreamConfig stream;
  StepConfig optimizer;
  /// When false the step size follows the regime: 0.1 quadratic, 0.5 logistic.
  bool eta_explicit = false;
  std::size_t tau = 10;
  /// Intervention ids (see intervention_id); resolved against tau at run time.
  /// Oracle and no-op rows are always produced.
  std::vector<std::string> interventions;
  std::size_t probe_count = 32;
  double lambda_z = 1.0;
  PhasePolicy phase_policy = PhasePolicy::Clearance;
  WindowRestart window_restart = WindowRestart::Checkpoint;
  CertificateConfig certificate;
  std::uint64_t seed = 0;
};

/// d=25, T=700, t_del=300, H=250, tau=10, |U|=5, m_q=32, lambda_Z=1.
ExperimentConfig default_experiment1_config();
/// d=25, T=5000, t_del=500, H=4500, tau=10, |U|=5, m_q=32, lambda_Z=1, all methods.
ExperimentConfig default_experiment2_config();

/// Step configuration with the regime step size and the stream's ridge applied
/// to logistic payloads.
StepConfig effective_step_config(const ExperimentConfig& cfg);
void validate(const ExperimentConfig& cfg);

struct MethodResult {
  std::string method;
  double initial_param_err = 0.0;
  double initial_mem_err = 0.0;
  double initial_state_err = 0.0;
  double final_state_err = 0.0;
  double future_state_auc = 0.0;
  double future_param_auc = 0.0;
  double upd_dir_auc = 0.0;
  std::size_t direct_mass_at_del = 0;
  std::optional<std::size_t> clearance_time;
  bool exact_recovery = false;
  double avg_future_loss = 0.0;
  double auc_ratio_vs_noop = 0.0;
  PhaseFits decay;
  InterventionCost cost;
  double alpha_bound = 0.0;
  double sigma_cert = 0.0;
  MetricTrace trace;
};

struct RunResult {
  ExperimentKind kind = ExperimentKind::StateAware;
  std::uint64_t seed = 0;
  Regime regime = Regime::Quadratic;
  double kappa = 0.0;
  std::size_t tau = 0;
  DeletionMode deletion_mode = DeletionMode::Recent;
  std::size_t deletion_size = 0;
  std::uint64_t t_del = 0;
  std::uint64_t horizon = 0;
  std::vector<SampleIndex> deleted;
  std::vector<MethodResult> methods;
  /// Content hashes of the shared future stream and probe set.
  std::uint64_t future_hash = 0;
  std::uint64_t probe_hash = 0;
  /// Hash of the serialized counterfactual state at t_del.
  std::uint64_t counterfactual_hash = 0;
  double rho_used = 0.0;
  std::vector<std::string> violated_assumptions;
  /// Axis assignments when produced by run_grid.
  std::vector<std::pair<std::string, std::string>> grid_point;

  const MethodResult* find(std::string_view method) const;
};

inline constexpr double kExactRecoveryThreshold = 1e-12;

RunResult run_experiment1(const ExperimentConfig& cfg);
RunResult run_experiment2(const ExperimentConfig& cfg);
RunResult run_experiment(ExperimentKind kind, const ExperimentConfig& cfg);

using GridAxes = std::vector<std::pair<std::string, std::vector<std::string>>>;

/// Applies one axis assignment; throws InvalidAxis for unknown names.
void apply_axis(ExperimentConfig& cfg, const std::string& name, const std::string& value);
std::uint64_t grid_point_seed(std::uint64_t base_seed,
                              const std::vector<std::pair<std::string, std::string>>& point);

/// Cartesian product of the axes, results in lexicographic grid order
/// regardless of the worker count.
std::vector<RunResult> run_grid(const ExperimentConfig& base, const GridAxes& axes,
                                std::size_t workers,
                                ExperimentKind kind = ExperimentKind::StateAware);

struct MethodSummary {
  std::string method;
  std::size_t runs = 0;
  std::map<std::string, double> median;
  std::map<std::string, double> mean;
  double median_ratio_vs_noop = 0.0;
  double mean_ratio_vs_noop = 0.0;
  double share_better_than_noop = 0.0;
  double exact_recovery_rate = 0.0;
  double best_non_oracle_share = 0.0;
  double mean_replayed_events = 0.0;
};

/// Numeric columns summarized by aggregate().
const std::vector<std::string>& summary_columns();
double column_value(const MethodResult& m, std::string_view column);

std::vector<MethodSummary> aggregate(const std::vector<RunResult>& results);

}  // namespace olu
