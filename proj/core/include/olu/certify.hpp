#pragma once

#include "olu/metrics.hpp"
#include "olu/olbfgs.hpp"
#include "olu/stream.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace olu {

/// Inputs of the deviation recursion Delta_{t+1} <= rho Delta_t + eta_t eps_t.
struct BoundInputs {
  double delta_t0 = 0.0;
  double rho = 0.5;  // contraction factor in (0, 1)
  std::vector<double> perturbations;  // eta_s * eps_s for s = t0 .. t-1
};

void validate(const BoundInputs& in);

/// rho^n Delta_t0 + sum_s rho^{n-1-s} eta_s eps_s, with n = steps.
double deviation_bound(const BoundInputs& in, std::size_t steps);

/// Iterates the one-step recursion; value() is the bound after the steps
/// taken so far.
class DeviationRecursion {
 public:
  explicit DeviationRecursion(const BoundInputs& in);
  double value() const noexcept { return value_; }
  std::size_t steps() const noexcept { return k_; }
  /// Advances one step using the next stored perturbation (zero once exhausted).
  double next();

 private:
  const BoundInputs* in_;
  double value_;
  std::size_t k_ = 0;
};

/// Minimal certified noise scale alpha sqrt(2 ln(1.25/delta)) / epsilon.
double calibrate_sigma(double alpha, double epsilon, double delta);

struct Certificate {
  double alpha_t = 0.0;
  double sigma = 0.0;
  double epsilon = 1.0;
  double delta = 1e-5;
  double beta = 0.0;

  bool exact() const noexcept { return alpha_t == 0.0; }
};

Certificate make_certificate(double alpha_t, double epsilon, double delta, double beta = 0.0);

/// Adds N(0, sigma^2 I) to the parameters; memory is left untouched.
OptimizerState inject_noise(const OptimizerState& state, double sigma, std::uint64_t seed);

struct ContractionOptions {
  std::size_t trials = 50;
  std::uint64_t seed = 0;
  double lambda_z = 1.0;
  std::size_t probe_count = 32;
  /// Parameter perturbation radius relative to max(1, |w|).
  double radius = 1e-6;
};

struct ContractionEstimate {
  double rho_hat = 0.0;  // max over trials
  std::vector<double> ratios;

  bool contractive() const noexcept { return rho_hat < 1.0; }
};

/// One-step expansion ratios d(Phi(theta), Phi(theta')) / d(theta, theta')
/// under the E_Theta metric, where theta runs along the replay of `history`
/// from `start` and theta' perturbs its parameters.
ContractionEstimate empirical_contraction(const OptimizerState& start,
                                          std::span<const Event> history, const StepConfig& cfg,
                                          const ContractionOptions& opts);
/// Same, starting from the zero state with memory window tau.
ContractionEstimate empirical_contraction(std::span<const Event> history, const StepConfig& cfg,
                                          std::size_t tau, const ContractionOptions& opts);

/// Numerical witnesses for the convexity/boundedness assumptions.
struct AssumptionReport {
  double min_loss_curvature = 0.0;  // smallest Hessian eigenvalue seen
  double max_loss_curvature = 0.0;
  double max_grad_norm = 0.0;
  double min_inverse_curvature = 0.0;  // Rayleigh quotients of H_Z over probes
  double max_inverse_curvature = 0.0;
  double rho_hat = 0.0;
  std::vector<std::string> violations;
};

struct AssumptionBounds {
  double mu = 0.0;           // strong convexity
  double smoothness = 0.0;   // L; 0 disables the check
  double grad_bound = 0.0;   // G; 0 disables the check
};

/// Replays `history` from `start`, checking loss curvature spectra, gradient
/// norms, positivity of the inverse curvature action, and contraction.
AssumptionReport check_assumptions(const OptimizerState& start, std::span<const Event> history,
                                   const StepConfig& cfg, const ProbeSet& probes,
                                   const AssumptionBounds& bounds,
                                   const ContractionOptions& contraction);

}  // namespace olu
