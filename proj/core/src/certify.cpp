#include "olu/certify.hpp"

#include "olu/error.hpp"
#include "olu/seeding.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <limits>

namespace olu {

void validate(const BoundInputs& in) {
  if (!(in.rho > 0.0 && in.rho < 1.0))
    throw Error(Errc::InvalidRho, fmt::format("contraction factor {} outside (0, 1)", in.rho));
  if (!(in.delta_t0 >= 0.0)) throw Error(Errc::NegativeInput, "initial deviation must be >= 0");
  for (double p : in.perturbations)
    if (!(p >= 0.0)) throw Error(Errc::NegativeInput, "perturbations must be >= 0");
}

double deviation_bound(const BoundInputs& in, std::size_t steps) {
  validate(in);
  if (in.perturbations.size() != steps)
    throw Error(Errc::LengthMismatch, fmt::format("{} perturbations for {} steps",
                                                  in.perturbations.size(), steps));
  const double n = static_cast<double>(steps);
  double bound = std::pow(in.rho, n) * in.delta_t0;
  for (std::size_t s = 0; s < steps; ++s)
    bound += std::pow(in.rho, n - 1.0 - static_cast<double>(s)) * in.perturbations[s];
  return bound;
}

DeviationRecursion::DeviationRecursion(const BoundInputs& in) : in_(&in), value_(in.delta_t0) {
  validate(in);
}

double DeviationRecursion::next() {
  const double p = k_ < in_->perturbations.size() ? in_->perturbations[k_] : 0.0;
  value_ = in_->rho * value_ + p;
  ++k_;
  return value_;
}

double calibrate_sigma(double alpha, double epsilon, double delta) {
  if (!(epsilon > 0.0) || !(delta > 0.0 && delta < 1.0))
    throw Error(Errc::InvalidPrivacyParams, "need epsilon > 0 and 0 < delta < 1");
  if (!(alpha >= 0.0)) throw Error(Errc::NegativeInput, "alpha must be >= 0");
  if (alpha == 0.0) return 0.0;
  return alpha * std::sqrt(2.0 * std::log(1.25 / delta)) / epsilon;
}

Certificate make_certificate(double alpha_t, double epsilon, double delta, double beta) {
  if (!(beta >= 0.0 && beta < 1.0))
    throw Error(Errc::InvalidPrivacyParams, "bound failure probability must lie in [0, 1)");
  return Certificate{alpha_t, calibrate_sigma(alpha_t, epsilon, delta), epsilon, delta, beta};
}

OptimizerState inject_noise(const OptimizerState& state, double sigma, std::uint64_t seed) {
  if (!(sigma >= 0.0)) throw Error(Errc::NegativeSigma, "noise scale must be >= 0");
  OptimizerState out = state;
  if (sigma == 0.0) return out;
  Rng rng(seed);
  out.w += sigma * gaussian_vector(out.w.size(), rng);
  return out;
}

ContractionEstimate empirical_contraction(const OptimizerState& start,
                                          std::span<const Event> history, const StepConfig& cfg,
                                          const ContractionOptions& opts) {
  ContractionEstimate est;
  std::vector<std::size_t> inserts;
  for (std::size_t i = 0; i < history.size(); ++i)
    if (history[i].is_insert()) inserts.push_back(i);
  if (inserts.empty() || opts.trials == 0) return est;

  Rng rng(mix_seed(opts.seed, 0xc0de));
  const ProbeSet probes = make_probes(start.w.size(), opts.probe_count, mix_seed(opts.seed, 0x9b0b));
  std::uniform_int_distribution<std::size_t> pick(0, inserts.size() - 1);
  std::vector<std::size_t> at(opts.trials);
  for (auto& a : at) a = inserts[pick(rng)];
  std::sort(at.begin(), at.end());

  OptimizerState state = start;
  std::size_t next_trial = 0;
  for (std::size_t i = 0; i < history.size() && next_trial < at.size(); ++i) {
    const Event& e = history[i];
    while (next_trial < at.size() && at[next_trial] == i) {
      OptimizerState a = state;
      OptimizerState b = state;
      const double radius = opts.radius * std::max(1.0, state.w.norm());
      b.w += radius * make_probes(state.w.size(), 1, rng()).probes.front();
      const double before = state_error(param_error(a.w, b.w), 0.0, opts.lambda_z);
      step_in_place(a, e, cfg);
      step_in_place(b, e, cfg);
      const double after = state_error(param_error(a.w, b.w),
                                       memory_operator_error(a.memory, b.memory, probes),
                                       opts.lambda_z);
      est.ratios.push_back(after / before);
      ++next_trial;
    }
    if (e.is_insert()) step_in_place(state, e, cfg);
  }
  est.rho_hat = *std::max_element(est.ratios.begin(), est.ratios.end());
  return est;
}

ContractionEstimate empirical_contraction(std::span<const Event> history, const StepConfig& cfg,
                                          std::size_t tau, const ContractionOptions& opts) {
  Eigen::Index d = 0;
  for (const auto& e : history)
    if (e.payload) {
      d = payload_dimension(*e.payload);
      break;
    }
  return empirical_contraction(initial_state(d, tau, cfg), history, cfg, opts);
}

AssumptionReport check_assumptions(const OptimizerState& start, std::span<const Event> history,
                                   const StepConfig& cfg, const ProbeSet& probes,
                                   const AssumptionBounds& bounds,
                                   const ContractionOptions& contraction) {
  AssumptionReport rep;
  rep.min_loss_curvature = std::numeric_limits<double>::infinity();
  rep.min_inverse_curvature = std::numeric_limits<double>::infinity();
  const Matrix* last_hessian = nullptr;
  double last_lo = 0.0, last_hi = 0.0;

  OptimizerState state = start;
  for (const Event& e : history) {
    if (!e.is_insert()) continue;
    double lo = 0.0, hi = 0.0;
    if (const auto* q = std::get_if<QuadraticSample>(&*e.payload)) {
      if (q->hessian.get() != last_hessian) {
        Eigen::SelfAdjointEigenSolver<Matrix> es(*q->hessian, Eigen::EigenvaluesOnly);
        last_lo = es.eigenvalues().minCoeff();
        last_hi = es.eigenvalues().maxCoeff();
        last_hessian = q->hessian.get();
      }
      lo = last_lo;
      hi = last_hi;
    } else {
      const auto& s = std::get<LogisticSample>(*e.payload);
      lo = cfg.ridge;
      hi = cfg.ridge + 0.25 * s.features.squaredNorm();
    }
    rep.min_loss_curvature = std::min(rep.min_loss_curvature, lo);
    rep.max_loss_curvature = std::max(rep.max_loss_curvature, hi);
    rep.max_grad_norm =
        std::max(rep.max_grad_norm, loss_and_grad(*e.payload, state.w, cfg.ridge).grad.norm());
    for (const auto& q : probes.probes) {
      const double rq = q.dot(two_loop(state.memory, q));
      rep.min_inverse_curvature = std::min(rep.min_inverse_curvature, rq);
      rep.max_inverse_curvature = std::max(rep.max_inverse_curvature, rq);
    }
    step_in_place(state, e, cfg);
  }

  rep.rho_hat = empirical_contraction(start, history, cfg, contraction).rho_hat;
  const double tol = 1e-8;
  if (bounds.mu > 0.0 && rep.min_loss_curvature < bounds.mu * (1.0 - tol))
    rep.violations.push_back(fmt::format("strong-convexity: min curvature {} < mu {}",
                                         rep.min_loss_curvature, bounds.mu));
  if (bounds.smoothness > 0.0 && rep.max_loss_curvature > bounds.smoothness * (1.0 + tol))
    rep.violations.push_back(fmt::format("smoothness: max curvature {} > L {}",
                                         rep.max_loss_curvature, bounds.smoothness));
  if (bounds.grad_bound > 0.0 && rep.max_grad_norm > bounds.grad_bound)
    rep.violations.push_back(
        fmt::format("bounded-gradients: {} > G {}", rep.max_grad_norm, bounds.grad_bound));
  if (!(rep.min_inverse_curvature > 0.0))
    rep.violations.push_back(fmt::format("bounded-hessian: inverse curvature quotient {} <= 0",
                                         rep.min_inverse_curvature));
  if (!(rep.rho_hat < 1.0))
    rep.violations.push_back(fmt::format("contractive-updates: rho_hat {} >= 1", rep.rho_hat));
  return rep;
}

}  // namespace olu
