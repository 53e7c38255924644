#include "olu/bench.hpp"

#include "olu/error.hpp"
#include "olu/seeding.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <exception>
#include <limits>
#include <string>
#include <thread>

namespace olu {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr std::uint64_t kProbeSalt = 0x70726f6265ULL;
constexpr std::uint64_t kContractionSalt = 0x72686fULL;

double to_double(const std::string& name, const std::string& v) {
  double out = 0.0;
  auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc{} || res.ptr != v.data() + v.size())
    throw Error(Errc::InvalidConfig, "'" + name + "' expects a number, got '" + v + "'");
  return out;
}

std::uint64_t to_uint(const std::string& name, const std::string& v) {
  std::uint64_t out = 0;
  auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc{} || res.ptr != v.data() + v.size())
    throw Error(Errc::InvalidConfig, "'" + name + "' expects a non-negative integer, got '" + v + "'");
  return out;
}

void hash_vector(Fnv1a& h, const Vector& v) {
  h.update(v.data(), static_cast<std::size_t>(v.size()) * sizeof(double));
}

std::uint64_t hash_events(std::span<const Event> events) {
  Fnv1a h;
  for (const auto& e : events) {
    h.update_value(e.time);
    h.update_value(e.index);
    h.update_value(static_cast<int>(e.op));
    if (!e.payload) continue;
    if (const auto* q = std::get_if<QuadraticSample>(&*e.payload)) {
      hash_vector(h, q->minimizer);
      h.update(q->hessian->data(), static_cast<std::size_t>(q->hessian->size()) * sizeof(double));
    } else {
      const auto& s = std::get<LogisticSample>(*e.payload);
      hash_vector(h, s.features);
      h.update_value(s.label);
    }
  }
  return h.digest();
}

std::uint64_t hash_probes(const ProbeSet& p) {
  Fnv1a h;
  for (const auto& q : p.probes) hash_vector(h, q);
  return h.digest();
}

std::vector<InterventionKind> resolve_methods(const ExperimentConfig& cfg) {
  std::vector<InterventionKind> kinds = {{InterventionType::OracleReplay, 0},
                                         {InterventionType::NoOp, 0}};
  if (cfg.interventions.empty()) {
    for (const auto& k : all_interventions(cfg.tau))
      if (std::find(kinds.begin(), kinds.end(), k) == kinds.end()) kinds.push_back(k);
    return kinds;
  }
  for (const auto& id : cfg.interventions) {
    const InterventionKind k = parse_intervention(id, cfg.tau);
    if (std::find(kinds.begin(), kinds.end(), k) == kinds.end()) kinds.push_back(k);
  }
  return kinds;
}

struct Lane {
  std::string id;
  OptimizerState state;
  InterventionCost cost;
  MetricTrace trace;
};

// Steps every lane and the counterfactual reference through the same future,
// recording metrics at k = 0..H.
void propagate(std::vector<Lane>& lanes, OptimizerState reference, std::span<const Event> future,
               const DeletionSet& deletions, const ProbeSet& probes, const StepConfig& cfg,
               double lambda_z) {
  const std::size_t horizon = future.size();
  for (auto& lane : lanes) {
    lane.trace = MetricTrace{};
    lane.trace.lambda_z = lambda_z;
    for (auto* v : {&lane.trace.e_w, &lane.trace.e_z, &lane.trace.e_theta, &lane.trace.d_upd,
                    &lane.trace.loss})
      v->reserve(horizon + 1);
    lane.trace.m_direct.reserve(horizon + 1);
  }
  for (std::size_t k = 0; k <= horizon; ++k) {
    const auto ref_actions = probe_actions(reference.memory, probes);
    std::optional<Vector> ref_dir;
    if (k < horizon) ref_dir = update_direction(reference, *future[k].payload, cfg.ridge);
    for (auto& lane : lanes) {
      const double ew = param_error(lane.state.w, reference.w);
      const double ez = memory_operator_error(lane.state.memory, ref_actions, probes);
      lane.trace.e_w.push_back(ew);
      lane.trace.e_z.push_back(ez);
      lane.trace.e_theta.push_back(state_error(ew, ez, lambda_z));
      lane.trace.m_direct.push_back(direct_memory_mass(lane.state.memory, deletions));
      if (k < horizon) {
        const Vector dir = update_direction(lane.state, *future[k].payload, cfg.ridge);
        lane.trace.d_upd.push_back(direction_error(dir, *ref_dir).value_or(kNaN));
        lane.trace.loss.push_back(step_in_place(lane.state, future[k], cfg).loss);
      } else {
        lane.trace.d_upd.push_back(kNaN);
        lane.trace.loss.push_back(kNaN);
      }
    }
    if (k < horizon) step_in_place(reference, future[k], cfg);
  }
}

MethodResult summarize(const Lane& lane, const ExperimentConfig& cfg, double rho,
                       bool contractive) {
  MethodResult m;
  m.method = lane.id;
  const MetricTrace& tr = lane.trace;
  m.trace = tr;
  m.cost = lane.cost;
  m.initial_param_err = tr.e_w.front();
  m.initial_mem_err = tr.e_z.front();
  m.initial_state_err = tr.e_theta.front();
  m.final_state_err = tr.e_theta.back();
  m.future_state_auc = auc(tr.e_theta);
  m.future_param_auc = auc(tr.e_w);
  m.upd_dir_auc = auc(tr.d_upd);
  m.direct_mass_at_del = tr.m_direct.front();
  m.clearance_time = direct_clearance_time(tr.m_direct);
  m.exact_recovery = m.future_state_auc <= kExactRecoveryThreshold;

  double loss_sum = 0.0;
  std::size_t loss_n = 0;
  for (double l : tr.loss)
    if (!std::isnan(l)) {
      loss_sum += l;
      ++loss_n;
    }
  m.avg_future_loss = loss_n ? loss_sum / static_cast<double>(loss_n) : kNaN;

  const std::size_t horizon = tr.size() - 1;
  const auto clearance =
      cfg.phase_policy == PhasePolicy::Clearance ? m.clearance_time : std::optional<std::size_t>{};
  m.decay = fit_phases(tr.e_theta, phase_bounds(clearance, cfg.tau, horizon));

  if (contractive) {
    BoundInputs in{m.initial_state_err, rho, std::vector<double>(horizon, 0.0)};
    m.alpha_bound = deviation_bound(in, horizon);
    m.sigma_cert = calibrate_sigma(m.alpha_bound, cfg.certificate.epsilon, cfg.certificate.delta);
  } else {
    m.alpha_bound = kNaN;
    m.sigma_cert = kNaN;
  }
  return m;
}

double median_of(std::vector<double> v) {
  if (v.empty()) return kNaN;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return kNaN;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

}  // namespace

std::string_view to_string(ExperimentKind k) noexcept {
  return k == ExperimentKind::FiniteMemoryDecay ? "exp1" : "exp2";
}

std::string_view to_string(PhasePolicy p) noexcept {
  return p == PhasePolicy::Clearance ? "clearance" : "nominal";
}

PhasePolicy parse_phase_policy(std::string_view s) {
  if (s == "clearance") return PhasePolicy::Clearance;
  if (s == "nominal") return PhasePolicy::Nominal;
  throw Error(Errc::InvalidConfig, "unknown phase policy '" + std::string(s) + "'");
}

ExperimentConfig default_experiment1_config() {
  ExperimentConfig cfg;
  cfg.stream.length = 700;
  cfg.stream.deletion_time = 300;
  cfg.stream.horizon = 250;
  cfg.interventions = {"noop"};
  return cfg;
}

ExperimentConfig default_experiment2_config() {
  ExperimentConfig cfg;
  cfg.stream.length = 5000;
  cfg.stream.deletion_time = 500;
  cfg.stream.horizon = 4500;
  return cfg;
}

StepConfig effective_step_config(const ExperimentConfig& cfg) {
  StepConfig s = cfg.optimizer;
  if (!cfg.eta_explicit) s.eta = cfg.stream.regime == Regime::Logistic ? 0.5 : 0.1;
  s.ridge = cfg.stream.regime == Regime::Logistic ? cfg.stream.ridge : 0.0;
  return s;
}

void validate(const ExperimentConfig& cfg) {
  validate_generator(cfg.stream);
  validate_deletion_window(cfg.stream);
  validate(effective_step_config(cfg));
  if (cfg.tau < 1) throw Error(Errc::InvalidConfig, "tau must be >= 1");
  if (cfg.probe_count < 1) throw Error(Errc::InvalidConfig, "probe_count must be >= 1");
  if (!(cfg.lambda_z >= 0.0)) throw Error(Errc::InvalidConfig, "lambda_z must be >= 0");
  if (!(cfg.certificate.epsilon > 0.0) ||
      !(cfg.certificate.delta > 0.0 && cfg.certificate.delta < 1.0))
    throw Error(Errc::InvalidConfig, "certificate needs epsilon > 0 and 0 < delta < 1");
}

const MethodResult* RunResult::find(std::string_view method) const {
  for (const auto& m : methods)
    if (m.method == method) return &m;
  return nullptr;
}

RunResult run_experiment(ExperimentKind kind, const ExperimentConfig& cfg) {
  validate(cfg);
  const StepConfig step_cfg = effective_step_config(cfg);
  const EventStream stream = generate_stream(cfg.stream, cfg.seed);
  const std::uint64_t t_del = cfg.stream.deletion_time;
  const auto prefix = stream.slice(1, t_del);
  const OptimizerState theta0 = initial_state(stream.dimension, cfg.tau, step_cfg);

  std::optional<Vector> grad_state;
  if (cfg.stream.deletion_mode == DeletionMode::HighGradient)
    grad_state = replay(theta0, prefix, step_cfg).w;
  const DeletionSet deletions = select_deletion_set(stream, t_del, cfg.stream.deletion_mode,
                                                    cfg.stream.deletion_size, grad_state);

  std::vector<InterventionKind> kinds;
  if (kind == ExperimentKind::FiniteMemoryDecay) kinds = {{InterventionType::NoOp, 0}};
  else kinds = resolve_methods(cfg);

  std::vector<std::size_t> windows;
  for (const auto& k : kinds)
    if (k.type == InterventionType::WindowReplay) windows.push_back(k.window);
  InterventionContext ctx = build_context(theta0, prefix, deletions, step_cfg, windows);
  ctx.window_restart = cfg.window_restart;

  const OptimizerState counterfactual = apply({InterventionType::OracleReplay, 0}, ctx).state;

  std::vector<Lane> lanes;
  for (const auto& k : kinds) {
    IntervenedState is = apply(k, ctx);
    lanes.push_back(Lane{intervention_id(k, cfg.tau), std::move(is.state), is.cost, {}});
  }

  std::vector<Event> future;
  for (const auto& e : stream.slice(t_del + 1, t_del + cfg.stream.horizon))
    if (e.is_insert() && !deletions.contains(e.index)) future.push_back(e);
  const ProbeSet probes =
      make_probes(stream.dimension, cfg.probe_count, mix_seed(cfg.seed, kProbeSalt));

  propagate(lanes, counterfactual, future, deletions, probes, step_cfg, cfg.lambda_z);

  ContractionOptions copts;
  copts.trials = cfg.certificate.contraction_trials;
  copts.seed = mix_seed(cfg.seed, kContractionSalt);
  copts.lambda_z = cfg.lambda_z;
  copts.probe_count = cfg.probe_count;
  copts.radius = cfg.certificate.contraction_radius;
  const ContractionEstimate rho = empirical_contraction(counterfactual, future, step_cfg, copts);

  RunResult out;
  out.kind = kind;
  out.seed = cfg.seed;
  out.regime = cfg.stream.regime;
  out.kappa = cfg.stream.kappa;
  out.tau = cfg.tau;
  out.deletion_mode = cfg.stream.deletion_mode;
  out.deletion_size = cfg.stream.deletion_size;
  out.t_del = t_del;
  out.horizon = future.size();
  out.deleted = deletions.indices;
  out.future_hash = hash_events(future);
  out.probe_hash = hash_probes(probes);
  {
    Fnv1a h;
    h.update(serialize(counterfactual, step_cfg));
    out.counterfactual_hash = h.digest();
  }
  out.rho_used = rho.rho_hat;
  if (!rho.contractive())
    out.violated_assumptions.push_back("contractive-updates: rho_hat=" +
                                       std::to_string(rho.rho_hat));

  for (const auto& lane : lanes)
    out.methods.push_back(summarize(lane, cfg, rho.rho_hat, rho.contractive()));

  const MethodResult* noop = out.find("noop");
  for (auto& m : out.methods) {
    m.auc_ratio_vs_noop =
        (noop && noop->future_state_auc > 0.0) ? m.future_state_auc / noop->future_state_auc : kNaN;
  }
  return out;
}

RunResult run_experiment1(const ExperimentConfig& cfg) {
  return run_experiment(ExperimentKind::FiniteMemoryDecay, cfg);
}

RunResult run_experiment2(const ExperimentConfig& cfg) {
  return run_experiment(ExperimentKind::StateAware, cfg);
}

void apply_axis(ExperimentConfig& cfg, const std::string& name, const std::string& value) {
  auto& s = cfg.stream;
  auto& o = cfg.optimizer;
  if (name == "regime") s.regime = parse_regime(value);
  else if (name == "dimension") s.dimension = static_cast<Eigen::Index>(to_uint(name, value));
  else if (name == "length") s.length = to_uint(name, value);
  else if (name == "kappa") s.kappa = to_double(name, value);
  else if (name == "mu") s.mu = to_double(name, value);
  else if (name == "drift_amplitude") s.drift_amplitude = to_double(name, value);
  else if (name == "drift_period") s.drift_period = to_double(name, value);
  else if (name == "drift_noise") s.drift_noise = to_double(name, value);
  else if (name == "curvature_drift") s.curvature_drift = to_double(name, value);
  else if (name == "curvature_period") s.curvature_period = to_double(name, value);
  else if (name == "ridge") s.ridge = to_double(name, value);
  else if (name == "label_drift") s.label_drift = to_double(name, value);
  else if (name == "label_period") s.label_period = to_double(name, value);
  else if (name == "beta0_scale") s.beta0_scale = to_double(name, value);
  else if (name == "deletion_mode") s.deletion_mode = parse_deletion_mode(value);
  else if (name == "deletion_size") s.deletion_size = to_uint(name, value);
  else if (name == "deletion_time") s.deletion_time = to_uint(name, value);
  else if (name == "horizon") s.horizon = to_uint(name, value);
  else if (name == "tau") cfg.tau = to_uint(name, value);
  else if (name == "eta") {
    o.eta = to_double(name, value);
    cfg.eta_explicit = true;
  }
  else if (name == "curvature_eps") o.curvature_eps = to_double(name, value);
  else if (name == "gamma_mode") o.gamma_mode = parse_gamma_mode(value);
  else if (name == "gamma0") o.gamma0 = to_double(name, value);
  else if (name == "lambda_z") cfg.lambda_z = to_double(name, value);
  else if (name == "probe_count") cfg.probe_count = to_uint(name, value);
  else if (name == "phase_policy") cfg.phase_policy = parse_phase_policy(value);
  else if (name == "window_restart") cfg.window_restart = parse_window_restart(value);
  else if (name == "epsilon") cfg.certificate.epsilon = to_double(name, value);
  else if (name == "delta") cfg.certificate.delta = to_double(name, value);
  else if (name == "contraction_trials") cfg.certificate.contraction_trials = to_uint(name, value);
  else if (name == "contraction_radius") cfg.certificate.contraction_radius = to_double(name, value);
  else if (name == "seed") cfg.seed = to_uint(name, value);
  else throw Error(Errc::InvalidAxis, "unknown configuration field '" + name + "'");
}

std::uint64_t grid_point_seed(std::uint64_t base_seed,
                              const std::vector<std::pair<std::string, std::string>>& point) {
  Fnv1a h;
  h.update_value(base_seed);
  for (const auto& [k, v] : point) {
    h.update(k);
    h.update("=");
    h.update(v);
    h.update(";");
  }
  return splitmix64(h.digest());
}

std::vector<RunResult> run_grid(const ExperimentConfig& base, const GridAxes& axes,
                                std::size_t workers, ExperimentKind kind) {
  std::size_t points = 1;
  for (const auto& [name, values] : axes) {
    if (values.empty()) throw Error(Errc::InvalidAxis, "axis '" + name + "' has no values");
    ExperimentConfig probe = base;
    apply_axis(probe, name, values.front());
    points *= values.size();
  }

  std::vector<ExperimentConfig> configs;
  std::vector<std::vector<std::pair<std::string, std::string>>> assignments;
  configs.reserve(points);
  for (std::size_t p = 0; p < points; ++p) {
    ExperimentConfig cfg = base;
    std::vector<std::pair<std::string, std::string>> point;
    std::size_t rem = p;
    // Last axis varies fastest.
    std::vector<std::size_t> digits(axes.size());
    for (std::size_t a = axes.size(); a-- > 0;) {
      digits[a] = rem % axes[a].second.size();
      rem /= axes[a].second.size();
    }
    for (std::size_t a = 0; a < axes.size(); ++a) {
      const auto& value = axes[a].second[digits[a]];
      apply_axis(cfg, axes[a].first, value);
      point.emplace_back(axes[a].first, value);
    }
    cfg.seed = grid_point_seed(base.seed, point);
    configs.push_back(std::move(cfg));
    assignments.push_back(std::move(point));
  }

  std::vector<RunResult> results(points);
  std::vector<std::exception_ptr> errors(points);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < points; i = next++) {
      try {
        results[i] = run_experiment(kind, configs[i]);
        results[i].grid_point = assignments[i];
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t n_threads = std::max<std::size_t>(1, std::min(workers, points));
  if (n_threads == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(work);
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return results;
}

const std::vector<std::string>& summary_columns() {
  static const std::vector<std::string> cols = {
      "initial_param_err", "initial_mem_err", "initial_state_err", "final_state_err",
      "future_state_auc",  "future_param_auc", "upd_dir_auc",      "direct_mass_at_del",
      "avg_future_loss",   "auc_ratio_vs_noop", "replayed_events", "extra_grad_evals",
  };
  return cols;
}

double column_value(const MethodResult& m, std::string_view c) {
  if (c == "initial_param_err") return m.initial_param_err;
  if (c == "initial_mem_err") return m.initial_mem_err;
  if (c == "initial_state_err") return m.initial_state_err;
  if (c == "final_state_err") return m.final_state_err;
  if (c == "future_state_auc") return m.future_state_auc;
  if (c == "future_param_auc") return m.future_param_auc;
  if (c == "upd_dir_auc") return m.upd_dir_auc;
  if (c == "direct_mass_at_del") return static_cast<double>(m.direct_mass_at_del);
  if (c == "avg_future_loss") return m.avg_future_loss;
  if (c == "auc_ratio_vs_noop") return m.auc_ratio_vs_noop;
  if (c == "replayed_events") return static_cast<double>(m.cost.replayed_events);
  if (c == "extra_grad_evals") return static_cast<double>(m.cost.extra_grad_evals);
  throw Error(Errc::InvalidAxis, "unknown summary column '" + std::string(c) + "'");
}

std::vector<MethodSummary> aggregate(const std::vector<RunResult>& results) {
  if (results.empty()) throw Error(Errc::EmptyResults, "nothing to aggregate");

  std::vector<std::string> order;
  for (const auto& r : results)
    for (const auto& m : r.methods)
      if (std::find(order.begin(), order.end(), m.method) == order.end()) order.push_back(m.method);

  // Best non-oracle credit per run, split evenly across ties.
  std::map<std::string, double> best_credit;
  for (const auto& r : results) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& m : r.methods)
      if (m.method != "oracle") best = std::min(best, m.future_state_auc);
    std::vector<std::string> winners;
    for (const auto& m : r.methods)
      if (m.method != "oracle" && m.future_state_auc == best) winners.push_back(m.method);
    for (const auto& w : winners) best_credit[w] += 1.0 / static_cast<double>(winners.size());
  }

  std::vector<MethodSummary> out;
  for (const auto& name : order) {
    MethodSummary s;
    s.method = name;
    std::map<std::string, std::vector<double>> cols;
    std::vector<double> ratios;
    double better = 0.0, exact = 0.0, replayed = 0.0;
    for (const auto& r : results) {
      const MethodResult* m = r.find(name);
      if (!m) continue;
      ++s.runs;
      for (const auto& c : summary_columns()) {
        const double v = column_value(*m, c);
        if (!std::isnan(v)) cols[c].push_back(v);
      }
      if (!std::isnan(m->auc_ratio_vs_noop)) ratios.push_back(m->auc_ratio_vs_noop);
      if (const MethodResult* noop = r.find("noop"); noop && m->future_state_auc < noop->future_state_auc)
        better += 1.0;
      if (m->exact_recovery) exact += 1.0;
      replayed += static_cast<double>(m->cost.replayed_events);
    }
    const double n = static_cast<double>(s.runs);
    for (const auto& c : summary_columns()) {
      s.median[c] = median_of(cols[c]);
      s.mean[c] = mean_of(cols[c]);
    }
    s.median_ratio_vs_noop = median_of(ratios);
    s.mean_ratio_vs_noop = mean_of(ratios);
    s.share_better_than_noop = better / n;
    s.exact_recovery_rate = exact / n;
    s.best_non_oracle_share = best_credit.count(name) ? best_credit[name] / static_cast<double>(results.size()) : 0.0;
    s.mean_replayed_events = replayed / n;
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace olu
