#include "olu/interventions.hpp"

#include "olu/error.hpp"

#include <algorithm>
#include <chrono>
#include <charconv>

namespace olu {

namespace {

struct Named {
  InterventionType type;
  std::string_view id;
};

constexpr Named kNames[] = {
    {InterventionType::OracleReplay, "oracle"},
    {InterventionType::NoOp, "noop"},
    {InterventionType::ParameterOnly, "param_only"},
    {InterventionType::RetainFineTune, "retain_ft"},
    {InterventionType::FullMemoryReset, "mem_reset"},
    {InterventionType::ContaminatedPairDrop, "pair_drop"},
    {InterventionType::DropAndRefill, "drop_refill"},
};

const ReplayWindow& find_window(const InterventionContext& ctx, std::size_t length) {
  auto it = ctx.windows.find(length);
  if (it == ctx.windows.end())
    throw Error(Errc::MissingHistory, "no replay buffer of length " + std::to_string(length));
  return it->second;
}

std::vector<Event> deleted_payloads(const InterventionContext& ctx) {
  if (!ctx.deleted_events.empty() || ctx.deletions.empty()) return ctx.deleted_events;
  if (!ctx.full_prefix)
    throw Error(Errc::MissingHistory, "parameter-only correction needs the deleted payloads");
  std::vector<Event> out;
  for (const auto& e : *ctx.full_prefix)
    if (e.is_insert() && ctx.deletions.contains(e.index)) out.push_back(e);
  return out;
}

// Reverses the first-order influence of the deleted samples with one damped
// Newton step on their mean local curvature, scaled by the online step size.
Vector parameter_only(const InterventionContext& ctx, std::size_t& grad_evals) {
  const Vector& w = ctx.actual.w;
  const auto deleted = deleted_payloads(ctx);
  if (deleted.empty()) return w;
  const Eigen::Index d = w.size();
  Vector g = Vector::Zero(d);
  Matrix h = Matrix::Zero(d, d);
  for (const auto& e : deleted) {
    g += loss_and_grad(*e.payload, w, ctx.step_cfg.ridge).grad;
    h += loss_hessian(*e.payload, w, ctx.step_cfg.ridge);
    ++grad_evals;
  }
  h /= static_cast<double>(deleted.size());
  const double reg = 1e-6 * h.trace() / static_cast<double>(d);
  h.diagonal().array() += reg;
  return w + ctx.step_cfg.eta * h.ldlt().solve(g);
}

}  // namespace

std::string intervention_id(const InterventionKind& kind, std::size_t tau) {
  if (kind.type == InterventionType::WindowReplay) {
    if (kind.window == tau) return "window_tau";
    if (kind.window == 5 * tau) return "window_5tau";
    return "window_" + std::to_string(kind.window);
  }
  for (const auto& n : kNames)
    if (n.type == kind.type) return std::string(n.id);
  return "unknown";
}

InterventionKind parse_intervention(std::string_view id, std::size_t tau) {
  for (const auto& n : kNames)
    if (n.id == id) return {n.type, 0};
  if (id == "window_tau") return {InterventionType::WindowReplay, tau};
  if (id == "window_5tau") return {InterventionType::WindowReplay, 5 * tau};
  if (id.starts_with("window_")) {
    std::size_t w = 0;
    auto digits = id.substr(7);
    auto res = std::from_chars(digits.data(), digits.data() + digits.size(), w);
    if (res.ec == std::errc{} && res.ptr == digits.data() + digits.size() && w > 0)
      return {InterventionType::WindowReplay, w};
  }
  throw Error(Errc::InvalidConfig, "unknown intervention '" + std::string(id) + "'");
}

std::vector<InterventionKind> all_interventions(std::size_t tau) {
  return {
      {InterventionType::OracleReplay, 0},
      {InterventionType::NoOp, 0},
      {InterventionType::ParameterOnly, 0},
      {InterventionType::RetainFineTune, 0},
      {InterventionType::FullMemoryReset, 0},
      {InterventionType::ContaminatedPairDrop, 0},
      {InterventionType::WindowReplay, tau},
      {InterventionType::WindowReplay, 5 * tau},
      {InterventionType::DropAndRefill, 0},
  };
}

std::string_view to_string(WindowRestart r) noexcept {
  return r == WindowRestart::Checkpoint ? "checkpoint" : "fresh";
}

WindowRestart parse_window_restart(std::string_view s) {
  if (s == "checkpoint") return WindowRestart::Checkpoint;
  if (s == "fresh") return WindowRestart::Fresh;
  throw Error(Errc::InvalidConfig, "unknown window restart '" + std::string(s) + "'");
}

InterventionContext build_context(const OptimizerState& theta0, std::span<const Event> prefix,
                                  const DeletionSet& deletions, const StepConfig& cfg,
                                  std::span<const std::size_t> window_lengths,
                                  bool keep_full_prefix) {
  InterventionContext ctx;
  ctx.deletions = deletions;
  ctx.step_cfg = cfg;
  ctx.theta0 = theta0;
  if (keep_full_prefix) ctx.full_prefix.emplace(prefix.begin(), prefix.end());

  // Window starts, as the number of prefix events consumed before the window.
  std::map<std::size_t, std::vector<std::size_t>> starts;
  for (std::size_t len : window_lengths) {
    if (len == 0) throw Error(Errc::InvalidConfig, "replay window must be positive");
    const std::size_t begin = len >= prefix.size() ? 0 : prefix.size() - len;
    starts[begin].push_back(len);
    ctx.windows[len].events.assign(prefix.begin() + static_cast<std::ptrdiff_t>(begin), prefix.end());
  }

  OptimizerState state = theta0;
  for (std::size_t i = 0; i <= prefix.size(); ++i) {
    if (auto it = starts.find(i); it != starts.end())
      for (std::size_t len : it->second) ctx.windows[len].base = state;
    if (i == prefix.size()) break;
    const Event& e = prefix[i];
    if (!e.is_insert()) continue;
    if (deletions.contains(e.index)) ctx.deleted_events.push_back(e);
    step_in_place(state, e, cfg);
  }
  ctx.actual = std::move(state);
  return ctx;
}

IntervenedState apply(const InterventionKind& kind, const InterventionContext& ctx) {
  const auto t0 = std::chrono::steady_clock::now();
  IntervenedState out;
  out.future_map = FutureMap::Counterfactual;

  switch (kind.type) {
    case InterventionType::OracleReplay: {
      if (!ctx.full_prefix) throw Error(Errc::MissingHistory, "oracle replay needs the full prefix");
      const auto edited = edit_history(*ctx.full_prefix, ctx.deletions);
      out.state = replay(ctx.theta0, edited, ctx.step_cfg);
      out.cost.replayed_events = edited.size();
      out.cost.extra_grad_evals = 2 * edited.size();
      break;
    }
    case InterventionType::NoOp:
    case InterventionType::RetainFineTune:
      out.state = ctx.actual;
      break;
    case InterventionType::ParameterOnly:
      out.state = ctx.actual;
      out.state.w = parameter_only(ctx, out.cost.extra_grad_evals);
      break;
    case InterventionType::FullMemoryReset:
      out.state = ctx.actual;
      out.state.memory.clear();
      break;
    case InterventionType::ContaminatedPairDrop:
      out.state = ctx.actual;
      out.state.memory.erase_if([&](const CurvaturePair& p) {
        return std::any_of(p.sources.begin(), p.sources.end(),
                           [&](SampleIndex s) { return ctx.deletions.contains(s); });
      });
      break;
    case InterventionType::WindowReplay: {
      const ReplayWindow& win = find_window(ctx, kind.window);
      const auto edited = edit_history(win.events, ctx.deletions);
      const OptimizerState& base =
          ctx.window_restart == WindowRestart::Checkpoint ? win.base : ctx.theta0;
      out.state = replay(base, edited, ctx.step_cfg);
      out.cost.replayed_events = edited.size();
      out.cost.extra_grad_evals = 2 * edited.size();
      break;
    }
    case InterventionType::DropAndRefill:
      out.state = ctx.actual;
      out.state.w = ctx.theta0.w;
      out.state.memory.clear();
      break;
  }

  out.cost.wall_clock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

}  // namespace olu
