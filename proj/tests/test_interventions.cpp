#include "olu/error.hpp"
#include "olu/interventions.hpp"
#include "olu/metrics.hpp"
#include "support.hpp"

#include <doctest.h>

using namespace olu;

namespace {

struct Fixture {
  StepConfig cfg;
  EventStream stream;
  OptimizerState theta0;
  std::vector<std::size_t> windows{4, 20, 500};

  explicit Fixture(std::uint64_t seed) : stream(generate_stream(testing::small_stream_config(), seed)) {
    theta0 = initial_state(stream.dimension, 4, cfg);
  }

  InterventionContext context(const DeletionSet& del) const {
    return build_context(theta0, stream.slice(1, 60), del, cfg, windows);
  }
};

std::string snap(const OptimizerState& s, const StepConfig& cfg) { return serialize(s, cfg); }

}  // namespace

TEST_CASE("intervention identifiers round-trip") {
  for (std::size_t tau : {5u, 10u}) {
    for (const auto& k : all_interventions(tau)) CHECK(parse_intervention(intervention_id(k, tau), tau) == k);
    CHECK(all_interventions(tau).size() == 9);
  }
  CHECK(parse_intervention("window_5tau", 10).window == 50);
  CHECK(parse_intervention("window_37", 10).window == 37);
  CHECK(intervention_id({InterventionType::WindowReplay, 37}, 10) == "window_37");
  CHECK_THROWS_AS(parse_intervention("newton", 10), Error);
  CHECK_THROWS_AS(parse_intervention("window_0", 10), Error);
}

TEST_CASE("empty deletion leaves oracle, no-op and pair drop at the actual state") {
  const Fixture f(1);
  const auto ctx = f.context(make_deletion_set({}, 60, DeletionMode::Recent));
  for (auto t : {InterventionType::OracleReplay, InterventionType::NoOp,
                 InterventionType::ContaminatedPairDrop})
    CHECK(snap(apply({t, 0}, ctx).state, f.cfg) == snap(ctx.actual, f.cfg));
}

TEST_CASE("oracle equals a replay of the edited prefix") {
  const Fixture f(2);
  const DeletionSet del = make_deletion_set({5, 17, 33}, 60, DeletionMode::Random);
  const auto ctx = f.context(del);
  const auto edited = edit_history(f.stream.slice(1, 60), del);
  const IntervenedState o = apply({InterventionType::OracleReplay, 0}, ctx);
  CHECK(snap(o.state, f.cfg) == snap(replay(f.theta0, edited, f.cfg), f.cfg));
  CHECK(o.cost.replayed_events == 57);
  CHECK(o.cost.extra_grad_evals == 114);
}

TEST_CASE("context records the actual trajectory") {
  const Fixture f(3);
  const auto ctx = f.context(make_deletion_set({58}, 60, DeletionMode::Recent));
  CHECK(snap(ctx.actual, f.cfg) == snap(replay(f.theta0, f.stream.slice(1, 60), f.cfg), f.cfg));
  CHECK(snap(ctx.windows.at(4).base, f.cfg) ==
        snap(replay(f.theta0, f.stream.slice(1, 56), f.cfg), f.cfg));
  CHECK(ctx.windows.at(4).events.size() == 4);
  CHECK(ctx.windows.at(500).events.size() == 60);
  REQUIRE(ctx.deleted_events.size() == 1);
  CHECK(ctx.deleted_events[0].index == 58);
}

TEST_CASE("window replay recovers deletions inside the window exactly") {
  const Fixture f(4);
  const DeletionSet del = make_deletion_set({57, 59, 60}, 60, DeletionMode::Recent);
  const auto ctx = f.context(del);
  const auto oracle = apply({InterventionType::OracleReplay, 0}, ctx).state;
  for (std::size_t len : {4u, 20u}) {
    const IntervenedState w = apply({InterventionType::WindowReplay, len}, ctx);
    CHECK(snap(w.state, f.cfg) == snap(oracle, f.cfg));
    CHECK(w.cost.replayed_events == len - 3);
  }
}

TEST_CASE("window replay cannot see deletions before its window") {
  const Fixture f(5);
  const DeletionSet del = make_deletion_set({10}, 60, DeletionMode::Old);
  const auto ctx = f.context(del);
  const auto w = apply({InterventionType::WindowReplay, 20}, ctx).state;
  CHECK(snap(w, f.cfg) == snap(ctx.actual, f.cfg));
}

TEST_CASE("fresh restart replays from the initial state") {
  const Fixture f(6);
  const DeletionSet del = make_deletion_set({10, 59}, 60, DeletionMode::Random);
  auto ctx = f.context(del);
  ctx.window_restart = WindowRestart::Fresh;
  const auto edited = edit_history(f.stream.slice(41, 60), del);
  CHECK(snap(apply({InterventionType::WindowReplay, 20}, ctx).state, f.cfg) ==
        snap(replay(f.theta0, edited, f.cfg), f.cfg));
  // A window longer than the prefix is the oracle under both restarts.
  const auto oracle = apply({InterventionType::OracleReplay, 0}, ctx).state;
  CHECK(snap(apply({InterventionType::WindowReplay, 500}, ctx).state, f.cfg) == snap(oracle, f.cfg));
  ctx.window_restart = WindowRestart::Checkpoint;
  CHECK(snap(apply({InterventionType::WindowReplay, 500}, ctx).state, f.cfg) == snap(oracle, f.cfg));
}

TEST_CASE("pair drop removes exactly the contaminated pairs") {
  const Fixture f(7);
  const DeletionSet del = make_deletion_set({57, 59, 60}, 60, DeletionMode::Recent);
  const auto ctx = f.context(del);
  REQUIRE(direct_memory_mass(ctx.actual.memory, del) == 3);
  const auto dropped = apply({InterventionType::ContaminatedPairDrop, 0}, ctx).state;
  CHECK(direct_memory_mass(dropped.memory, del) == 0);
  CHECK(dropped.memory.size() == ctx.actual.memory.size() - 3);
  CHECK(dropped.w == ctx.actual.w);
  // Survivors keep their order.
  REQUIRE(dropped.memory.size() == 1);
  CHECK(dropped.memory[0].sources == std::vector<SampleIndex>{58});
}

TEST_CASE("memory reset and drop-and-refill") {
  const Fixture f(8);
  const auto ctx = f.context(make_deletion_set({59}, 60, DeletionMode::Recent));
  const auto reset = apply({InterventionType::FullMemoryReset, 0}, ctx).state;
  CHECK(reset.memory.empty());
  CHECK(reset.w == ctx.actual.w);
  Rng rng(1);
  for (int i = 0; i < 5; ++i) {
    const Vector q = gaussian_vector(reset.w.size(), rng);
    CHECK((two_loop(reset.memory, q) - f.cfg.gamma0 * q).norm() == 0.0);
  }
  const auto refill = apply({InterventionType::DropAndRefill, 0}, ctx).state;
  CHECK(refill.memory.empty());
  CHECK(refill.w == f.theta0.w);
}

TEST_CASE("no-op and retain fine-tuning keep the actual state") {
  const Fixture f(9);
  const auto ctx = f.context(make_deletion_set({30}, 60, DeletionMode::Random));
  CHECK(snap(apply({InterventionType::NoOp, 0}, ctx).state, f.cfg) == snap(ctx.actual, f.cfg));
  CHECK(snap(apply({InterventionType::RetainFineTune, 0}, ctx).state, f.cfg) == snap(ctx.actual, f.cfg));
}

TEST_CASE("parameter-only correction undoes a pure gradient step") {
  // One quadratic sample from an empty memory; the correction is
  // w1 + eta (H + reg I)^-1 g(w1).
  StepConfig cfg;
  cfg.eta = 0.5;
  const OptimizerState theta0 = initial_state(2, 3, cfg);
  Matrix h(2, 2);
  h << 2, 0, 0, 1;
  Vector a(2);
  a << 1, -1;
  std::vector<Event> prefix{testing::quadratic_event(1, h, a)};
  const auto ctx = build_context(theta0, prefix, make_deletion_set({1}, 1, DeletionMode::Recent),
                                 cfg, std::span<const std::size_t>{});
  const IntervenedState p = apply({InterventionType::ParameterOnly, 0}, ctx);
  const Vector w1 = ctx.actual.w;
  const Vector g = h * (w1 - a);
  const Matrix hr = h + 1e-6 * (h.trace() / 2.0) * Matrix::Identity(2, 2);
  CHECK((p.state.w - (w1 + cfg.eta * hr.ldlt().solve(g))).norm() < 1e-14);
  CHECK(p.cost.extra_grad_evals == 1);
  CHECK(p.state.memory.size() == ctx.actual.memory.size());
  // The correction moves back toward the state that never saw the sample.
  CHECK((p.state.w - theta0.w).norm() < (w1 - theta0.w).norm());
}

TEST_CASE("missing windows are reported") {
  const Fixture f(10);
  const auto ctx = f.context(make_deletion_set({30}, 60, DeletionMode::Random));
  CHECK_THROWS_AS(apply({InterventionType::WindowReplay, 7}, ctx), Error);
}
