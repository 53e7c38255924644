#include "olu/error.hpp"
#include "olu/olbfgs.hpp"
#include "support.hpp"

#include <doctest.h>

using namespace olu;

TEST_CASE("two_loop with empty memory is the scaled identity") {
  MemoryState m(3);
  Vector q(3);
  q << 1, 2, 3;
  CHECK(two_loop(m, q) == q);
  MemoryState fixed(3, Scaling{GammaMode::Fixed, 2.5});
  CHECK((two_loop(fixed, q) - 2.5 * q).norm() == 0.0);
}

TEST_CASE("two_loop matches the explicit one-pair BFGS update") {
  MemoryState m(2);
  m.push(CurvaturePair::make(Vector::Unit(2, 0), Vector::Unit(2, 0), {1}, 1));
  const Vector q = Vector::Ones(2);
  const Vector s = Vector::Unit(2, 0), y = s;
  const double rho = 1.0 / s.dot(y);
  const Matrix h = (Matrix::Identity(2, 2) - rho * s * y.transpose()) *
                       (Matrix::Identity(2, 2) - rho * y * s.transpose()) +
                   rho * s * s.transpose();
  CHECK((two_loop(m, q) - h * q).norm() < 1e-15);
}

TEST_CASE("two_loop matches the dense oracle on random memories") {
  Rng rng(17);
  double worst = 0.0;
  for (int trial = 0; trial < 40; ++trial) {
    const Eigen::Index d = 2 + trial % 5;
    const std::size_t tau = 1 + trial % 5;
    const Scaling sc = trial % 3 == 0 ? Scaling{GammaMode::Fixed, 0.7} : Scaling{};
    const MemoryState m = testing::random_memory(d, tau, tau + trial % 3, rng, sc);
    const Matrix h = testing::dense_inverse_hessian(m);
    for (int p = 0; p < 20; ++p) {
      const Vector q = gaussian_vector(d, rng);
      worst = std::max(worst, (two_loop(m, q) - h * q).cwiseAbs().maxCoeff() /
                                  std::max(1.0, (h * q).cwiseAbs().maxCoeff()));
    }
  }
  CHECK(worst < 1e-10);
}

TEST_CASE("two_loop action is positive definite for curvature-satisfying pairs") {
  Rng rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    const MemoryState m = testing::random_memory(5, 4, 4, rng);
    for (int p = 0; p < 10; ++p) {
      const Vector q = gaussian_vector(5, rng);
      CHECK(q.dot(two_loop(m, q)) > 0.0);
    }
  }
}

TEST_CASE("two_loop rejects mismatched dimensions") {
  Rng rng(1);
  const MemoryState m = testing::random_memory(3, 2, 2, rng);
  CHECK_THROWS_AS(two_loop(m, Vector::Ones(4)), Error);
}

TEST_CASE("one step on a scalar quadratic") {
  StepConfig cfg;
  cfg.eta = 0.5;
  OptimizerState st = initial_state(1, 3, cfg);
  st.w[0] = 1.0;
  const Event e = testing::quadratic_event(1, Matrix::Identity(1, 1), Vector::Zero(1));
  const StepInfo info = step_in_place(st, e, cfg);
  CHECK(info.pair_accepted);
  CHECK(info.loss == 0.5);
  CHECK(st.w[0] == 0.5);
  REQUIRE(st.memory.size() == 1);
  CHECK(st.memory[0].s[0] == -0.5);
  CHECK(st.memory[0].y[0] == -0.5);
  CHECK(st.memory[0].created_at == 1);
  CHECK(st.memory[0].sources == std::vector<SampleIndex>{1});
  CHECK(st.step == 1);
}

TEST_CASE("step at the minimizer stores no pair") {
  StepConfig cfg;
  Vector a(2);
  a << 0.3, -0.2;
  OptimizerState st = initial_state(2, 3, cfg);
  st.w = a;
  step_in_place(st, testing::quadratic_event(1, Matrix::Identity(2, 2) * 2.0, a), cfg);
  CHECK(st.w == a);
  CHECK(st.memory.empty());
}

TEST_CASE("memory keeps the newest tau pairs") {
  StepConfig cfg;
  const std::size_t tau = 3;
  OptimizerState st = initial_state(2, tau, cfg);
  Rng rng(5);
  for (std::uint64_t t = 1; t <= tau + 4; ++t)
    step_in_place(st, testing::quadratic_event(t, Matrix::Identity(2, 2), gaussian_vector(2, rng)),
                  cfg);
  REQUIRE(st.memory.size() == tau);
  for (std::size_t i = 0; i < tau; ++i) CHECK(st.memory[i].created_at == tau + 4 - (tau - 1) + i);
  for (std::size_t i = 0; i < tau; ++i) CHECK(st.memory[i].created_at != 1);
}

TEST_CASE("step rejects deletion events") {
  StepConfig cfg;
  OptimizerState st = initial_state(2, 2, cfg);
  CHECK_THROWS_AS(step_in_place(st, Event::remove(1, 1), cfg), Error);
}

TEST_CASE("replay folds and skips deletions") {
  StepConfig cfg;
  StreamConfig c = testing::small_stream_config();
  const EventStream s = generate_stream(c, 2);
  const OptimizerState theta0 = initial_state(s.dimension, 4, cfg);

  const OptimizerState empty = replay(theta0, {}, cfg);
  CHECK(empty.w == theta0.w);
  CHECK(empty.step == 0);

  const auto all = s.slice(1, 80);
  const OptimizerState whole = replay(theta0, all, cfg);
  const OptimizerState split = replay(replay(theta0, s.slice(1, 30), cfg), s.slice(31, 80), cfg);
  CHECK(serialize(whole, cfg) == serialize(split, cfg));
  CHECK(serialize(whole, cfg) == serialize(replay(theta0, all, cfg), cfg));

  std::vector<Event> with_delete(all.begin(), all.end());
  with_delete.insert(with_delete.begin() + 5, Event::remove(5, 2));
  CHECK(serialize(replay(theta0, with_delete, cfg), cfg) == serialize(whole, cfg));
}

TEST_CASE("300-event replay is bit-identical across runs") {
  StepConfig cfg;
  StreamConfig c;
  c.length = 300;
  c.deletion_time = 100;
  c.horizon = 100;
  const EventStream s = generate_stream(c, 12);
  const OptimizerState theta0 = initial_state(s.dimension, 10, cfg);
  CHECK(serialize(replay(theta0, s.events, cfg), cfg) == serialize(replay(theta0, s.events, cfg), cfg));
}

TEST_CASE("snapshots round-trip bit-exactly") {
  StepConfig cfg;
  cfg.gamma_mode = GammaMode::Fixed;
  cfg.gamma0 = 0.3;
  const EventStream s = generate_stream(testing::small_stream_config(), 3);
  const OptimizerState st = replay(initial_state(s.dimension, 5, cfg), s.slice(1, 40), cfg);
  const std::string text = serialize(st, cfg);
  const OptimizerState back = deserialize(text);
  CHECK(back.w == st.w);
  CHECK(back.step == st.step);
  REQUIRE(back.memory.size() == st.memory.size());
  CHECK(back.memory.tau() == st.memory.tau());
  CHECK(back.memory.scaling().mode == GammaMode::Fixed);
  for (std::size_t i = 0; i < st.memory.size(); ++i) {
    CHECK(back.memory[i].s == st.memory[i].s);
    CHECK(back.memory[i].y == st.memory[i].y);
    CHECK(back.memory[i].sources == st.memory[i].sources);
    CHECK(back.memory[i].created_at == st.memory[i].created_at);
  }
  CHECK(serialize(back, cfg) == text);
  CHECK_THROWS_AS(deserialize("garbage"), Error);

  StepConfig other = cfg;
  other.eta = 0.2;
  CHECK(config_hash(other) != config_hash(cfg));
}

TEST_CASE("direct memory mass counts contaminated pairs") {
  StepConfig cfg;
  const EventStream s = generate_stream(testing::small_stream_config(), 4);
  const OptimizerState st = replay(initial_state(s.dimension, 10, cfg), s.slice(1, 60), cfg);
  CHECK(direct_memory_mass(st.memory, make_deletion_set({1, 2}, 60, DeletionMode::Old)) == 0);
  CHECK(direct_memory_mass(st.memory, make_deletion_set({56, 57, 58, 59, 60}, 60,
                                                        DeletionMode::Recent)) == 5);
}

TEST_CASE("step configuration validation") {
  StepConfig cfg;
  cfg.eta = 0.0;
  CHECK_THROWS_AS(validate(cfg), Error);
  cfg = StepConfig{};
  cfg.curvature_eps = -1.0;
  CHECK_THROWS_AS(validate(cfg), Error);
  CHECK_THROWS_AS(initial_state(3, 0, StepConfig{}), Error);
  CHECK(parse_gamma_mode("fixed") == GammaMode::Fixed);
  CHECK_THROWS_AS(parse_gamma_mode("bogus"), Error);
}
