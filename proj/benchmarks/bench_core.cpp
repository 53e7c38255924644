#include "olu/bench.hpp"
#include "olu/metrics.hpp"
#include "olu/olbfgs.hpp"
#include "support.hpp"

#include <benchmark/benchmark.h>

using namespace olu;

static void BM_TwoLoop(benchmark::State& state) {
  const auto d = static_cast<Eigen::Index>(state.range(0));
  const auto tau = static_cast<std::size_t>(state.range(1));
  Rng rng(1);
  const MemoryState m = testing::random_memory(d, tau, tau, rng);
  const Vector q = gaussian_vector(d, rng);
  for (auto _ : state) benchmark::DoNotOptimize(two_loop(m, q));
}
BENCHMARK(BM_TwoLoop)->Args({25, 10})->Args({25, 50})->Args({100, 20});

static void BM_Step(benchmark::State& state) {
  StreamConfig sc = default_experiment2_config().stream;
  sc.length = 2000;
  const EventStream stream = generate_stream(sc, 3);
  const StepConfig cfg = effective_step_config(default_experiment2_config());
  std::size_t i = 0;
  OptimizerState s = initial_state(sc.dimension, 10, cfg);
  for (auto _ : state) {
    step_in_place(s, stream.events[i], cfg);
    if (++i == stream.events.size()) {
      i = 0;
      s = initial_state(sc.dimension, 10, cfg);
    }
  }
}
BENCHMARK(BM_Step);

static void BM_MemoryOperatorError(benchmark::State& state) {
  Rng rng(2);
  const MemoryState a = testing::random_memory(25, 10, 10, rng);
  const MemoryState b = testing::random_memory(25, 10, 10, rng);
  const ProbeSet probes = make_probes(25, 32, 5);
  for (auto _ : state) benchmark::DoNotOptimize(memory_operator_error(a, b, probes));
}
BENCHMARK(BM_MemoryOperatorError);

static void BM_Experiment2(benchmark::State& state) {
  ExperimentConfig cfg = default_experiment2_config();
  cfg.stream.length = 1500;
  cfg.stream.horizon = 1000;
  for (auto _ : state) benchmark::DoNotOptimize(run_experiment2(cfg));
}
BENCHMARK(BM_Experiment2)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
