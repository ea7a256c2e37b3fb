#include <benchmark/benchmark.h>

#include "lobfluid/ctmc.hpp"

using namespace lobfluid;

static void BM_Step(benchmark::State& state) {
  ModelParams p;
  p.n_levels = static_cast<std::size_t>(state.range(0));
  p = validate_params(p);
  DiscreteState s = DiscreteState::empty(p.n_levels);
  for (std::size_t k = 0; k < p.n_levels; ++k) s.b[k] = s.s[k] = 50;
  Rng rng(1);
  for (auto _ : state) benchmark::DoNotOptimize(step(s, p, ScalingLevel(100), rng));
}
BENCHMARK(BM_Step)->Arg(1)->Arg(10)->Arg(100);

// Events per second of a full run; the rate table is refreshed incrementally.
static void BM_Simulate(benchmark::State& state) {
  ModelParams p;
  p.n_levels = static_cast<std::size_t>(state.range(0));
  p = validate_params(p);
  const ScalingLevel L(static_cast<std::uint64_t>(state.range(1)));
  std::uint64_t events = 0;
  std::uint64_t seed = 0;
  for (auto _ : state) {
    const auto tr = simulate(p, L, FluidState::zeros(p.n_levels), 2.0, 0.5, ++seed);
    events += tr.n_events;
  }
  state.counters["events/s"] = benchmark::Counter(static_cast<double>(events), benchmark::Counter::kIsRate);
}
BENCHMARK(BM_Simulate)->Args({1, 1000})->Args({10, 1000})->Args({50, 10000})->Unit(benchmark::kMillisecond);

static void BM_SimulateVerified(benchmark::State& state) {
  ModelParams p;
  p.n_levels = 10;
  p = validate_params(p);
  SimulationOptions o;
  o.verify_rate_table = true;
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(simulate(p, ScalingLevel(1000), FluidState::zeros(10), 2.0, 0.5, ++seed, o));
}
BENCHMARK(BM_SimulateVerified)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
