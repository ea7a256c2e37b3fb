#include <benchmark/benchmark.h>

#include "lobfluid/fluid_ode.hpp"

using namespace lobfluid;

static void BM_Rhs(benchmark::State& state) {
  ModelParams p;
  p.n_levels = static_cast<std::size_t>(state.range(0));
  p = validate_params(p);
  FluidState s = FluidState::zeros(p.n_levels);
  for (std::size_t k = 0; k < p.n_levels; ++k) {
    s.x[k] = 1.0 / static_cast<double>(k + 1);
    s.y[k] = static_cast<double>(k) / static_cast<double>(p.n_levels);
  }
  for (auto _ : state) benchmark::DoNotOptimize(rhs(s, p));
}
BENCHMARK(BM_Rhs)->Arg(2)->Arg(10)->Arg(100);

static void BM_Integrate(benchmark::State& state) {
  ModelParams p;
  p.n_levels = static_cast<std::size_t>(state.range(0));
  p = validate_params(p);
  std::size_t steps = 0;
  for (auto _ : state) {
    const auto sol = integrate(FluidState::zeros(p.n_levels), p, 50.0);
    steps += sol.accepted_steps;
  }
  state.counters["steps"] = benchmark::Counter(static_cast<double>(steps), benchmark::Counter::kAvgIterations);
}
BENCHMARK(BM_Integrate)->Arg(1)->Arg(10)->Arg(100)->Unit(benchmark::kMicrosecond);

static void BM_IntegrateToRest(benchmark::State& state) {
  ModelParams p;
  p.n_levels = static_cast<std::size_t>(state.range(0));
  p = validate_params(p);
  for (auto _ : state) benchmark::DoNotOptimize(integrate_to_rest(FluidState::zeros(p.n_levels), p, 1e5, 1e-12));
}
BENCHMARK(BM_IntegrateToRest)->Arg(2)->Arg(10)->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();
