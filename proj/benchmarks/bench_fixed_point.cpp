#include <benchmark/benchmark.h>

#include "lobfluid/fixed_point.hpp"

using namespace lobfluid;

namespace {

ModelParams params(std::int64_t n) {
  ModelParams p{static_cast<std::size_t>(n), 1.3, 0.9, 0.8, 0.4, 2.0, std::nullopt};
  return validate_params(p);
}

} // namespace

static void BM_Shooting(benchmark::State& state) {
  const auto p = params(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(solve_shooting(p));
}
BENCHMARK(BM_Shooting)->Arg(1)->Arg(10)->Arg(50);

static void BM_Recursive(benchmark::State& state) {
  const auto p = params(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(solve_recursive(p));
}
BENCHMARK(BM_Recursive)->Arg(1)->Arg(10)->Arg(50);

static void BM_Relaxation(benchmark::State& state) {
  const auto p = params(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(solve_relaxation(p, FluidState::zeros(p.n_levels)));
}
BENCHMARK(BM_Relaxation)->Arg(1)->Arg(10)->Unit(benchmark::kMicrosecond);

static void BM_SlopeBound(benchmark::State& state) {
  const auto p = params(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(check_slope_bound(p, 2000));
}
BENCHMARK(BM_SlopeBound)->Arg(5)->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();
