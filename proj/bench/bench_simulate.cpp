#include <benchmark/benchmark.h>
#include <omp.h>

#include "kelly_ou/experiment_harness.hpp"
#include "kelly_ou/structure_analytics.hpp"
#include "kelly_ou/wealth_sim.hpp"

using namespace kelly_ou;

namespace {

MarketParams market_for(int n) {
  if (n == 1) return fig1_market();
  return structured_market({Structure::bidiagonal, n, 0.1}, 0.1, 0.5, 0.0, 1.0);
}

SimulationOptions options(Execution execution) {
  SimulationOptions o;
  o.horizon = 1.0;
  o.n_steps = 100;
  o.n_paths = 2000;
  o.seed = 1;
  o.execution = execution;
  return o;
}

void set_counters(benchmark::State& state, const SimulationOptions& o) {
  state.counters["path_steps/s"] = benchmark::Counter(
      static_cast<double>(o.n_paths) * o.n_steps, benchmark::Counter::kIsIterationInvariantRate);
}

// args: assets
void BM_reference(benchmark::State& state) {
  const MarketParams m = market_for(static_cast<int>(state.range(0)));
  const SimulationOptions o = options(Execution::serial);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        reference::simulate_serial(m, StrategySpec::kelly(), o, WealthScheme::budget_identity));
  }
  set_counters(state, o);
}

// args: assets
void BM_kernel_serial(benchmark::State& state) {
  const MarketParams m = market_for(static_cast<int>(state.range(0)));
  const SimulationOptions o = options(Execution::serial);
  for (auto _ : state) benchmark::DoNotOptimize(simulate(m, StrategySpec::kelly(), o));
  set_counters(state, o);
}

// args: assets, threads
void BM_kernel_parallel(benchmark::State& state) {
  const MarketParams m = market_for(static_cast<int>(state.range(0)));
  const SimulationOptions o = options(Execution::parallel);
  omp_set_num_threads(static_cast<int>(state.range(1)));
  for (auto _ : state) benchmark::DoNotOptimize(simulate(m, StrategySpec::kelly(), o));
  set_counters(state, o);
}

void BM_risk_neutral(benchmark::State& state) {
  const MarketParams m = market_for(static_cast<int>(state.range(0)));
  const SimulationOptions o = options(Execution::parallel);
  for (auto _ : state) benchmark::DoNotOptimize(simulate_risk_neutral(m, o));
  set_counters(state, o);
}

}  // namespace

BENCHMARK(BM_reference)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_kernel_serial)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_kernel_parallel)->ArgsProduct({{1, 4}, {1, 2, 4}})->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_risk_neutral)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
