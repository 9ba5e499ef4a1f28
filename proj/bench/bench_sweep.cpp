// Serial reference sweep against the OpenMP sweep on the same grid.

#include <benchmark/benchmark.h>

#include "pulsir/sweep.hpp"

namespace {

pulsir::ModelParams base() {
  pulsir::ModelParams m;
  m.A = 1.0;
  m.beta0 = 0.9;
  m.sigma = 0.2;
  m.g = 0.5;
  return m;
}

pulsir::SweepGrid grid(std::size_t n) {
  pulsir::SweepGrid g;
  g.T_values = pulsir::linspace(0.5, 8.0, n);
  g.p_values = pulsir::linspace(0.02, 0.98, n);
  return g;
}

void BM_SweepSerial(benchmark::State& state) {
  const auto g = grid(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(pulsir::sweep_bifurcation_plane_serial(base(), g));
  state.SetItemsProcessed(state.iterations() * state.range(0) * state.range(0));
}

void BM_SweepParallel(benchmark::State& state) {
  const auto g = grid(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(pulsir::sweep_bifurcation_plane(base(), g));
  state.SetItemsProcessed(state.iterations() * state.range(0) * state.range(0));
}

}  // namespace

BENCHMARK(BM_SweepSerial)->Arg(10)->Arg(20)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SweepParallel)->Arg(10)->Arg(20)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
