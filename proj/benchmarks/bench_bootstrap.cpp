#include <benchmark/benchmark.h>

#include "tilt/bootstrap.hpp"

namespace {

const tilt::RegressionProblem& longley() {
  static const tilt::RegressionProblem fit = [] {
    const auto d = tilt::longley_data();
    return tilt::ols_fit(d.X, d.Y);
  }();
  return fit;
}

void BM_OlsLongley(benchmark::State& state) {
  const auto d = tilt::longley_data();
  for (auto _ : state) benchmark::DoNotOptimize(tilt::ols_fit(d.X, d.Y).sigma2);
}
BENCHMARK(BM_OlsLongley);

void BM_SolveBootstrapTilt(benchmark::State& state) {
  for (auto _ : state) {
    benchmark::DoNotOptimize(tilt::solve_bootstrap_tilt({4.571, 16, 7, 0.0}).theta_star);
  }
}
BENCHMARK(BM_SolveBootstrapTilt);

void BM_ResampleTilted(benchmark::State& state) {
  const auto family = state.range(0) == 0 ? tilt::ResampleFamily::Normal
                                          : tilt::ResampleFamily::ChiSquare;
  std::uint64_t seed = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        tilt::resample_tilted(longley(), {4.571, 16, 7, 1.8417}, family, 10000, ++seed, 1));
  }
  state.SetItemsProcessed(state.iterations() * 10000);
}
BENCHMARK(BM_ResampleTilted)->Arg(0)->Arg(1);

void BM_CoverageTrial(benchmark::State& state) {
  std::uint64_t seed = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(tilt::coverage_experiment(longley(), 0.95, 200, 10, ++seed, true, 1));
  }
  state.SetItemsProcessed(state.iterations() * 10);
}
BENCHMARK(BM_CoverageTrial)->Unit(benchmark::kMillisecond);

}  // namespace
