#include <benchmark/benchmark.h>

#include "tilt/families.hpp"
#include "tilt/solver.hpp"

namespace {

void BM_OptimalTiltExponential(benchmark::State& state) {
  const auto family = tilt::make_family(tilt::ExponentialSpec{});
  const tilt::TailEvent ev{4.6, tilt::Tail::Upper};
  for (auto _ : state) benchmark::DoNotOptimize(tilt::solve_optimal_tilt(*family, ev).theta_star);
}
BENCHMARK(BM_OptimalTiltExponential);

void BM_OptimalTiltNoncentral(benchmark::State& state) {
  const auto family = tilt::make_family(tilt::NoncentralChiSquareSpec{5.0, 5.0});
  const tilt::TailEvent ev{41.73, tilt::Tail::Upper};
  for (auto _ : state) benchmark::DoNotOptimize(tilt::solve_optimal_tilt(*family, ev).theta_star);
}
BENCHMARK(BM_OptimalTiltNoncentral);

void BM_OptimalTiltCompoundPoisson(benchmark::State& state) {
  const auto family = tilt::make_compound_poisson({1.0, 1.0, 0.0, 1.0, 0.0});
  const tilt::TailEvent ev{2.5, tilt::Tail::Upper};
  for (auto _ : state) benchmark::DoNotOptimize(tilt::solve_optimal_tilt(*family, ev).theta_star);
}
BENCHMARK(BM_OptimalTiltCompoundPoisson);

}  // namespace
