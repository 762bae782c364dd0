#include <benchmark/benchmark.h>

#include "tilt/estimator.hpp"
#include "tilt/families.hpp"
#include "tilt/solver.hpp"

namespace {

// Samples per second of the importance-sampling estimator, by family.
template <typename Spec>
void BM_EstimateIs(benchmark::State& state, Spec spec, double a) {
  const auto family = tilt::make_family(spec);
  const tilt::TailEvent ev{a, tilt::Tail::Upper};
  const double theta = tilt::solve_optimal_tilt(*family, ev).theta_star;
  const auto n = static_cast<std::uint64_t>(state.range(0));
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(tilt::estimate_is(*family, theta, ev, n, ++seed, 1));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK_CAPTURE(BM_EstimateIs, normal, tilt::NormalSpec{1.0}, 2.326)->Arg(100000);
BENCHMARK_CAPTURE(BM_EstimateIs, gamma, tilt::GammaSpec{4.0, 10.0}, 100.45)->Arg(100000);
BENCHMARK_CAPTURE(BM_EstimateIs, ncchi2, tilt::NoncentralChiSquareSpec{2.0, 10.0}, 31.44)
    ->Arg(100000);

void BM_AnalyticReStar(benchmark::State& state) {
  const auto family = tilt::make_family(tilt::NoncentralChiSquareSpec{2.0, 1.0});
  const tilt::TailEvent ev{12.85, tilt::Tail::Upper};
  for (auto _ : state) benchmark::DoNotOptimize(tilt::analytic_re_star(*family, 0.33, ev));
}
BENCHMARK(BM_AnalyticReStar);

}  // namespace
