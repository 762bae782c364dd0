#include <benchmark/benchmark.h>

#include "tilt/var_engine.hpp"

namespace {

tilt::LossModel table_model() {
  const int d = 15;
  tilt::JumpDiffusionSpec s;
  s.mu.resize(d);
  s.sigma.resize(d);
  s.delta.resize(d);
  for (int i = 0; i < d; ++i) {
    s.mu(i) = (i + 1) / 100.0;
    s.sigma(i) = 0.1 + (i + 1) / 100.0;
    s.delta(i) = (i + 1) / 100.0;
  }
  s.corr = Eigen::MatrixXd::Constant(d, d, 0.3);
  s.corr.diagonal().setOnes();
  s.jump_corr = s.corr;
  s.eta = Eigen::VectorXd::Zero(d);
  s.jump_intensity = 1.0;
  s.dt = 1.0 / 252.0;
  Eigen::VectorXd b(d);
  b << 0.044, 0.0589891, 0.0720326, 0.0838734, 0.0948957, 0.105325, 0.115304, 0.124929,
      0.134271, 0.143378, 0.152289, 0.161034, 0.169635, 0.178112, 0.186479;
  Eigen::VectorXd lambdas = Eigen::VectorXd::Constant(d, 0.7);
  lambdas(0) = 5.2;
  return tilt::LossModel(
      tilt::QuadraticPortfolio::from_diagonal(b, lambdas, Eigen::VectorXd::Constant(d, 0.46)), s);
}

void BM_LossSample(benchmark::State& state) {
  const auto model = table_model();
  const auto params = model.tilted(5.0);
  tilt::Rng rng = tilt::Rng::stream(1, 0);
  for (auto _ : state) benchmark::DoNotOptimize(model.sample(params, rng));
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_LossSample);

void BM_SolveThetaP(benchmark::State& state) {
  const auto model = table_model();
  for (auto _ : state) {
    benchmark::DoNotOptimize(tilt::solve_theta_p(model, 1.166, {}, 50000, 3).solve.theta_star);
  }
}
BENCHMARK(BM_SolveThetaP)->Unit(benchmark::kMillisecond);

void BM_EstimateVarTail(benchmark::State& state) {
  const auto model = table_model();
  for (auto _ : state) {
    benchmark::DoNotOptimize(tilt::estimate_var_tail(model, 5.0, 1.166, 1000, 100, 7, 1));
  }
  state.SetItemsProcessed(state.iterations() * 100000);
}
BENCHMARK(BM_EstimateVarTail)->Unit(benchmark::kMillisecond);

}  // namespace
