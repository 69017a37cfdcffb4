#include <vector>

#include <benchmark/benchmark.h>

#include "qmar/distributions.hpp"
#include "qmar/models.hpp"
#include "qmar/montecarlo.hpp"
#include "qmar/simulate.hpp"
#include "qmar/srar.hpp"

namespace {

std::vector<double> series(std::size_t T) {
  const qmar::MarDgp dgp{qmar::MarSpec{{}, {0.8}, 0.0}, qmar::DistributionSpec::student_t(3.0)};
  return qmar::simulate_dgp(dgp, T, 200, 1);
}

void BM_FitQarMedian(benchmark::State& state) {
  const auto y = series(static_cast<std::size_t>(state.range(0)));
  const qmar::ModelSpec model{qmar::Direction::causal, static_cast<std::size_t>(state.range(1)), false};
  for (auto _ : state) benchmark::DoNotOptimize(qmar::fit_qar(y, model, 0.5).srar);
}
BENCHMARK(BM_FitQarMedian)->Args({200, 1})->Args({600, 1})->Args({600, 3})->Args({4000, 1});

void BM_SrarCurveDefaultGrid(benchmark::State& state) {
  const auto y = series(static_cast<std::size_t>(state.range(0)));
  const auto grid = qmar::default_grid();
  const qmar::ModelSpec model{qmar::Direction::noncausal, 1, false};
  for (auto _ : state) benchmark::DoNotOptimize(qmar::srar_curve(y, model, grid).values.back());
}
BENCHMARK(BM_SrarCurveDefaultGrid)->Arg(200)->Arg(600);

void BM_SelectionReplicate(benchmark::State& state) {
  const auto y = series(200);
  const auto grid = qmar::default_grid();
  for (auto _ : state) benchmark::DoNotOptimize(qmar::select_model(y, 1, grid, {}).unrestricted.aggregate_winner);
}
BENCHMARK(BM_SelectionReplicate);

void BM_SimulateMatrix(benchmark::State& state) {
  qmar::SimConfig cfg;
  cfg.total_length = static_cast<std::size_t>(state.range(0)) + 400;
  cfg.burn_in = 200;
  cfg.seed = 3;
  cfg.innovation = qmar::DistributionSpec::student_t(3.0);
  const qmar::MarSpec spec{{0.8}, {0.6}, 0.0};
  for (auto _ : state) benchmark::DoNotOptimize(qmar::simulate_mar_matrix(spec, cfg).back());
}
BENCHMARK(BM_SimulateMatrix)->Arg(200)->Arg(4000);

void BM_Quantile(benchmark::State& state, qmar::DistributionSpec spec) {
  const qmar::Distribution law(spec);
  double u = 0.0;
  for (auto _ : state) {
    u += 0.6180339887498949;
    if (u >= 1.0) u -= 1.0;
    benchmark::DoNotOptimize(law.quantile(0.001 + 0.998 * u));
  }
}
BENCHMARK_CAPTURE(BM_Quantile, student_t3, qmar::DistributionSpec::student_t(3.0));
BENCHMARK_CAPTURE(BM_Quantile, skewed_t32, qmar::DistributionSpec::skewed_t(3.0, 2.0, true));
BENCHMARK_CAPTURE(BM_Quantile, gaussian, qmar::DistributionSpec::gaussian());

}  // namespace
BENCHMARK_MAIN();
