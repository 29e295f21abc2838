#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "oscombine/boundary_sim.hpp"
#include "oscombine/combiners.hpp"
#include "oscombine/order_stats.hpp"
#include "oscombine/rng.hpp"

using namespace oscombine;

namespace {

ScoreMatrix random_matrix(std::size_t n, std::size_t l, std::uint64_t seed) {
  auto g = substream(seed, 0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> data(n * l);
  for (double& v : data) v = u(g);
  return ScoreMatrix(n, l, std::move(data));
}

void BM_CombineAverage(benchmark::State& state) {
  auto m = random_matrix(static_cast<std::size_t>(state.range(0)), 10, 1);
  for (auto _ : state) benchmark::DoNotOptimize(combine(m, Average{}));
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_CombineAverage)->Arg(3)->Arg(7)->Arg(15);

void BM_CombineMax(benchmark::State& state) {
  auto m = random_matrix(static_cast<std::size_t>(state.range(0)), 10, 2);
  for (auto _ : state) benchmark::DoNotOptimize(combine(m, OrderStat{RankSpec::max()}));
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_CombineMax)->Arg(3)->Arg(7)->Arg(15);

void BM_CombineMedian(benchmark::State& state) {
  auto m = random_matrix(static_cast<std::size_t>(state.range(0)), 10, 3);
  for (auto _ : state) benchmark::DoNotOptimize(combine(m, OrderStat{RankSpec::median()}));
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_CombineMedian)->Arg(3)->Arg(7)->Arg(15);

void BM_OsMomentsQuadrature(benchmark::State& state) {
  auto n = static_cast<std::size_t>(state.range(0));
  auto dist = BaseDistribution::gaussian();
  for (auto _ : state)
    benchmark::DoNotOptimize(os_moments_quadrature((n + 1) / 2, n, dist, 1e-9));
}
BENCHMARK(BM_OsMomentsQuadrature)->Arg(3)->Arg(9)->Arg(15);

void BM_OsMomentsMonteCarlo(benchmark::State& state) {
  auto dist = BaseDistribution::gaussian();
  for (auto _ : state)
    benchmark::DoNotOptimize(os_moments_mc(5, 9, dist, 100'000, kDefaultSeed));
  state.SetItemsProcessed(state.iterations() * 100'000);
}
BENCHMARK(BM_OsMomentsMonteCarlo);

void BM_SimulateOffsets(benchmark::State& state) {
  NoiseSpec noise;
  noise.sigma_eta = 0.1;
  noise.n = static_cast<std::size_t>(state.range(0));
  for (auto _ : state)
    benchmark::DoNotOptimize(
        simulate_offsets(LocalLinearModel{2.0}, noise, Average{}, 10'000, kDefaultSeed));
  state.SetItemsProcessed(state.iterations() * 10'000);
}
BENCHMARK(BM_SimulateOffsets)->Arg(1)->Arg(5)->Arg(15);

void BM_SimulateOffsetsCorrelated(benchmark::State& state) {
  NoiseSpec noise;
  noise.sigma_eta = 0.1;
  noise.n = 7;
  noise.delta = 0.4;
  for (auto _ : state)
    benchmark::DoNotOptimize(
        simulate_offsets(LocalLinearModel{2.0}, noise, OrderStat{RankSpec::median()}, 10'000,
                         kDefaultSeed));
  state.SetItemsProcessed(state.iterations() * 10'000);
}
BENCHMARK(BM_SimulateOffsetsCorrelated);

void BM_DrawCorrelatedErrors(benchmark::State& state) {
  auto g = substream(kDefaultSeed, 1);
  auto dist = BaseDistribution::gaussian();
  std::vector<double> out(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    draw_correlated_errors(g, dist, 0.1, 0.4, {}, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_DrawCorrelatedErrors)->Arg(5)->Arg(15);

}  // namespace

BENCHMARK_MAIN();
