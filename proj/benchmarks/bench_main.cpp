#include <benchmark/benchmark.h>

#include "spgg/baselines.hpp"
#include "spgg/grpo.hpp"
#include "spgg/lattice.hpp"

namespace {

using namespace spgg;

StrategyGrid bench_grid(int side) {
  SplitMix64 rng(1);
  return init_lattice(side, InitMode::bernoulli(0.5), rng);
}

void BM_PayoffField(benchmark::State& state) {
  const auto grid = bench_grid(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(payoff_field(grid, 4.0));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(grid.size()));
}
BENCHMARK(BM_PayoffField)->Arg(50)->Arg(200);

void BM_FermiEpoch(benchmark::State& state) {
  const auto grid = bench_grid(static_cast<int>(state.range(0)));
  std::int64_t epoch = 0;
  for (auto _ : state) benchmark::DoNotOptimize(fermi_epoch(grid, 4.0, FermiConfig{}, 7, epoch++));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(grid.size()));
}
BENCHMARK(BM_FermiEpoch)->Arg(50)->Arg(200);

void BM_QEpoch(benchmark::State& state) {
  const auto grid = bench_grid(static_cast<int>(state.range(0)));
  QTables tables(grid.size(), QConfig{});
  std::int64_t epoch = 0;
  for (auto _ : state) benchmark::DoNotOptimize(q_epoch(tables, grid, 4.0, 7, epoch++));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(grid.size()));
}
BENCHMARK(BM_QEpoch)->Arg(50)->Arg(200);

void BM_TrainEpoch(benchmark::State& state) {
  const auto grid = bench_grid(static_cast<int>(state.range(0)));
  SplitMix64 rng(2);
  auto policies = PolicyTriplet::from(MlpParams::glorot(HiddenWidths{}, rng));
  auto opt = AdamState::for_params(policies.current);
  const GrpoHyper hyper;
  std::int64_t epoch = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(train_epoch(policies, grid, hyper, 4.0, opt, {1e-4, 1000}, epoch++, 3, 1));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(grid.size()));
}
BENCHMARK(BM_TrainEpoch)->Arg(50)->Arg(200)->Unit(benchmark::kMillisecond);

void BM_BatchLoss(benchmark::State& state) {
  const auto grid = bench_grid(50);
  SplitMix64 rng(3);
  const auto params = MlpParams::glorot(HiddenWidths{}, rng);
  std::vector<SplitMix64> streams;
  for (std::size_t i = 0; i < grid.size(); ++i) streams.emplace_back(i);
  const GrpoHyper hyper;
  const auto batch = build_batch(params, grid, hyper, 4.0, {global_coop_rate(grid), 1.0}, streams, 1);
  for (auto _ : state) benchmark::DoNotOptimize(batch_loss(params, batch, params, hyper, 1));
}
BENCHMARK(BM_BatchLoss)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
