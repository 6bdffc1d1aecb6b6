#include <benchmark/benchmark.h>

#include <vector>

#include "isingforage/criticality.hpp"
#include "isingforage/evolution.hpp"

using namespace isingforage;

namespace {

Genome bench_genome(std::size_t n_hidden, std::uint64_t seed) {
  Rng rng(seed);
  return Genome::random(Architecture{4, n_hidden, 4}, 1.0, 0.5, rng);
}

const std::vector<double> kSensors{0.2, -0.5, 0.1, 0.6};

void BM_GlauberSweep(benchmark::State& state) {
  const Genome g = bench_genome(static_cast<std::size_t>(state.range(0)), 1);
  Rng rng(2);
  SpinState s = SpinState::random(g.architecture(), kSensors, rng);
  GlauberDynamics dyn(g);
  for (auto _ : state) {
    dyn.sweep(s, 1.0, rng);
    benchmark::DoNotOptimize(s.values().data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(g.architecture().n_free()));
}
BENCHMARK(BM_GlauberSweep)->Arg(4)->Arg(20);

void BM_LifetimeStep(benchmark::State& state) {
  EvolutionConfig ec;
  ec.seed = 3;
  const std::vector<Genome> genomes = initial_genomes(ec);
  WorldConfig wc;
  wc.lifetime = static_cast<std::size_t>(state.range(0));
  std::uint64_t seed = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(evaluate_population(genomes, wc, ++seed));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0) * 50);
}
BENCHMARK(BM_LifetimeStep)->Arg(200)->Unit(benchmark::kMillisecond);

void BM_HeatCapacityCurve(benchmark::State& state) {
  const Genome g = bench_genome(4, 4);
  SamplingParams params;
  params.n_therm = 200;
  params.n_sample = 1000;
  params.estimator = state.range(0) == 0 ? CurveEstimator::kPointwise : CurveEstimator::kReplicaExchange;
  const std::vector<double> grid = log_spaced_grid();
  Rng rng(5);
  for (auto _ : state) {
    benchmark::DoNotOptimize(heat_capacity_curve(g, kSensors, grid, params, rng));
  }
}
BENCHMARK(BM_HeatCapacityCurve)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
