#include <benchmark/benchmark.h>

#include "spdebias/rideshare.hpp"
#include "spdebias/stochastic_sim.hpp"
#include "spdebias/supply_chain.hpp"

using namespace spdebias;

namespace {

Execution mode(const benchmark::State& state) {
  return state.range(0) == 0 ? Execution::Serial : Execution::Parallel;
}

SimConfig geometric_sim() {
  SimConfig c;
  c.inst = MatchingInstance(Matrix{{2.0, 1.0, 0.5, 0.25, 0.125, 0.0625}});
  c.rates.lambda = {1.5};
  c.rates.beta = {4.0};
  c.rates.pi = Vector(6, 1.0);
  c.taus = {1000.0};
  c.replications = 400;
  return c;
}

void BM_MonteCarlo(benchmark::State& state) {
  const SimConfig c = geometric_sim();
  for (auto _ : state) benchmark::DoNotOptimize(monte_carlo(c, mode(state)));
}

void BM_BuildMatching(benchmark::State& state) {
  SynthParams p = SynthParams::city_default();
  p.n_rides = 3000;
  p.n_drivers = 2000;
  const SynthData data = synth_rides(p, 1);
  for (auto _ : state) {
    benchmark::DoNotOptimize(build_matching(data.rides, data.drivers, 50, mode(state)));
  }
}

void BM_RideshareReplications(benchmark::State& state) {
  RideshareConfig c;
  c.n_drivers = 1000;
  c.n_rides = 1500;
  c.replications = 8;
  const RideshareMarket market = load_rideshare_market(c);
  for (auto _ : state) {
    benchmark::DoNotOptimize(run_rideshare_on_market(market, c, mode(state)));
  }
}

void BM_SupplyChain(benchmark::State& state) {
  SupplyChainConfig c;
  c.replications = 1000;
  for (auto _ : state) benchmark::DoNotOptimize(run_supply_chain_experiment(c, mode(state)));
}

}  // namespace

// Argument 0 = serial reference, 1 = OpenMP.
BENCHMARK(BM_MonteCarlo)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_BuildMatching)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_RideshareReplications)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SupplyChain)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
