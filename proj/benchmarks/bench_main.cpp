#include <memory>
#include <vector>

#include <benchmark/benchmark.h>

#include "v2vsim/equilibrium.hpp"
#include "v2vsim/routing.hpp"
#include "v2vsim/v2v.hpp"

using namespace v2vsim;

namespace {

constexpr double kVmax = 50.0 / 3.6;

Scenario grid_scenario(int side, std::size_t cars, std::uint64_t seed) {
  Scenario scn;
  scn.net = std::make_shared<const Network>(build_manhattan(side, 50.0));
  scn.trips = draw_trips(*scn.net, cars, OdSpec{}, seed);
  scn.seed = seed;
  return resolved(scn);
}

// One Euler step of a loaded 5x5 grid, measured over the first 100 steps.
void BM_Step(benchmark::State& st) {
  const Scenario scn = grid_scenario(5, static_cast<std::size_t>(st.range(0)), 1);
  const auto bb = bb_policies(*scn.net, scn.trips, kVmax);
  std::vector<const RoutingPolicy*> pol;
  for (const Trip& t : scn.trips) pol.push_back(bb[t.destination].get());
  for (auto _ : st) {
    st.PauseTiming();
    SimState s = spawn(*scn.net, scn.trips, pol, scn.params);
    st.ResumeTiming();
    for (int k = 0; k < 100; ++k) step(s, pol, scn.params, nullptr);
    benchmark::DoNotOptimize(s.cars.data());
  }
  st.SetItemsProcessed(st.iterations() * 100);
}
BENCHMARK(BM_Step)->Arg(25)->Arg(100)->Arg(400);

void BM_StaticValue(benchmark::State& st) {
  const Network net = build_manhattan(static_cast<int>(st.range(0)), 50.0);
  const auto w = static_weights(net, kVmax);
  for (auto _ : st) benchmark::DoNotOptimize(solve_static_value(net, w, 0));
}
BENCHMARK(BM_StaticValue)->Arg(5)->Arg(10)->Arg(20);

void BM_DynamicValue(benchmark::State& st) {
  const Network net = build_manhattan(static_cast<int>(st.range(0)), 50.0);
  const WeightField w = WeightField::constant(static_weights(net, kVmax), 500, 0.6);
  for (auto _ : st) benchmark::DoNotOptimize(solve_dynamic_value(net, w, 0));
}
BENCHMARK(BM_DynamicValue)->Arg(5)->Arg(10);

void BM_RunRue(benchmark::State& st) {
  const Scenario scn = grid_scenario(5, 100, 3);
  for (auto _ : st) benchmark::DoNotOptimize(run_rue(scn).ttt);
}
BENCHMARK(BM_RunRue)->Unit(benchmark::kMillisecond);

void BM_RunDue(benchmark::State& st) {
  const Scenario scn = grid_scenario(5, 100, 3);
  for (auto _ : st) benchmark::DoNotOptimize(run_due(scn).ttt);
}
BENCHMARK(BM_RunDue)->Unit(benchmark::kMillisecond);

void BM_RunV2VRue(benchmark::State& st) {
  const Scenario scn = grid_scenario(5, 100, 3);
  V2VParams p;
  p.range = st.range(0) < 0 ? kInfinity : static_cast<double>(st.range(0));
  for (auto _ : st) benchmark::DoNotOptimize(run_v2v_rue(scn, p).ttt);
}
BENCHMARK(BM_RunV2VRue)->Arg(50)->Arg(150)->Arg(-1)->Unit(benchmark::kMillisecond);

void BM_Spread(benchmark::State& st) {
  Scenario scn;
  scn.net = std::make_shared<const Network>(build_manhattan(5, 300.0));
  scn.trips = draw_trips(*scn.net, 100, OdSpec{}, 5);
  scn = resolved(scn);
  const V2VParams p;
  for (auto _ : st) benchmark::DoNotOptimize(run_spread(scn, p).k_n.size());
}
BENCHMARK(BM_Spread)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
