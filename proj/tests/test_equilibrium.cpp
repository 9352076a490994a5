#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "v2vsim/equilibrium.hpp"
#include "v2vsim/errors.hpp"

using namespace v2vsim;

namespace {

std::shared_ptr<const Network> chain_net(int roads) {
  std::vector<Junction> js;
  std::vector<Road> rs;
  for (int i = 0; i <= roads; ++i) js.push_back({i, {i * 50.0, 0.0}});
  for (int i = 0; i < roads; ++i) rs.push_back({i, i, i + 1, 50.0});
  return std::make_shared<const Network>(Network(js, rs));
}

Scenario single_car(std::shared_ptr<const Network> net, JunctionId o, JunctionId d) {
  Scenario scn;
  scn.net = std::move(net);
  scn.trips = {{o, d, -1}};
  return resolved(scn);
}

std::vector<RoadId> roads_of(const RunResult& r, std::size_t car) {
  std::vector<RoadId> out;
  for (const RoadEntry& e : r.routes[car]) out.push_back(e.road);
  return out;
}

Scenario test1(std::size_t cars, std::uint64_t seed) {
  Scenario scn;
  scn.net = std::make_shared<const Network>(build_simple_eleven());
  scn.trips = draw_trips(*scn.net, cars, OdSpec{OdMode::StartRoads, 4, {2, 6, 8}}, seed);
  scn.seed = seed;
  return resolved(scn);
}

}  // namespace

TEST(Trips, OriginNeverDestination) {
  const Network net = build_manhattan(5, 50.0);
  for (OdMode mode : {OdMode::RandomOd, OdMode::RandomOriginFixedDestination}) {
    OdSpec spec{mode, 22, {}};
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      for (const Trip& t : draw_trips(net, 100, spec, seed)) {
        EXPECT_NE(t.origin, t.destination);
        if (mode == OdMode::RandomOriginFixedDestination) {
          EXPECT_EQ(t.destination, 22);
        }
      }
    }
  }
}

TEST(Trips, StartRoadsUseListedRoads) {
  const Network net = build_simple_eleven();
  const auto trips = draw_trips(net, 60, OdSpec{OdMode::StartRoads, 4, {2, 6, 8}}, 3);
  std::set<RoadId> used;
  for (const Trip& t : trips) {
    used.insert(t.start_road);
    EXPECT_EQ(t.origin, net.road(t.start_road).from);
    EXPECT_EQ(t.destination, 4);
  }
  EXPECT_EQ(used, (std::set<RoadId>{2, 6, 8}));
}

TEST(Trips, DeterministicPerSeed) {
  const Network net = build_manhattan(5, 50.0);
  EXPECT_EQ(draw_trips(net, 50, OdSpec{}, 42), draw_trips(net, 50, OdSpec{}, 42));
  EXPECT_NE(draw_trips(net, 50, OdSpec{}, 42), draw_trips(net, 50, OdSpec{}, 43));
}

TEST(Trips, UniformOverOrderedPairs) {
  const Network net = build_manhattan(2, 50.0);
  std::map<std::pair<int, int>, int> counts;
  const int n = 24000;
  for (const Trip& t : draw_trips(net, n, OdSpec{}, 1)) ++counts[{t.origin, t.destination}];
  EXPECT_EQ(counts.size(), 12u);
  for (const auto& [od, c] : counts) EXPECT_NEAR(c, n / 12.0, 5 * std::sqrt(n / 12.0));
}

TEST(Trips, UniformIndexRange) {
  std::mt19937_64 rng(9);
  std::vector<int> hits(7, 0);
  for (int i = 0; i < 7000; ++i) ++hits[uniform_index(rng, 7)];
  for (int h : hits) EXPECT_NEAR(h, 1000, 150);
}

TEST(Trips, ParseModes) {
  EXPECT_EQ(parse_od_mode("random-od"), OdMode::RandomOd);
  EXPECT_EQ(parse_od_mode("start-roads"), OdMode::StartRoads);
  EXPECT_EQ(parse_od_mode("random-origin"), OdMode::RandomOriginFixedDestination);
  EXPECT_THROW(parse_od_mode("teleport"), ParameterError);
}

TEST(Horizon, WholeStepsAndFloor) {
  Scenario scn = single_car(chain_net(1), 0, 1);
  EXPECT_GE(scn.t_fin, 120.0);
  EXPECT_NEAR(std::fmod(scn.t_fin + 1e-9, scn.params.dt), 0.0, 1e-6);
  EXPECT_EQ(horizon_steps(scn), std::llround(scn.t_fin / scn.params.dt));
  EXPECT_DOUBLE_EQ(weight_config(scn).cap, 10.0 * scn.t_fin);
}

TEST(Bb, FreeFlowChain) {
  for (int k : {1, 2, 5}) {
    const RunResult r = run_bb(single_car(chain_net(k), 0, k));
    EXPECT_TRUE(r.terminated);
    EXPECT_GE(r.ttt, k * 3.6 - 1e-9);
    EXPECT_LE(r.ttt, k * 3.6 + 0.6);
  }
  const RunResult two = run_bb(single_car(chain_net(2), 0, 2));
  EXPECT_NEAR(two.ttt, 7.2, 0.6);
}

TEST(Bb, RoadEightCarsTakeShortRoute) {
  const Scenario scn = test1(50, 1);
  const RunResult r = run_bb(scn);
  int road8 = 0;
  for (std::size_t c = 0; c < scn.trips.size(); ++c) {
    if (scn.trips[c].start_road != 8) continue;
    ++road8;
    EXPECT_EQ(roads_of(r, c), (std::vector<RoadId>{8, 0, 7, 5}));
  }
  EXPECT_GT(road8, 0);
}

TEST(Bb, Deterministic) {
  const Scenario scn = test1(50, 2);
  EXPECT_EQ(run_bb(scn).ttt, run_bb(scn).ttt);
}

TEST(Bb, TotalIsSumOfCarTimes) {
  const RunResult r = run_bb(test1(75, 4));
  double sum = 0.0;
  for (double t : r.per_car_tt) sum += t;
  EXPECT_DOUBLE_EQ(sum, r.ttt);
}

TEST(Bb, ShortHorizonIsFlagged) {
  Scenario scn = single_car(chain_net(5), 0, 5);
  scn.t_fin = 6.0;
  const RunResult r = run_bb(scn);
  EXPECT_FALSE(r.terminated);
  EXPECT_DOUBLE_EQ(r.per_car_tt[0], 6.0);
}

TEST(Limits, SingleCarRueAndDueFollowBb) {
  const auto net = std::make_shared<const Network>(build_manhattan(4, 50.0));
  for (auto [o, d] : {std::pair{0, 15}, std::pair{5, 3}, std::pair{12, 1}}) {
    const Scenario scn = single_car(net, o, d);
    const RunResult bb = run_bb(scn);
    const RunResult rue = run_rue(scn);
    const RunResult due = run_due(scn);
    EXPECT_EQ(rue.routes, bb.routes);
    EXPECT_EQ(due.routes, bb.routes);
    EXPECT_DOUBLE_EQ(rue.ttt, bb.ttt);
    EXPECT_TRUE(due.converged);
    EXPECT_EQ(due.iterations, 2);
  }
}

TEST(Msa, FirstIterationCopiesAndAveragesStayBounded) {
  WeightField bar(3, 2, 0.6);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(3.0, 30.0);
  double lo = kInfinity;
  double hi = 0.0;
  for (int k = 1; k <= 20; ++k) {
    WeightField hat(3, 2, 0.6);
    for (double& x : hat.values()) {
      x = u(rng);
      lo = std::min(lo, x);
      hi = std::max(hi, x);
    }
    const WeightField before = bar;
    msa_update(bar, hat, k);
    if (k == 1) {
      for (std::size_t i = 0; i < hat.values().size(); ++i) EXPECT_EQ(bar.values()[i], hat.values()[i]);
    }
    for (std::size_t i = 0; i < bar.values().size(); ++i) {
      EXPECT_GE(bar.values()[i], lo);
      EXPECT_LE(bar.values()[i], hi);
      if (k > 1) {
        EXPECT_NEAR(bar.values()[i], ((k - 1) * before.values()[i] + hat.values()[i]) / k, 1e-12);
      }
    }
  }
}

TEST(Due, FixedPointCertificate) {
  const Scenario scn = test1(25, 11);
  const RunResult due = run_due(scn);
  ASSERT_TRUE(due.converged);
  ASSERT_GE(due.diagnostics.size(), 2u);
  const auto n = due.diagnostics.size();
  EXPECT_LE(std::abs(due.diagnostics[n - 1].ttt - due.diagnostics[n - 2].ttt), 0.5);
  const RunResult again = run_fixed_policies(scn, due.policies);
  EXPECT_NEAR(again.ttt, due.ttt, 0.5);
  std::ostringstream diag;
  write_diagnostics_csv(diag, due.diagnostics);
  EXPECT_EQ(diag.str().substr(0, diag.str().find('\n')), "iteration,ttt,max_weight_change");
}

TEST(Due, NonConvergenceReturnsBestIterate) {
  const Scenario scn = test1(75, 3);
  RunOptions opts;
  opts.max_iterations = 3;
  opts.tolerance = 0.0;
  const RunResult due = run_due(scn, opts);
  EXPECT_EQ(due.iterations, 3);
  double best = kInfinity;
  for (const IterationStat& s : due.diagnostics) best = std::min(best, s.ttt);
  if (!due.converged) {
    EXPECT_DOUBLE_EQ(due.ttt, best);
  }
  EXPECT_THROW(run_due(scn, RunOptions{nullptr, nullptr, 0, 0.5}), ParameterError);
}

TEST(Rue, NeverWorseThanBbOnAverageForTestOneLoad) {
  double bb = 0.0;
  double rue = 0.0;
  for (std::uint64_t s = 0; s < 5; ++s) {
    const Scenario scn = test1(50, 100 + s);
    bb += run_bb(scn).ttt;
    rue += run_rue(scn).ttt;
  }
  EXPECT_LE(rue, bb);
}
