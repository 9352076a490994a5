#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "harness/harness.hpp"
#include "oracles.hpp"
#include "v2vsim/errors.hpp"

using namespace v2vsim;
namespace h = v2vsim::harness;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("v2vsim_test_" + name);
  fs::remove_all(p);
  return p;
}

std::string first_line(const fs::path& p) {
  std::ifstream in(p);
  std::string line;
  std::getline(in, line);
  return line;
}

h::ExperimentConfig tiny_sweep() {
  h::ExperimentConfig cfg = h::preset("test3");
  cfg.side = 3;
  cfg.cars = 12;
  cfg.runs = 3;
  cfg.values = {0, 100, kInfinity};
  return cfg;
}

}  // namespace

TEST(Config, DefaultsAreReferenceValues) {
  const h::ExperimentConfig cfg;
  EXPECT_DOUBLE_EQ(cfg.params.dt, 0.6);
  EXPECT_DOUBLE_EQ(cfg.params.v_max, 50.0 / 3.6);
  EXPECT_DOUBLE_EQ(cfg.params.car_length, 10.0);
  EXPECT_DOUBLE_EQ(cfg.v2v.range, 150.0);
  EXPECT_DOUBLE_EQ(cfg.v2v.comm_pause, 0.0);
  EXPECT_EQ(cfg.v2v.memory, kInfinity);
  EXPECT_TRUE(cfg.v2v.cascade);
  EXPECT_EQ(cfg.method, WeightMethod::M3);
}

TEST(Config, Presets) {
  const auto t0 = h::preset("test0");
  EXPECT_EQ(t0.command, h::Command::Run);
  EXPECT_EQ(t0.runs, 500);
  EXPECT_EQ(t0.cars, 100u);
  EXPECT_EQ(t0.behaviors, std::vector<h::Behavior>{h::Behavior::RUE});
  const auto t1 = h::preset("test1");
  EXPECT_EQ(t1.network, "simple-eleven");
  EXPECT_EQ(t1.values, (std::vector<double>{25, 50, 75, 100}));
  const auto t2 = h::preset("test2");
  EXPECT_DOUBLE_EQ(t2.road_length, 300.0);
  EXPECT_EQ(t2.runs, 30);
  const auto t3 = h::preset("test3");
  EXPECT_FALSE(t3.v2v.cascade);
  EXPECT_EQ(t3.values.back(), kInfinity);
  EXPECT_EQ(t3.runs, 300);
  EXPECT_EQ(h::preset("test5").behaviors.size(), 2u);
  EXPECT_EQ(h::preset("test4").command, h::Command::EquilibriumCheck);
  for (const char* t : {"test0", "test1", "test2", "test3", "test4", "test5"}) {
    EXPECT_NO_THROW(h::validate(h::preset(t))) << t;
  }
  EXPECT_THROW(h::preset("test9"), ParameterError);
}

TEST(Config, InvalidCombinations) {
  h::ExperimentConfig cfg = h::preset("test3");
  cfg.behaviors = {h::Behavior::BB};
  EXPECT_THROW(h::validate(cfg), ConfigError);
  cfg = h::preset("test3");
  cfg.method = WeightMethod::M1;
  EXPECT_THROW(h::validate(cfg), ConfigError);
  cfg = h::preset("test3");
  cfg.axis = "colour";
  EXPECT_THROW(h::validate(cfg), ConfigError);
  cfg = h::preset("test0");
  cfg.axis = "range";
  cfg.values = {1};
  EXPECT_THROW(h::validate(cfg), ConfigError);
  cfg = h::preset("test2");
  cfg.behaviors = {h::Behavior::RUE};
  EXPECT_THROW(h::validate(cfg), ConfigError);
  cfg = h::preset("test0");
  cfg.runs = 0;
  EXPECT_THROW(h::validate(cfg), ConfigError);
  cfg = h::preset("test0");
  cfg.v2v.range = -3;
  EXPECT_THROW(h::validate(cfg), ConfigError);
  cfg = h::preset("test1");
  cfg.axis = "side";
  EXPECT_THROW(h::validate(cfg), ConfigError);
}

TEST(Config, JsonRoundTrip) {
  h::ExperimentConfig cfg = h::preset("test5");
  cfg.v2v.memory = 42.0;
  cfg.seed = 77;
  cfg.start_roads = {1, 2};
  const h::ExperimentConfig back = h::config_from_json(h::to_json(cfg));
  EXPECT_EQ(h::to_json(back), h::to_json(cfg));
  EXPECT_EQ(back.values.back(), kInfinity);
  EXPECT_EQ(h::to_json(cfg)["values"].back(), "inf");
  EXPECT_THROW(h::config_from_json(nlohmann::json{{"behaviors", {"warp"}}}), ParameterError);
}

TEST(Config, Values) {
  EXPECT_EQ(h::parse_value("inf"), kInfinity);
  EXPECT_EQ(h::parse_value("12.5"), 12.5);
  EXPECT_THROW(h::parse_value("12x"), ParameterError);
  EXPECT_EQ(h::format_value(kInfinity), "inf");
  EXPECT_EQ(h::format_value(150), "150");
  EXPECT_EQ(h::format_value(0.5), "0.5");
}

TEST(Scenario, CommonRandomNumbersAcrossAxis) {
  const h::ExperimentConfig cfg = h::preset("test3");
  const auto net = h::make_network(cfg);
  for (std::size_t run : {0u, 5u}) {
    const Scenario a = h::make_scenario(h::at_axis(cfg, 0.0), net, run);
    const Scenario b = h::make_scenario(h::at_axis(cfg, kInfinity), net, run);
    EXPECT_EQ(a.trips, b.trips);
    EXPECT_EQ(a.seed, cfg.seed + run);
  }
  EXPECT_NE(h::make_scenario(cfg, net, 0).trips, h::make_scenario(cfg, net, 1).trips);
}

TEST(Scenario, NetworkDefaults) {
  h::ExperimentConfig cfg = h::preset("test1");
  const auto net = h::make_network(cfg);
  const OdSpec spec = h::od_spec(cfg, *net);
  EXPECT_EQ(spec.destination, 4);
  EXPECT_EQ(spec.start_roads, (std::vector<RoadId>{2, 6, 8}));
  cfg = h::preset("test0");
  cfg.od_mode = OdMode::RandomOriginFixedDestination;
  EXPECT_EQ(h::od_spec(cfg, *h::make_network(cfg)).destination, 22);
  cfg.network = "file";
  cfg.network_file = (fs::path(V2VSIM_TEST_DATA) / "diamond.json").string();
  EXPECT_EQ(h::make_network(cfg)->junction_count(), 4u);
}

TEST(Harness, ParallelForCoversEveryIndexOnce) {
  std::vector<int> hits(97, 0);
  h::parallel_for(hits.size(), 4, [&](std::size_t i) { hits[i] += 1; });
  for (int x : hits) EXPECT_EQ(x, 1);
  EXPECT_THROW(h::parallel_for(10, 3, [](std::size_t i) {
                 if (i == 7) throw ScenarioError("boom");
               }),
               ScenarioError);
}

TEST(Harness, Sha256KnownVector) {
  const fs::path p = scratch("sha") / "abc.txt";
  fs::create_directories(p.parent_path());
  std::ofstream(p, std::ios::binary) << "abc";
  EXPECT_EQ(h::sha256_file(p), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Harness, SweepSchemasAndManifest) {
  const fs::path out = scratch("sweep");
  const nlohmann::json m = h::run_experiment(tiny_sweep(), out);
  EXPECT_EQ(first_line(out / "sweep_v2v-rue.csv"), "axis_value,mean_ttt,ci_halfwidth,runs");
  EXPECT_EQ(first_line(out / "sweep_v2v-rue_runs.csv"), "axis_value,run,seed,ttt,converged");
  EXPECT_EQ(m["schema_version"], h::kSchemaVersion);
  EXPECT_EQ(m["version"], std::string(h::kVersion));
  EXPECT_EQ(m["seeds"], nlohmann::json({1, 2, 3}));
  EXPECT_TRUE(m["outputs"].contains("sweep_v2v-rue.csv"));
  EXPECT_TRUE(fs::exists(out / "manifest.json"));
  std::ifstream in(out / "sweep_v2v-rue.csv");
  std::string line;
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 4);
}

TEST(Harness, RunAndSpreadSchemas) {
  h::ExperimentConfig run = h::preset("test0");
  run.side = 3;
  run.cars = 10;
  run.runs = 4;
  run.routes = true;
  const fs::path a = scratch("run");
  h::run_experiment(run, a);
  EXPECT_EQ(first_line(a / "runs_rue.csv"), "run,seed,ttt,converged");
  EXPECT_EQ(first_line(a / "cumulative_rue.csv"), "runs,cumulative_mean,ci_halfwidth");
  EXPECT_EQ(first_line(a / "routes_rue.csv"), "axis_value,car,road,step");

  h::ExperimentConfig spread = h::preset("test2");
  spread.side = 3;
  spread.cars = 10;
  spread.runs = 2;
  const fs::path b = scratch("spread");
  h::run_experiment(spread, b);
  EXPECT_EQ(first_line(b / "spread_cascade1.csv"), "t,n_active,k_n");
  EXPECT_EQ(first_line(b / "spread_cascade0.csv"), "t,n_active,k_n");
}

TEST(Harness, TraceFiles) {
  h::ExperimentConfig cfg = h::preset("test0");
  cfg.side = 3;
  cfg.cars = 5;
  cfg.runs = 2;
  cfg.behaviors = {h::Behavior::DUE};
  cfg.trace = true;
  const fs::path out = scratch("trace");
  h::run_experiment(cfg, out);
  EXPECT_EQ(first_line(out / "trace" / "due_run0.csv"), "t,car,road,x,active");
  EXPECT_EQ(first_line(out / "trace" / "due_run1_iterations.csv"), "iteration,ttt,max_weight_change");
}

TEST(Replay, IdenticalThenEditedSeedThenVersion) {
  const fs::path out = scratch("replay_a");
  h::run_experiment(tiny_sweep(), out);
  const h::ReplayReport same = h::replay(out / "manifest.json", scratch("replay_b"));
  EXPECT_TRUE(same.identical);
  EXPECT_TRUE(same.mismatched.empty());

  nlohmann::json m = nlohmann::json::parse(oracle::slurp(out / "manifest.json"));
  m["config"]["seed"] = 2;
  m["seeds"] = nlohmann::json({2, 3, 4});
  const fs::path edited = scratch("replay_edit") / "manifest.json";
  fs::create_directories(edited.parent_path());
  std::ofstream(edited) << m.dump(2);
  const h::ReplayReport diff = h::replay(edited, scratch("replay_c"));
  EXPECT_FALSE(diff.identical);
  EXPECT_FALSE(diff.mismatched.empty());

  m["version"] = "0.0.1";
  std::ofstream(edited) << m.dump(2);
  EXPECT_THROW(h::replay(edited, scratch("replay_d")), ConfigError);
}

TEST(Replay, WorkerCountDoesNotChangeOutputs) {
  h::ExperimentConfig cfg = tiny_sweep();
  const nlohmann::json one = h::run_experiment(cfg, scratch("w1"));
  cfg.workers = 3;
  const nlohmann::json three = h::run_experiment(cfg, scratch("w3"));
  EXPECT_EQ(one["outputs"], three["outputs"]);
}

TEST(PathCheck, BuiltInInstance) {
  const h::PathCheckInstance inst = h::make_path_check_instance(h::preset("test4"));
  EXPECT_EQ(inst.scenario.trips.size(), 21u);
  EXPECT_EQ(inst.tracked, 20);
  EXPECT_EQ(inst.candidates.size(), 11u);
  const Network& net = *inst.scenario.net;
  for (const auto& p : inst.candidates) {
    EXPECT_EQ(net.road(p.front()).from, 2);
    EXPECT_EQ(net.road(p.back()).to, 8);
  }
}
