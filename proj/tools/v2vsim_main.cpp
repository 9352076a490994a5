// Command-line front end of the simulator.
//
//   v2vsim run   --test test0 --runs 50
//   v2vsim sweep --test test3 --values 0,50,inf --workers 4
//   v2vsim spread --test test2
//   v2vsim equilibrium-check --test test4
//   v2vsim replay out/test3/manifest.json --out-dir out/replayed
//
// Exit status: 0 success, 2 invalid configuration, 3 replay mismatch,
// 1 any other failure.

#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "harness/harness.hpp"
#include "v2vsim/errors.hpp"

namespace h = v2vsim::harness;

namespace {

struct Flags {
  std::string test = "custom";
  std::string network;
  std::string network_file;
  int side = 0;
  double road_length = 0;
  std::size_t cars = 0;
  std::vector<std::string> behaviors;
  std::string od;
  int destination = -1;
  std::vector<int> start_roads;
  double dt = 0;
  double t_fin = 0;
  std::string weights;
  std::string range;
  double comm_pause = 0;
  std::string memory;
  bool cascade = true;
  std::string refresh;
  int due_max_iterations = 0;
  double due_tolerance = 0;
  std::string axis;
  std::vector<std::string> values;
  int runs = 0;
  std::uint64_t seed = 0;
  int workers = 1;
  bool trace = false;
  bool routes = false;
  std::string out_dir;
  std::string manifest;
};

struct Registered {
  std::vector<std::pair<CLI::Option*, std::function<void(h::ExperimentConfig&)>>> setters;
};

template <class T, class Fn>
void flag(CLI::App& app, Registered& reg, const std::string& name, T& target,
          const std::string& help, Fn apply) {
  CLI::Option* opt = app.add_option(name, target, help);
  reg.setters.emplace_back(opt, apply);
}

h::ExperimentConfig build_config(const Flags& f, const Registered& reg, h::Command command) {
  h::ExperimentConfig cfg = h::preset(f.test);
  if (f.test != "custom" && cfg.command != command) {
    throw v2vsim::ConfigError(fmt::format("{} is a '{}' experiment; run it with 'v2vsim {} --test {}'",
                                          f.test, h::to_string(cfg.command),
                                          h::to_string(cfg.command), f.test));
  }
  cfg.command = command;
  // Explicit flags override the preset, in registration order.
  for (const auto& [opt, apply] : reg.setters) {
    if (opt->count() > 0) apply(cfg);
  }
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Microscopic traffic simulator with V2V-informed route choice"};
  app.set_version_flag("--version", std::string(h::kVersion));
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "", "TOML file with any of the options below");

  Flags f;
  Registered reg;
  app.add_option("--test", f.test, "Preset: test0..test5 or custom")->default_val("custom");
  flag(app, reg, "--network", f.network, "manhattan | simple-eleven | file",
       [&](h::ExperimentConfig& c) { c.network = f.network; });
  flag(app, reg, "--network-file", f.network_file, "JSON network (with --network file)",
       [&](h::ExperimentConfig& c) { c.network_file = f.network_file; });
  flag(app, reg, "--side", f.side, "Manhattan grid side (junctions per row)",
       [&](h::ExperimentConfig& c) { c.side = f.side; });
  flag(app, reg, "--road-length", f.road_length, "Manhattan road length, m",
       [&](h::ExperimentConfig& c) { c.road_length = f.road_length; });
  flag(app, reg, "--cars", f.cars, "Number of cars",
       [&](h::ExperimentConfig& c) { c.cars = f.cars; });
  app.add_option("--behavior", f.behaviors, "bb, rue, due, v2v-rue, v2v-due (comma separated)")
      ->delimiter(',');
  flag(app, reg, "--od", f.od, "start-roads | random-od | random-origin",
       [&](h::ExperimentConfig& c) { c.od_mode = v2vsim::parse_od_mode(f.od); });
  flag(app, reg, "--destination", f.destination, "Destination junction (fixed-destination modes)",
       [&](h::ExperimentConfig& c) { c.destination = f.destination; });
  app.add_option("--start-roads", f.start_roads, "First roads for start-roads mode")->delimiter(',');
  flag(app, reg, "--dt", f.dt, "Time step, s", [&](h::ExperimentConfig& c) { c.params.dt = f.dt; });
  flag(app, reg, "--t-fin", f.t_fin, "Horizon, s (0 = automatic)",
       [&](h::ExperimentConfig& c) { c.t_fin = f.t_fin; });
  flag(app, reg, "--weights", f.weights, "Weight estimator M1 | M2 | M3",
       [&](h::ExperimentConfig& c) { c.method = v2vsim::parse_weight_method(f.weights); });
  flag(app, reg, "--range", f.range, "Communication range R, m ('inf' allowed)",
       [&](h::ExperimentConfig& c) { c.v2v.range = h::parse_value(f.range); });
  flag(app, reg, "--comm-pause", f.comm_pause, "Pause between exchanges, s",
       [&](h::ExperimentConfig& c) { c.v2v.comm_pause = f.comm_pause; });
  flag(app, reg, "--memory", f.memory, "Record lifetime, s ('inf' allowed)",
       [&](h::ExperimentConfig& c) { c.v2v.memory = h::parse_value(f.memory); });
  flag(app, reg, "--cascade", f.cascade, "Relay records about third cars (true/false)",
       [&](h::ExperimentConfig& c) { c.v2v.cascade = f.cascade; });
  flag(app, reg, "--refresh", f.refresh, "Nowcast re-planning: every-step | at-junctions",
       [&](h::ExperimentConfig& c) { c.v2v.refresh = v2vsim::parse_nowcast_refresh(f.refresh); });
  flag(app, reg, "--due-max-iter", f.due_max_iterations, "DUE iteration cap",
       [&](h::ExperimentConfig& c) { c.due_max_iterations = f.due_max_iterations; });
  flag(app, reg, "--due-tol", f.due_tolerance, "DUE convergence tolerance on TTT, s",
       [&](h::ExperimentConfig& c) { c.due_tolerance = f.due_tolerance; });
  flag(app, reg, "--axis", f.axis, "Sweep axis: range, comm-pause, memory, cascade, cars, side, road-length",
       [&](h::ExperimentConfig& c) { c.axis = f.axis; });
  app.add_option("--values", f.values, "Axis values (comma separated, 'inf' allowed)")->delimiter(',');
  flag(app, reg, "--runs", f.runs, "Runs per point",
       [&](h::ExperimentConfig& c) { c.runs = f.runs; });
  flag(app, reg, "--seed", f.seed, "Seed of run 0; run i uses seed + i",
       [&](h::ExperimentConfig& c) { c.seed = f.seed; });
  flag(app, reg, "--workers", f.workers, "Worker threads",
       [&](h::ExperimentConfig& c) { c.workers = f.workers; });
  app.add_flag("--trace", f.trace, "Write per-step trajectories (and DUE iterations) to trace/");
  app.add_flag("--routes", f.routes, "Write the routes of the first run of every point");
  app.add_option("--out-dir", f.out_dir, "Output directory (default out/<test or command>)");

  auto* run = app.add_subcommand("run", "Independent runs of each behavior");
  auto* sweep = app.add_subcommand("sweep", "Mean TTT with confidence interval along an axis");
  auto* spread = app.add_subcommand("spread", "Knowledge spreading over BB traffic");
  auto* check = app.add_subcommand("equilibrium-check", "Junction-by-junction path check");
  auto* rep = app.add_subcommand("replay", "Re-run a manifest and compare output checksums");
  rep->add_option("manifest", f.manifest, "manifest.json to replay")->required();

  // Options that need post-processing beyond a plain copy.
  auto* behavior_opt = app.get_option("--behavior");
  auto* roads_opt = app.get_option("--start-roads");
  auto* values_opt = app.get_option("--values");
  auto* trace_opt = app.get_option("--trace");
  auto* routes_opt = app.get_option("--routes");
  reg.setters.emplace_back(behavior_opt, [&](h::ExperimentConfig& c) {
    c.behaviors.clear();
    for (const std::string& b : f.behaviors) c.behaviors.push_back(h::parse_behavior(b));
  });
  reg.setters.emplace_back(roads_opt, [&](h::ExperimentConfig& c) { c.start_roads = f.start_roads; });
  reg.setters.emplace_back(values_opt, [&](h::ExperimentConfig& c) {
    c.values.clear();
    for (const std::string& v : f.values) c.values.push_back(h::parse_value(v));
  });
  reg.setters.emplace_back(trace_opt, [&](h::ExperimentConfig& c) { c.trace = f.trace; });
  reg.setters.emplace_back(routes_opt, [&](h::ExperimentConfig& c) { c.routes = f.routes; });

  CLI11_PARSE(app, argc, argv);

  try {
    if (rep->parsed()) {
      const std::filesystem::path out =
          f.out_dir.empty() ? std::filesystem::path("out/replay") : std::filesystem::path(f.out_dir);
      const h::ReplayReport report = h::replay(f.manifest, out, &std::cout);
      if (report.identical) {
        std::cout << "replay identical: every output checksum matches\n";
        return 0;
      }
      for (const std::string& name : report.mismatched) std::cout << "mismatch: " << name << '\n';
      return 3;
    }
    h::Command command = h::Command::Run;
    if (sweep->parsed()) command = h::Command::Sweep;
    if (spread->parsed()) command = h::Command::Spread;
    if (check->parsed()) command = h::Command::EquilibriumCheck;
    (void)run;
    const h::ExperimentConfig cfg = build_config(f, reg, command);
    const std::filesystem::path out =
        f.out_dir.empty()
            ? std::filesystem::path("out") / (f.test != "custom" ? f.test : std::string(h::to_string(command)))
            : std::filesystem::path(f.out_dir);
    h::run_experiment(cfg, out, &std::cout);
    std::cout << "outputs and manifest.json written to " << out.string() << '\n';
    return 0;
  } catch (const v2vsim::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return 2;
  } catch (const v2vsim::ParameterError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return 2;
  } catch (const v2vsim::ScenarioError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
