#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "v2vsim/equilibrium.hpp"
#include "v2vsim/network.hpp"
#include "v2vsim/v2v.hpp"

namespace v2vsim::harness {

inline constexpr std::string_view kVersion = "1.0.0";
inline constexpr int kSchemaVersion = 1;

enum class Behavior { BB, RUE, DUE, V2VRUE, V2VDUE };

Behavior parse_behavior(std::string_view tag);
std::string_view to_string(Behavior b);
bool uses_v2v(Behavior b);

enum class Command { Run, Sweep, Spread, EquilibriumCheck };

Command parse_command(std::string_view tag);
std::string_view to_string(Command c);

/// Everything needed to reproduce an experiment. Defaults are the reference
/// values: dt 0.6 s, v_max 50 km/h, car length 10 m, R 150 m, no pause,
/// unlimited memory, cascade on.
struct ExperimentConfig {
  Command command = Command::Run;
  std::string test = "custom";

  std::string network = "manhattan";  ///< manhattan | simple-eleven | file
  int side = 5;
  double road_length = 50.0;
  std::string network_file;

  std::vector<Behavior> behaviors = {Behavior::RUE};
  std::size_t cars = 100;
  OdMode od_mode = OdMode::RandomOd;
  JunctionId destination = -1;        ///< -1: network default
  std::vector<RoadId> start_roads;    ///< empty: network default

  SimParams params;
  double t_fin = 0.0;                 ///< 0: automatic
  WeightMethod method = WeightMethod::M3;
  V2VParams v2v;
  int due_max_iterations = 50;
  double due_tolerance = 0.5;

  std::string axis;                   ///< sweep / spread axis, empty for none
  std::vector<double> values;

  int runs = 300;
  std::uint64_t seed = 1;
  int workers = 1;
  bool trace = false;
  bool routes = false;                ///< route logs of the first run per point
};

/// Reference configuration of one of the built-in tests (test0..test5).
ExperimentConfig preset(std::string_view test);

/// Throws ConfigError explaining the first inconsistency found.
void validate(const ExperimentConfig& cfg);

nlohmann::json to_json(const ExperimentConfig& cfg);
ExperimentConfig config_from_json(const nlohmann::json& doc);

/// Numbers that may be infinite are written as the string "inf".
double parse_value(std::string_view text);
std::string format_value(double v);

std::shared_ptr<const Network> make_network(const ExperimentConfig& cfg);
OdSpec od_spec(const ExperimentConfig& cfg, const Network& net);

/// Scenario of run `run` (seed = cfg.seed + run, shared by every sweep point).
Scenario make_scenario(const ExperimentConfig& cfg, std::shared_ptr<const Network> net,
                       std::size_t run);

/// Copy of cfg with the sweep axis set to `value`.
ExperimentConfig at_axis(const ExperimentConfig& cfg, double value);

RunResult run_behavior(Behavior b, const Scenario& scn, const ExperimentConfig& cfg,
                       const V2VRunOptions& opts = {});

/// Calls fn(i) for i in [0, n) on `workers` threads.
void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn);

std::string sha256_file(const std::filesystem::path& file);

/// Built-in equilibrium-path instance on a side x side grid: a queue of
/// `cars - 1` cars forced straight up the right column, and a tracked car
/// with the same trip whose candidate paths are every simple path.
struct PathCheckInstance {
  Scenario scenario;
  std::vector<std::vector<RoadId>> forced;  ///< tracked car's entry is a placeholder
  CarId tracked = 0;
  std::vector<std::vector<RoadId>> candidates;
};
PathCheckInstance make_path_check_instance(const ExperimentConfig& cfg);

/// Runs `cfg`, writes its CSV outputs and manifest.json into `out_dir`, and
/// returns the manifest. Progress goes to `log` when set.
nlohmann::json run_experiment(const ExperimentConfig& cfg, const std::filesystem::path& out_dir,
                              std::ostream* log = nullptr);

struct ReplayReport {
  bool identical = true;
  std::vector<std::string> mismatched;
};

/// Re-runs a manifest into `out_dir` and compares output checksums. Throws
/// ConfigError when the manifest was written by another version.
ReplayReport replay(const std::filesystem::path& manifest, const std::filesystem::path& out_dir,
                    std::ostream* log = nullptr);

}  // namespace v2vsim::harness
