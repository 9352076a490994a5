#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <random>
#include <span>
#include <string_view>
#include <vector>

#include "v2vsim/dynamics.hpp"
#include "v2vsim/network.hpp"
#include "v2vsim/policy.hpp"
#include "v2vsim/routing.hpp"

namespace v2vsim {

enum class OdMode {
  StartRoads,          ///< first road drawn from a list, fixed destination
  RandomOd,            ///< origin and destination uniform over junctions
  RandomOriginFixedDestination,
};

OdMode parse_od_mode(std::string_view tag);
std::string_view to_string(OdMode m);

struct OdSpec {
  OdMode mode = OdMode::RandomOd;
  JunctionId destination = 0;
  std::vector<RoadId> start_roads;
};

/// Uniform integer in [0, n) by rejection sampling on the raw 64-bit output,
/// so draws are identical across standard libraries.
std::uint64_t uniform_index(std::mt19937_64& rng, std::uint64_t n);

/// `cars` trips drawn from `seed`. Origin != destination always holds.
std::vector<Trip> draw_trips(const Network& net, std::size_t cars, const OdSpec& spec,
                             std::uint64_t seed);

struct Scenario {
  std::shared_ptr<const Network> net;
  std::vector<Trip> trips;
  SimParams params;
  double t_fin = 0.0;  ///< horizon in seconds; <= 0 selects auto_horizon
  WeightMethod method = WeightMethod::M3;
  std::uint64_t seed = 0;
};

/// Horizon long enough for every car to arrive: max(3 x BB makespan, 120 s),
/// rounded up to a whole number of steps. Falls back to the search limit
/// when BB itself does not finish.
double auto_horizon(const Network& net, std::span<const Trip> trips, const SimParams& params);

/// Copy of `scn` with t_fin resolved and a multiple of dt.
Scenario resolved(const Scenario& scn);

std::int64_t horizon_steps(const Scenario& scn);

/// Weight settings for a resolved scenario (cap = 10 T_fin).
WeightConfig weight_config(const Scenario& scn);

struct IterationStat {
  int iteration = 0;
  double ttt = 0.0;
  double max_weight_change = 0.0;
};

struct RunResult {
  double ttt = 0.0;
  std::vector<double> per_car_tt;
  bool terminated = true;  ///< every car arrived before T_fin
  int iterations = 1;
  bool converged = true;
  double t_fin = 0.0;
  /// Per car: every road it was on and the step from which it was there.
  std::vector<std::vector<RoadEntry>> routes;
  /// Policies the cars followed (shared between cars with one destination).
  std::vector<PolicyPtr> policies;
  std::vector<IterationStat> diagnostics;
};

struct RunOptions {
  std::ostream* trajectory = nullptr;  ///< CSV trace of every step
  std::ostream* diagnostics = nullptr; ///< DUE per-iteration CSV
  int max_iterations = 50;
  double tolerance = 0.5;              ///< seconds on TTT
};

/// Records the routes of a run and turns the final state into a RunResult.
class RunRecorder {
 public:
  RunRecorder(const SimState& initial, std::ostream* trajectory);
  void after_step(const SimState& state, const StepEvents& events);
  RunResult finish(const SimState& state, double t_fin);

 private:
  std::vector<std::vector<RoadEntry>> routes_;
  std::unique_ptr<TrajectoryWriter> writer_;
};

/// Static shortest-path policy per destination, indexed by junction id
/// (null for destinations nobody uses).
std::vector<PolicyPtr> bb_policies(const Network& net, std::span<const Trip> trips, double v_max);

/// Steps `state` under fixed per-car policies until every car arrived or
/// T_fin. `snapshot` (optional) receives the weights seen at every step.
RunResult run_fixed_policies(const Scenario& scn, std::span<const PolicyPtr> per_car,
                             const RunOptions& opts = {},
                             WeightField* snapshot = nullptr);

RunResult run_bb(const Scenario& scn, const RunOptions& opts = {});
RunResult run_rue(const Scenario& scn, const RunOptions& opts = {});
RunResult run_due(const Scenario& scn, const RunOptions& opts = {});

/// w_bar <- ((k-1) w_bar + w_hat) / k; returns the largest absolute change.
double msa_update(WeightField& w_bar, const WeightField& w_hat, int k);

void write_diagnostics_csv(std::ostream& out, std::span<const IterationStat> stats);

}  // namespace v2vsim
