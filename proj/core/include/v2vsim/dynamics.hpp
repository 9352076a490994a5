#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "v2vsim/network.hpp"
#include "v2vsim/policy.hpp"

namespace v2vsim {

using CarId = std::int32_t;

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// Kinematic constants shared by every car. Defaults: dt = 0.6 s,
/// v_max = 50 km/h, car length 10 m (gap included).
struct SimParams {
  double dt = 0.6;
  double v_max = 50.0 / 3.6;
  double car_length = 10.0;
};

/// Origin/destination of one car. `start_road`, when set, pins the first
/// road (it must leave `origin`); otherwise the car's policy picks it.
struct Trip {
  JunctionId origin = 0;
  JunctionId destination = 0;
  RoadId start_road = -1;

  friend bool operator==(const Trip&, const Trip&) = default;
};

struct CarState {
  CarId id = 0;
  JunctionId origin = 0;
  JunctionId destination = 0;
  RoadId road = 0;
  double x = 0.0;      ///< arc length on `road`; negative while queued at spawn
  double speed = 0.0;  ///< velocity(headway) now, under the policies of the last step
  bool active = true;
  std::optional<double> travel_time;
  double entry_time = 0.0;  ///< when the car entered `road`
};

/// A completed road traversal (input of the M1 weight method).
struct Traversal {
  CarId car = 0;
  RoadId road = 0;
  double exit_time = 0.0;
  double duration = 0.0;
};

/// Positions of a population of cars at time step * dt.
///
/// In the real world cars[i].id == i. Fictitious worlds hold a subset of
/// cars, so code addresses cars by index and reports ids where needed.
struct SimState {
  const Network* net = nullptr;
  std::int64_t step = 0;
  double dt = 0.6;
  std::vector<CarState> cars;
  std::vector<Traversal> traversals;
  bool record_traversals = false;

  double time() const { return static_cast<double>(step) * dt; }
  std::size_t active_count() const;
};

/// Follow-the-leader velocity law: 0 below one car length, v_max(1 - l/delta)
/// above, v_max for a leader (delta = +inf).
double velocity(double delta, double car_length, double v_max);

/// Active cars of each road ordered rear to front by (x, -id): among
/// co-located cars the lower id counts as ahead.
class RoadOccupancy {
 public:
  RoadOccupancy() = default;
  explicit RoadOccupancy(const SimState& state) { rebuild(state); }

  void rebuild(const SimState& state);

  std::span<const std::int32_t> cars_on(RoadId r) const {
    return {order_.data() + offsets_[r], order_.data() + offsets_[r + 1]};
  }
  /// Position of car index `i` inside cars_on(its road).
  std::int32_t rank(std::size_t i) const { return rank_[i]; }

 private:
  std::vector<std::int32_t> offsets_;
  std::vector<std::int32_t> order_;
  std::vector<std::int32_t> rank_;
};

struct Leader {
  std::optional<std::size_t> car;  ///< index into state.cars
  double gap = kInfinity;          ///< arc length along the follower's route
};

/// Nearest active car strictly ahead of car index `i` along its route
/// (current road, then the roads `policy` picks at the current step), together
/// with the arc-length distance to it. Throws PolicyError if the policy has no
/// road for a junction on the way.
Leader find_leader(const SimState& state, std::size_t i, const RoutingPolicy& policy,
                   const RoadOccupancy& occupancy);

std::optional<std::size_t> find_next_car(const SimState& state, std::size_t i,
                                         const RoutingPolicy& policy);

/// Arc-length distance from car i to `next` along i's route, +inf for none.
double headway(const SimState& state, std::size_t i, std::optional<std::size_t> next,
               const RoutingPolicy& policy);

struct RoadEntry {
  RoadId road = 0;
  std::int64_t step = 0;  ///< state.step right after the car is on `road`

  friend bool operator==(const RoadEntry&, const RoadEntry&) = default;
};

/// What happened during one step, by car index.
struct StepEvents {
  std::vector<std::pair<std::size_t, RoadEntry>> entries;
  std::vector<std::size_t> arrivals;

  void clear() {
    entries.clear();
    arrivals.clear();
  }
};

/// One explicit Euler step. All headways come from the pre-step snapshot;
/// positions are then updated in index order. A car overshooting its road end
/// continues on the next road with the residual distance, or is deactivated if
/// the road ends at its destination (travel time = time after the step).
/// Afterwards `speed` holds velocity(headway) of the new positions.
void step(SimState& state, std::span<const RoutingPolicy* const> policies, const SimParams& params,
          StepEvents* events = nullptr);

/// Cars placed on their first road at t = 0. Cars sharing a first road are
/// stacked upstream of its start, the k-th (by id) at x = -k * car_length.
/// Initial speeds come from the velocity law under `policies`.
SimState spawn(const Network& net, std::span<const Trip> trips,
               std::span<const RoutingPolicy* const> policies, const SimParams& params);

/// Per-step velocities of all active cars under `policies` (used for spawn and
/// tests).
std::vector<double> current_velocities(const SimState& state,
                                       std::span<const RoutingPolicy* const> policies,
                                       const SimParams& params);

/// CSV trajectory stream: t,car,road,x,active
class TrajectoryWriter {
 public:
  explicit TrajectoryWriter(std::ostream& out);
  /// Rows for every active car plus the cars that arrived during the last step.
  void write(const SimState& state, std::span<const std::size_t> arrivals = {});

 private:
  std::ostream* out_;
};

}  // namespace v2vsim
