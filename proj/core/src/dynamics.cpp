#include "v2vsim/dynamics.hpp"

#include <algorithm>
#include <numeric>
#include <ostream>
#include <string>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "v2vsim/errors.hpp"

namespace v2vsim {

std::size_t SimState::active_count() const {
  return static_cast<std::size_t>(
      std::count_if(cars.begin(), cars.end(), [](const CarState& c) { return c.active; }));
}

double velocity(double delta, double car_length, double v_max) {
  if (delta < car_length) return 0.0;
  if (delta == kInfinity) return v_max;
  return v_max * (1.0 - car_length / delta);
}

void RoadOccupancy::rebuild(const SimState& state) {
  const std::size_t roads = state.net->road_count();
  offsets_.assign(roads + 1, 0);
  rank_.assign(state.cars.size(), -1);
  for (const CarState& c : state.cars) {
    if (c.active) ++offsets_[c.road + 1];
  }
  std::partial_sum(offsets_.begin(), offsets_.end(), offsets_.begin());
  order_.assign(offsets_.back(), 0);
  std::vector<std::int32_t> fill(offsets_.begin(), offsets_.end() - 1);
  for (std::size_t i = 0; i < state.cars.size(); ++i) {
    const CarState& c = state.cars[i];
    if (c.active) order_[fill[c.road]++] = static_cast<std::int32_t>(i);
  }
  const auto& cars = state.cars;
  for (std::size_t r = 0; r < roads; ++r) {
    auto first = order_.begin() + offsets_[r];
    auto last = order_.begin() + offsets_[r + 1];
    if (last - first > 1) {
      std::sort(first, last, [&cars](std::int32_t a, std::int32_t b) {
        if (cars[a].x != cars[b].x) return cars[a].x < cars[b].x;
        return cars[a].id > cars[b].id;
      });
    }
    for (auto it = first; it != last; ++it) {
      rank_[*it] = static_cast<std::int32_t>(it - first);
    }
  }
}

namespace {

RoadId checked_next(const RoutingPolicy& policy, std::int64_t step, JunctionId j, CarId car) {
  const RoadId r = policy.next(step, j);
  if (r < 0) {
    throw PolicyError("car " + std::to_string(car) + " has no road at junction " +
                      std::to_string(j) + " (step " + std::to_string(step) + ")");
  }
  return r;
}

}  // namespace

Leader find_leader(const SimState& state, std::size_t i, const RoutingPolicy& policy,
                   const RoadOccupancy& occupancy) {
  const Network& net = *state.net;
  const CarState& me = state.cars[i];
  RoadId road = me.road;
  auto here = occupancy.cars_on(road);
  const auto rank = static_cast<std::size_t>(occupancy.rank(i));
  if (rank + 1 < here.size()) {
    const std::size_t next = here[rank + 1];
    return {next, std::max(0.0, state.cars[next].x - me.x)};
  }
  double dist = net.road(road).length - me.x;
  const std::size_t max_hops = net.road_count();
  for (std::size_t hop = 0; hop < max_hops; ++hop) {
    const JunctionId j = net.road(road).to;
    if (j == me.destination) return {};
    road = checked_next(policy, state.step, j, me.id);
    auto cars = occupancy.cars_on(road);
    if (!cars.empty()) {
      const std::size_t next = cars.front();
      if (next == i) return {};
      return {next, std::max(0.0, dist + state.cars[next].x)};
    }
    dist += net.road(road).length;
  }
  return {};
}

std::optional<std::size_t> find_next_car(const SimState& state, std::size_t i,
                                         const RoutingPolicy& policy) {
  const RoadOccupancy occupancy(state);
  return find_leader(state, i, policy, occupancy).car;
}

double headway(const SimState& state, std::size_t i, std::optional<std::size_t> next,
               const RoutingPolicy& policy) {
  if (!next) return kInfinity;
  const Network& net = *state.net;
  const CarState& me = state.cars[i];
  const CarState& other = state.cars[*next];
  if (other.road == me.road && other.x >= me.x) return other.x - me.x;
  double dist = net.road(me.road).length - me.x;
  RoadId road = me.road;
  for (std::size_t hop = 0; hop < net.road_count(); ++hop) {
    road = checked_next(policy, state.step, net.road(road).to, me.id);
    if (road == other.road) return std::max(0.0, dist + other.x);
    dist += net.road(road).length;
  }
  throw LookupError("car " + std::to_string(other.id) + " is not on the route of car " +
                    std::to_string(me.id));
}

std::vector<double> current_velocities(const SimState& state,
                                       std::span<const RoutingPolicy* const> policies,
                                       const SimParams& params) {
  const RoadOccupancy occupancy(state);
  std::vector<double> v(state.cars.size(), 0.0);
  for (std::size_t i = 0; i < state.cars.size(); ++i) {
    if (!state.cars[i].active) continue;
    const Leader lead = find_leader(state, i, *policies[i], occupancy);
    v[i] = velocity(lead.gap, params.car_length, params.v_max);
  }
  return v;
}

void step(SimState& state, std::span<const RoutingPolicy* const> policies, const SimParams& params,
          StepEvents* events) {
  if (!(params.dt > 0.0)) throw ParameterError("time step must be positive");
  if (policies.size() != state.cars.size()) {
    throw ParameterError("one routing policy per car is required");
  }
  const Network& net = *state.net;
  const std::vector<double> v = current_velocities(state, policies, params);
  const double t_after = static_cast<double>(state.step + 1) * state.dt;

  for (std::size_t i = 0; i < state.cars.size(); ++i) {
    CarState& c = state.cars[i];
    if (!c.active) continue;
    c.x += params.dt * v[i];
    while (c.x >= net.road(c.road).length) {
      const Road& road = net.road(c.road);
      if (road.to == c.destination) {
        c.x = road.length;
        c.active = false;
        c.travel_time = t_after;
        if (events) events->arrivals.push_back(i);
        break;
      }
      const RoadId next = checked_next(*policies[i], state.step, road.to, c.id);
      if (state.record_traversals) {
        state.traversals.push_back({c.id, c.road, t_after, t_after - c.entry_time});
      }
      c.x -= road.length;
      c.road = next;
      c.entry_time = t_after;
      if (events) events->entries.push_back({i, RoadEntry{next, state.step + 1}});
    }
  }
  ++state.step;
  const std::vector<double> v_next = current_velocities(state, policies, params);
  for (std::size_t i = 0; i < state.cars.size(); ++i) {
    if (state.cars[i].active) state.cars[i].speed = v_next[i];
  }
}

SimState spawn(const Network& net, std::span<const Trip> trips,
               std::span<const RoutingPolicy* const> policies, const SimParams& params) {
  if (policies.size() != trips.size()) {
    throw ParameterError("one routing policy per car is required");
  }
  SimState state;
  state.net = &net;
  state.dt = params.dt;
  state.cars.reserve(trips.size());
  std::vector<int> queued(net.road_count(), 0);
  for (std::size_t i = 0; i < trips.size(); ++i) {
    const Trip& trip = trips[i];
    if (!net.has_junction(trip.origin) || !net.has_junction(trip.destination)) {
      throw ScenarioError("car " + std::to_string(i) + " has an unknown origin or destination");
    }
    if (trip.origin == trip.destination) {
      throw ScenarioError("car " + std::to_string(i) + " has origin == destination");
    }
    if (net.outgoing(trip.origin).empty()) {
      throw ScenarioError("origin " + std::to_string(trip.origin) + " has no outgoing road");
    }
    RoadId first = trip.start_road;
    if (first >= 0) {
      if (net.road(first).from != trip.origin) {
        throw ScenarioError("start road " + std::to_string(first) + " does not leave origin " +
                            std::to_string(trip.origin));
      }
    } else {
      first = checked_next(*policies[i], 0, trip.origin, static_cast<CarId>(i));
    }
    CarState c;
    c.id = static_cast<CarId>(i);
    c.origin = trip.origin;
    c.destination = trip.destination;
    c.road = first;
    c.x = -static_cast<double>(queued[first]++) * params.car_length;
    state.cars.push_back(c);
  }
  const std::vector<double> v = current_velocities(state, policies, params);
  for (std::size_t i = 0; i < state.cars.size(); ++i) state.cars[i].speed = v[i];
  return state;
}

TrajectoryWriter::TrajectoryWriter(std::ostream& out) : out_(&out) { *out_ << "t,car,road,x,active\n"; }

void TrajectoryWriter::write(const SimState& state, std::span<const std::size_t> arrivals) {
  const double t = state.time();
  for (std::size_t i : arrivals) {
    const CarState& c = state.cars[i];
    fmt::print(*out_, "{:.6f},{},{},{:.6f},0\n", t, c.id, c.road, c.x);
  }
  for (const CarState& c : state.cars) {
    if (c.active) fmt::print(*out_, "{:.6f},{},{},{:.6f},1\n", t, c.id, c.road, c.x);
  }
}

}  // namespace v2vsim
