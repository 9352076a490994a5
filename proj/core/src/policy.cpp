#include "v2vsim/policy.hpp"

#include <algorithm>
#include <string>

#include "v2vsim/errors.hpp"

namespace v2vsim {

RoutingPolicy::RoutingPolicy(std::size_t junctions, std::int64_t first_slice, std::int64_t slices)
    : junctions_(junctions),
      first_slice_(first_slice),
      slices_(slices),
      table_(junctions * static_cast<std::size_t>(std::max<std::int64_t>(slices, 0)), kUndefined) {
  if (slices < 1) throw ParameterError("a routing policy needs at least one time slice");
}

RoutingPolicy RoutingPolicy::from_table(std::vector<RoadId> table) {
  RoutingPolicy p(table.size(), 0, 1);
  p.table_ = std::move(table);
  return p;
}

RoutingPolicy RoutingPolicy::from_path(const Network& net, std::span<const RoadId> path) {
  if (path.empty()) throw ScenarioError("forced path is empty");
  RoutingPolicy p(net.junction_count(), 0, 1);
  std::vector<bool> visited(net.junction_count(), false);
  JunctionId at_junction = net.road(path.front()).from;
  for (RoadId r : path) {
    const Road& road = net.road(r);
    if (road.from != at_junction) {
      throw ScenarioError("forced path is disconnected at road " + std::to_string(r));
    }
    if (visited[at_junction]) {
      throw ScenarioError("forced path revisits junction " + std::to_string(at_junction));
    }
    visited[at_junction] = true;
    p.set(0, at_junction, r);
    at_junction = road.to;
  }
  if (visited[at_junction]) {
    throw ScenarioError("forced path revisits junction " + std::to_string(at_junction));
  }
  p.set(0, at_junction, kTerminal);
  return p;
}

RoadId RoutingPolicy::next(std::int64_t step, JunctionId j) const {
  if (j < 0 || static_cast<std::size_t>(j) >= junctions_) {
    throw LookupError("policy lookup for unknown junction " + std::to_string(j));
  }
  const std::int64_t slice = std::clamp<std::int64_t>(step - first_slice_, 0, slices_ - 1);
  const RoadId r = at(slice, j);
  if (r == kUndefined && fallback_) return fallback_->next(step, j);
  return r;
}

}  // namespace v2vsim
