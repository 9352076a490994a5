#include "v2vsim/network.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <string>

#include <nlohmann/json.hpp>

#include "v2vsim/errors.hpp"

namespace v2vsim {

double distance(Point a, Point b) { return std::hypot(a.x - b.x, a.y - b.y); }

Network::Network(std::vector<Junction> junctions, std::vector<Road> roads)
    : junctions_(std::move(junctions)), roads_(std::move(roads)) {
  for (std::size_t i = 0; i < junctions_.size(); ++i) {
    if (junctions_[i].id != static_cast<JunctionId>(i)) {
      throw ParameterError("junction ids must be dense and ordered, got " +
                           std::to_string(junctions_[i].id) + " at position " +
                           std::to_string(i));
    }
  }
  incoming_.assign(junctions_.size(), {});
  outgoing_.assign(junctions_.size(), {});
  min_length_ = roads_.empty() ? 0.0 : std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < roads_.size(); ++i) {
    const Road& r = roads_[i];
    if (r.id != static_cast<RoadId>(i)) {
      throw ParameterError("road ids must be dense and ordered, got " + std::to_string(r.id));
    }
    if (!has_junction(r.from) || !has_junction(r.to)) {
      throw ParameterError("road " + std::to_string(r.id) + " references an unknown junction");
    }
    if (r.from == r.to) {
      throw ParameterError("road " + std::to_string(r.id) + " is a self-loop");
    }
    if (!(r.length > 0.0) || !std::isfinite(r.length)) {
      throw ParameterError("road " + std::to_string(r.id) + " must have positive length");
    }
    outgoing_[r.from].push_back(r.id);
    incoming_[r.to].push_back(r.id);
    min_length_ = std::min(min_length_, r.length);
  }
}

const Junction& Network::junction(JunctionId j) const {
  if (!has_junction(j)) throw LookupError("unknown junction " + std::to_string(j));
  return junctions_[j];
}

const Road& Network::road(RoadId r) const {
  if (!has_road(r)) throw LookupError("unknown road " + std::to_string(r));
  return roads_[r];
}

std::span<const RoadId> Network::incoming(JunctionId j) const {
  if (!has_junction(j)) throw LookupError("unknown junction " + std::to_string(j));
  return incoming_[j];
}

std::span<const RoadId> Network::outgoing(JunctionId j) const {
  if (!has_junction(j)) throw LookupError("unknown junction " + std::to_string(j));
  return outgoing_[j];
}

JunctionId manhattan_junction(int side, int row, int col) { return row * side + col; }

Network build_manhattan(int side, double road_length) {
  if (side < 2) throw ParameterError("manhattan grid needs side >= 2");
  if (!(road_length > 0.0) || !std::isfinite(road_length)) {
    throw ParameterError("manhattan grid needs a positive road length");
  }
  std::vector<Junction> junctions;
  junctions.reserve(static_cast<std::size_t>(side) * side);
  for (int row = 0; row < side; ++row) {
    for (int col = 0; col < side; ++col) {
      junctions.push_back({manhattan_junction(side, row, col),
                           {col * road_length, row * road_length}});
    }
  }

  std::vector<Road> roads;
  roads.reserve(4u * side * (side - 1));
  auto add = [&](JunctionId from, JunctionId to) {
    roads.push_back({static_cast<RoadId>(roads.size()), from, to, road_length});
  };
  for (int row = 0; row < side; ++row)
    for (int col = 0; col + 1 < side; ++col)
      add(manhattan_junction(side, row, col), manhattan_junction(side, row, col + 1));
  for (int row = 0; row < side; ++row)
    for (int col = 0; col + 1 < side; ++col)
      add(manhattan_junction(side, row, col + 1), manhattan_junction(side, row, col));
  for (int row = 0; row + 1 < side; ++row)
    for (int col = 0; col < side; ++col)
      add(manhattan_junction(side, row, col), manhattan_junction(side, row + 1, col));
  for (int row = 0; row + 1 < side; ++row)
    for (int col = 0; col < side; ++col)
      add(manhattan_junction(side, row + 1, col), manhattan_junction(side, row, col));

  return Network(std::move(junctions), std::move(roads));
}

Network build_simple_eleven() {
  std::vector<Junction> junctions = {
      {0, {-100.0, -100.0}},  // source of roads 8 and 6
      {1, {0.0, 0.0}},        // fork
      {2, {100.0, 0.0}},      // merge
      {3, {200.0, 0.0}},
      {4, {300.0, 0.0}},  // destination
      {5, {0.0, 100.0}},
      {6, {150.0, 100.0}},
      {7, {300.0, 100.0}},
      {8, {100.0, -100.0}},
  };
  const std::vector<std::pair<JunctionId, JunctionId>> ends = {
      {1, 2},  // 0: fork -> merge (short route)
      {1, 5},  // 1: fork -> long route
      {8, 2},  // 2: feeder into the merge
      {6, 7},  // 3
      {7, 4},  // 4
      {3, 4},  // 5
      {0, 8},  // 6: feeder, continues on 2
      {2, 3},  // 7: shared bottleneck
      {0, 1},  // 8
      {5, 6},  // 9
      {4, 0},  // 10: return road
  };
  std::vector<Road> roads;
  for (std::size_t i = 0; i < ends.size(); ++i) {
    const auto [from, to] = ends[i];
    roads.push_back({static_cast<RoadId>(i), from, to,
                     distance(junctions[from].position, junctions[to].position)});
  }
  return Network(std::move(junctions), std::move(roads));
}

Point embed_position(const Network& net, RoadId r, double x) {
  const Road& road = net.road(r);
  const Point a = net.junction(road.from).position;
  const Point b = net.junction(road.to).position;
  const double f = std::clamp(x / road.length, 0.0, 1.0);
  return {a.x + f * (b.x - a.x), a.y + f * (b.y - a.y)};
}

namespace {

std::vector<bool> reach(const Network& net, JunctionId start, bool forward) {
  std::vector<bool> seen(net.junction_count(), false);
  std::queue<JunctionId> todo;
  seen[start] = true;
  todo.push(start);
  while (!todo.empty()) {
    const JunctionId j = todo.front();
    todo.pop();
    for (RoadId r : forward ? net.outgoing(j) : net.incoming(j)) {
      const JunctionId k = forward ? net.road(r).to : net.road(r).from;
      if (!seen[k]) {
        seen[k] = true;
        todo.push(k);
      }
    }
  }
  return seen;
}

}  // namespace

bool is_strongly_connected(const Network& net) {
  if (net.junction_count() == 0) return true;
  const auto fwd = reach(net, 0, true);
  const auto bwd = reach(net, 0, false);
  return std::all_of(fwd.begin(), fwd.end(), [](bool b) { return b; }) &&
         std::all_of(bwd.begin(), bwd.end(), [](bool b) { return b; });
}

std::optional<RoadId> find_road(const Network& net, JunctionId from, JunctionId to) {
  for (RoadId r : net.outgoing(from)) {
    if (net.road(r).to == to) return r;
  }
  return std::nullopt;
}

std::vector<std::vector<RoadId>> simple_paths(const Network& net, JunctionId origin,
                                              JunctionId destination) {
  std::vector<std::vector<RoadId>> out;
  if (origin == destination) return out;
  std::vector<char> on_path(net.junction_count(), 0);
  std::vector<RoadId> path;
  auto dfs = [&](auto&& self, JunctionId j) -> void {
    if (j == destination) {
      out.push_back(path);
      return;
    }
    on_path[j] = 1;
    for (RoadId r : net.outgoing(j)) {
      const JunctionId next = net.road(r).to;
      if (on_path[next]) continue;
      path.push_back(r);
      self(self, next);
      path.pop_back();
    }
    on_path[j] = 0;
  };
  dfs(dfs, origin);
  return out;
}

std::string network_to_json(const Network& net) {
  nlohmann::json doc;
  doc["junctions"] = nlohmann::json::array();
  for (const Junction& j : net.junctions()) {
    doc["junctions"].push_back({{"id", j.id}, {"x", j.position.x}, {"y", j.position.y}});
  }
  doc["roads"] = nlohmann::json::array();
  for (const Road& r : net.roads()) {
    doc["roads"].push_back({{"id", r.id}, {"from", r.from}, {"to", r.to}, {"length", r.length}});
  }
  return doc.dump(2);
}

Network network_from_json(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParameterError(std::string("network document is not valid JSON: ") + e.what());
  }
  try {
    std::vector<Junction> junctions;
    for (const auto& j : doc.at("junctions")) {
      junctions.push_back({j.at("id").get<JunctionId>(), {j.at("x").get<double>(), j.at("y").get<double>()}});
    }
    std::vector<Road> roads;
    for (const auto& r : doc.at("roads")) {
      roads.push_back({r.at("id").get<RoadId>(), r.at("from").get<JunctionId>(),
                       r.at("to").get<JunctionId>(), r.at("length").get<double>()});
    }
    auto by_id = [](const auto& a, const auto& b) { return a.id < b.id; };
    std::sort(junctions.begin(), junctions.end(), by_id);
    std::sort(roads.begin(), roads.end(), by_id);
    return Network(std::move(junctions), std::move(roads));
  } catch (const nlohmann::json::exception& e) {
    throw ParameterError(std::string("malformed network document: ") + e.what());
  }
}

}  // namespace v2vsim
