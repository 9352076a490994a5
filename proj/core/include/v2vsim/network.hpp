#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace v2vsim {

using JunctionId = std::int32_t;
using RoadId = std::int32_t;

struct Point {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point&, const Point&) = default;
};

double distance(Point a, Point b);

struct Junction {
  JunctionId id = 0;
  Point position;
};

/// One-way road from `from` to `to`.
struct Road {
  RoadId id = 0;
  JunctionId from = 0;
  JunctionId to = 0;
  double length = 0.0;
};

/// Immutable road/junction graph with a planar embedding.
///
/// Ids are dense: junction i is junctions()[i], road r is roads()[r]. The
/// incidence lists are sorted by road id, which is what the routing code
/// relies on for its lowest-id tie break.
class Network {
 public:
  Network() = default;
  /// Validates ids, endpoints and lengths; throws ParameterError.
  Network(std::vector<Junction> junctions, std::vector<Road> roads);

  std::size_t junction_count() const { return junctions_.size(); }
  std::size_t road_count() const { return roads_.size(); }

  std::span<const Junction> junctions() const { return junctions_; }
  std::span<const Road> roads() const { return roads_; }

  const Junction& junction(JunctionId j) const;
  const Road& road(RoadId r) const;

  std::span<const RoadId> incoming(JunctionId j) const;
  std::span<const RoadId> outgoing(JunctionId j) const;

  double min_road_length() const { return min_length_; }

  bool has_junction(JunctionId j) const {
    return j >= 0 && static_cast<std::size_t>(j) < junctions_.size();
  }
  bool has_road(RoadId r) const {
    return r >= 0 && static_cast<std::size_t>(r) < roads_.size();
  }

 private:
  std::vector<Junction> junctions_;
  std::vector<Road> roads_;
  std::vector<std::vector<RoadId>> incoming_;
  std::vector<std::vector<RoadId>> outgoing_;
  double min_length_ = 0.0;
};

/// side x side grid, junction (row, col) has id row*side + col and sits at
/// (col*L, row*L). Every adjacent pair is joined by two opposite one-way
/// roads. Road ids: rightward, leftward, upward, downward, each row-major.
Network build_manhattan(int side, double road_length);

/// The 11-road test network. All traffic is headed to junction 4; road 8
/// feeds the fork (junction 1) where the short route 0-7-5 and the long route
/// 1-9-3-4 split; roads 6 and 2 feed the merge (junction 2) at the head of
/// road 7; road 10 closes the loop from the destination back to junction 0.
Network build_simple_eleven();

/// Manhattan junction helpers (row 0 is the bottom row).
JunctionId manhattan_junction(int side, int row, int col);

/// Point at arc length x along road r. Negative x (virtual spawn queue) maps
/// to the start junction; x beyond the road end maps to the end junction.
Point embed_position(const Network& net, RoadId r, double x);

bool is_strongly_connected(const Network& net);

/// Road from `from` to `to`, if any (lowest id when several exist).
std::optional<RoadId> find_road(const Network& net, JunctionId from, JunctionId to);

/// Every simple path (as road ids) from `origin` to `destination`, in
/// depth-first order over ascending road ids. Exponential; small networks only.
std::vector<std::vector<RoadId>> simple_paths(const Network& net, JunctionId origin,
                                              JunctionId destination);

/// {junctions:[{id,x,y}], roads:[{id,from,to,length}]}
std::string network_to_json(const Network& net);
Network network_from_json(std::string_view text);

}  // namespace v2vsim
