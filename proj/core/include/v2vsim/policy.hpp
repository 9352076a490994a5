#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "v2vsim/network.hpp"

namespace v2vsim {

/// The nextroad function of one car: (time slice, junction) -> outgoing road.
///
/// Time is addressed by simulation step index. A policy covers the slices
/// [first_slice, first_slice + slices); lookups before the first slice use the
/// first one, lookups after the last use the last one. A static policy is the
/// special case slices == 1.
class RoutingPolicy {
 public:
  static constexpr RoadId kTerminal = -1;   ///< the junction is the destination
  static constexpr RoadId kUndefined = -2;  ///< outside the reachable set

  RoutingPolicy() = default;
  RoutingPolicy(std::size_t junctions, std::int64_t first_slice, std::int64_t slices);

  /// Static policy from one road per junction.
  static RoutingPolicy from_table(std::vector<RoadId> table);

  /// Static policy following `path` (a simple path of consecutive roads)
  /// and stopping at the end junction of its last road. Junctions off the
  /// path are undefined. Throws ScenarioError if the roads do not chain or a
  /// junction repeats.
  static RoutingPolicy from_path(const Network& net, std::span<const RoadId> path);

  RoadId next(std::int64_t step, JunctionId j) const;

  RoadId at(std::int64_t slice_index, JunctionId j) const {
    return table_[static_cast<std::size_t>(slice_index) * junctions_ + j];
  }
  void set(std::int64_t slice_index, JunctionId j, RoadId r) {
    table_[static_cast<std::size_t>(slice_index) * junctions_ + j] = r;
  }

  /// Consulted wherever this policy is undefined.
  void set_fallback(std::shared_ptr<const RoutingPolicy> fallback) { fallback_ = std::move(fallback); }

  std::int64_t first_slice() const { return first_slice_; }
  std::int64_t slices() const { return slices_; }
  std::size_t junction_count() const { return junctions_; }

  friend bool operator==(const RoutingPolicy& a, const RoutingPolicy& b) {
    return a.junctions_ == b.junctions_ && a.first_slice_ == b.first_slice_ &&
           a.slices_ == b.slices_ && a.table_ == b.table_;
  }

 private:
  std::size_t junctions_ = 0;
  std::int64_t first_slice_ = 0;
  std::int64_t slices_ = 0;
  std::vector<RoadId> table_;
  std::shared_ptr<const RoutingPolicy> fallback_;
};

using PolicyPtr = std::shared_ptr<const RoutingPolicy>;

}  // namespace v2vsim
