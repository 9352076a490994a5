#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

#include "v2vsim/dynamics.hpp"
#include "v2vsim/network.hpp"
#include "v2vsim/policy.hpp"

namespace v2vsim {

/// How a road's current travel time is estimated from the cars on it.
///   M1: time-discounted mean of recent traversal times,
///   M2: free-flow time inflated by the number of cars on the road,
///   M3: length / mean speed of the cars on the road (default).
enum class WeightMethod { M1, M2, M3 };

WeightMethod parse_weight_method(std::string_view tag);
std::string_view to_string(WeightMethod m);

struct WeightConfig {
  WeightMethod method = WeightMethod::M3;
  double v_max = 50.0 / 3.6;
  double car_length = 10.0;
  double cap = kInfinity;        ///< stands in for +inf on jammed roads
  double m1_half_life = 60.0;    ///< seconds
};

/// Travel-time weights on a time grid t_k = k * dt, k = 0 .. slices-1.
class WeightField {
 public:
  WeightField() = default;
  WeightField(std::int64_t slices, std::size_t roads, double dt);

  /// Same weights at every slice.
  static WeightField constant(std::span<const double> w, std::int64_t slices, double dt);

  double at(std::int64_t k, RoadId r) const { return values_[index(k, r)]; }
  double& at(std::int64_t k, RoadId r) { return values_[index(k, r)]; }
  std::span<const double> slice(std::int64_t k) const {
    return {values_.data() + index(k, 0), roads_};
  }
  std::span<double> slice(std::int64_t k) { return {values_.data() + index(k, 0), roads_}; }

  std::int64_t slices() const { return slices_; }
  std::size_t road_count() const { return roads_; }
  double dt() const { return dt_; }
  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }

 private:
  std::size_t index(std::int64_t k, RoadId r) const {
    return static_cast<std::size_t>(k) * roads_ + static_cast<std::size_t>(r);
  }
  std::int64_t slices_ = 0;
  std::size_t roads_ = 0;
  double dt_ = 0.0;
  std::vector<double> values_;
};

/// Minimum time to the destination per (slice, junction). Slices cover
/// [first_slice, first_slice + slices); a static solution has one slice.
class ValueFunction {
 public:
  ValueFunction(std::size_t junctions, JunctionId destination, std::int64_t first_slice,
                std::int64_t slices);

  double at(std::int64_t slice_index, JunctionId j) const {
    return values_[static_cast<std::size_t>(slice_index) * junctions_ + j];
  }
  double& at(std::int64_t slice_index, JunctionId j) {
    return values_[static_cast<std::size_t>(slice_index) * junctions_ + j];
  }

  JunctionId destination() const { return destination_; }
  std::int64_t first_slice() const { return first_slice_; }
  std::int64_t slices() const { return slices_; }
  std::size_t junction_count() const { return junctions_; }

 private:
  std::size_t junctions_;
  JunctionId destination_;
  std::int64_t first_slice_;
  std::int64_t slices_;
  std::vector<double> values_;
};

/// Free-flow weights L_r / v_max.
std::vector<double> static_weights(const Network& net, double v_max);

/// Weight of every road at time t computed from the `visible` cars only
/// (inactive entries are ignored). Empty roads get the free-flow weight;
/// weights are capped at cfg.cap. `history` feeds M1.
std::vector<double> instantaneous_weights(const Network& net, std::span<const CarState> visible,
                                          const WeightConfig& cfg, double t = 0.0,
                                          std::span<const Traversal> history = {});

/// Fixed point of V(j) = min_r { V(end r) + w(r) }, V(destination) = 0,
/// iterated from V = +inf until nothing changes. Roads with infinite weight
/// are impassable; unreachable junctions keep +inf.
ValueFunction solve_static_value(const Network& net, std::span<const double> w,
                                 JunctionId destination);

/// Same fixed point with the weights frozen at the current instant.
ValueFunction solve_reactive_value(const Network& net, std::span<const double> w_now,
                                   JunctionId destination);

/// Backward sweep of V(t,j) = min_r { V(t + w(t,r), end r) + w(t,r) } over the
/// grid of `w`, from its last slice (T_fin, where V = +inf off the
/// destination) down to `from_slice`. V at off-grid times is interpolated
/// linearly between neighbouring slices; anything past T_fin is +inf.
/// Throws ConfigError if some weight does not exceed dt (the sweep would need
/// same-slice values).
ValueFunction solve_dynamic_value(const Network& net, const WeightField& w, JunctionId destination,
                                  std::int64_t from_slice = 0);

/// Argmin policy of a static/reactive solution (lowest road id on ties,
/// kUndefined where every candidate is +inf, kTerminal at the destination).
RoutingPolicy extract_policy(const Network& net, const ValueFunction& v, std::span<const double> w);

/// Argmin policy of a dynamic solution, one slice per grid time.
RoutingPolicy extract_policy(const Network& net, const ValueFunction& v, const WeightField& w);

/// Static shortest-path policy on the empty network.
RoutingPolicy free_flow_policy(const Network& net, JunctionId destination, double v_max);

/// CSV dumps: one row per slice, one column per junction / road.
void write_value_csv(std::ostream& out, const ValueFunction& v, double dt);
void write_weight_csv(std::ostream& out, const WeightField& w);

}  // namespace v2vsim
