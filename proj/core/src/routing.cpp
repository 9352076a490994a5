#include "v2vsim/routing.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <ostream>
#include <string>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "v2vsim/errors.hpp"

namespace v2vsim {

WeightMethod parse_weight_method(std::string_view tag) {
  if (tag == "M1" || tag == "m1") return WeightMethod::M1;
  if (tag == "M2" || tag == "m2") return WeightMethod::M2;
  if (tag == "M3" || tag == "m3") return WeightMethod::M3;
  throw ParameterError("unknown weight method '" + std::string(tag) + "'");
}

std::string_view to_string(WeightMethod m) {
  switch (m) {
    case WeightMethod::M1: return "M1";
    case WeightMethod::M2: return "M2";
    case WeightMethod::M3: return "M3";
  }
  return "M3";
}

WeightField::WeightField(std::int64_t slices, std::size_t roads, double dt)
    : slices_(slices), roads_(roads), dt_(dt), values_(static_cast<std::size_t>(slices) * roads, 0.0) {
  if (slices < 1) throw ParameterError("a weight field needs at least one slice");
  if (!(dt > 0.0)) throw ParameterError("a weight field needs a positive time step");
}

WeightField WeightField::constant(std::span<const double> w, std::int64_t slices, double dt) {
  WeightField field(slices, w.size(), dt);
  for (std::int64_t k = 0; k < slices; ++k) std::copy(w.begin(), w.end(), field.slice(k).begin());
  return field;
}

ValueFunction::ValueFunction(std::size_t junctions, JunctionId destination, std::int64_t first_slice,
                             std::int64_t slices)
    : junctions_(junctions),
      destination_(destination),
      first_slice_(first_slice),
      slices_(slices),
      values_(junctions * static_cast<std::size_t>(slices), kInfinity) {}

std::vector<double> static_weights(const Network& net, double v_max) {
  if (!(v_max > 0.0)) throw ParameterError("v_max must be positive");
  std::vector<double> w(net.road_count());
  for (const Road& r : net.roads()) w[r.id] = r.length / v_max;
  return w;
}

std::vector<double> instantaneous_weights(const Network& net, std::span<const CarState> visible,
                                          const WeightConfig& cfg, double t,
                                          std::span<const Traversal> history) {
  std::vector<double> w = static_weights(net, cfg.v_max);
  switch (cfg.method) {
    case WeightMethod::M3: {
      std::vector<double> speed_sum(net.road_count(), 0.0);
      std::vector<int> count(net.road_count(), 0);
      for (const CarState& c : visible) {
        if (!c.active) continue;
        speed_sum[c.road] += c.speed;
        ++count[c.road];
      }
      for (const Road& r : net.roads()) {
        if (count[r.id] == 0) continue;
        const double mean = speed_sum[r.id] / count[r.id];
        w[r.id] = mean > 0.0 ? std::min(r.length / mean, cfg.cap) : cfg.cap;
      }
      break;
    }
    case WeightMethod::M2: {
      std::vector<int> count(net.road_count(), 0);
      for (const CarState& c : visible) {
        if (c.active) ++count[c.road];
      }
      // kappa_r = l / L_r: each car on the road adds one car length of delay.
      for (const Road& r : net.roads()) {
        if (count[r.id] == 0) continue;
        w[r.id] = std::min((r.length + cfg.car_length * count[r.id]) / cfg.v_max, cfg.cap);
      }
      break;
    }
    case WeightMethod::M1: {
      const double rate = std::log(2.0) / cfg.m1_half_life;
      std::vector<double> num(net.road_count(), 0.0);
      std::vector<double> den(net.road_count(), 0.0);
      for (const Traversal& tr : history) {
        if (tr.exit_time > t) continue;
        const double weight = std::exp(-rate * (t - tr.exit_time));
        num[tr.road] += weight * tr.duration;
        den[tr.road] += weight;
      }
      for (const Road& r : net.roads()) {
        if (den[r.id] > 0.0) {
          w[r.id] = std::clamp(num[r.id] / den[r.id], r.length / cfg.v_max, cfg.cap);
        }
      }
      break;
    }
  }
  return w;
}

ValueFunction solve_static_value(const Network& net, std::span<const double> w,
                                 JunctionId destination) {
  if (!net.has_junction(destination)) {
    throw LookupError("unknown destination junction " + std::to_string(destination));
  }
  if (w.size() != net.road_count()) throw ParameterError("one weight per road is required");
  ValueFunction v(net.junction_count(), destination, 0, 1);
  v.at(0, destination) = 0.0;

  // Label-correcting fixed-point iteration: a junction is revisited whenever
  // the value of a downstream junction improves.
  std::deque<JunctionId> work{destination};
  std::vector<char> queued(net.junction_count(), 0);
  queued[destination] = 1;
  while (!work.empty()) {
    const JunctionId e = work.front();
    work.pop_front();
    queued[e] = 0;
    const double ve = v.at(0, e);
    for (RoadId r : net.incoming(e)) {
      const JunctionId j = net.road(r).from;
      if (j == destination || w[r] == kInfinity) continue;
      const double candidate = ve + w[r];
      if (candidate < v.at(0, j)) {
        v.at(0, j) = candidate;
        if (!queued[j]) {
          queued[j] = 1;
          work.push_back(j);
        }
      }
    }
  }
  return v;
}

ValueFunction solve_reactive_value(const Network& net, std::span<const double> w_now,
                                   JunctionId destination) {
  return solve_static_value(net, w_now, destination);
}

namespace {

constexpr double kSliceSnap = 1e-9;

/// V at the off-grid time (slice position s, in units of dt) by linear
/// interpolation; +inf beyond the last slice or next to an infinite value.
double value_at(const ValueFunction& v, double s, JunctionId j) {
  const std::int64_t last = v.first_slice() + v.slices() - 1;
  double base = std::floor(s);
  double frac = s - base;
  if (frac < kSliceSnap) {
    frac = 0.0;
  } else if (frac > 1.0 - kSliceSnap) {
    base += 1.0;
    frac = 0.0;
  }
  const auto i = static_cast<std::int64_t>(base);
  if (i > last || (i == last && frac > 0.0)) return kInfinity;
  const double v0 = v.at(i - v.first_slice(), j);
  if (frac == 0.0) return v0;
  const double v1 = v.at(i + 1 - v.first_slice(), j);
  if (v0 == kInfinity || v1 == kInfinity) return kInfinity;
  return v0 + frac * (v1 - v0);
}

double dynamic_candidate(const Network& net, const ValueFunction& v, const WeightField& w,
                         std::int64_t k, RoadId r) {
  const double wr = w.at(k, r);
  if (wr == kInfinity) return kInfinity;
  const double s = static_cast<double>(k) + wr / w.dt();
  const double ahead = value_at(v, s, net.road(r).to);
  if (ahead == kInfinity) return kInfinity;
  return ahead + wr;
}

}  // namespace

ValueFunction solve_dynamic_value(const Network& net, const WeightField& w, JunctionId destination,
                                  std::int64_t from_slice) {
  if (!net.has_junction(destination)) {
    throw LookupError("unknown destination junction " + std::to_string(destination));
  }
  if (w.road_count() != net.road_count()) throw ParameterError("one weight per road is required");
  const std::int64_t last = w.slices() - 1;
  if (from_slice < 0 || from_slice > last) {
    throw ParameterError("first slice outside the weight field");
  }
  for (std::int64_t k = from_slice; k <= last; ++k) {
    for (double x : w.slice(k)) {
      if (!(x > w.dt())) {
        throw ConfigError(
            "time step must be shorter than every road travel time (dt < min L_r / v_max)");
      }
    }
  }
  ValueFunction v(net.junction_count(), destination, from_slice, last - from_slice + 1);
  for (std::int64_t k = last; k >= from_slice; --k) {
    const std::int64_t idx = k - from_slice;
    v.at(idx, destination) = 0.0;
    if (k == last) continue;  // terminal condition: +inf off the destination
    for (const Junction& jn : net.junctions()) {
      if (jn.id == destination) continue;
      double best = kInfinity;
      for (RoadId r : net.outgoing(jn.id)) {
        best = std::min(best, dynamic_candidate(net, v, w, k, r));
      }
      v.at(idx, jn.id) = best;
    }
  }
  return v;
}

RoutingPolicy extract_policy(const Network& net, const ValueFunction& v, std::span<const double> w) {
  RoutingPolicy policy(net.junction_count(), 0, 1);
  for (const Junction& jn : net.junctions()) {
    if (jn.id == v.destination()) {
      policy.set(0, jn.id, RoutingPolicy::kTerminal);
      continue;
    }
    double best = kInfinity;
    RoadId arg = RoutingPolicy::kUndefined;
    for (RoadId r : net.outgoing(jn.id)) {
      const double ahead = v.at(0, net.road(r).to);
      if (ahead == kInfinity || w[r] == kInfinity) continue;
      const double candidate = ahead + w[r];
      if (candidate < best) {
        best = candidate;
        arg = r;
      }
    }
    policy.set(0, jn.id, arg);
  }
  return policy;
}

RoutingPolicy extract_policy(const Network& net, const ValueFunction& v, const WeightField& w) {
  RoutingPolicy policy(net.junction_count(), v.first_slice(), v.slices());
  for (std::int64_t idx = 0; idx < v.slices(); ++idx) {
    const std::int64_t k = v.first_slice() + idx;
    for (const Junction& jn : net.junctions()) {
      if (jn.id == v.destination()) {
        policy.set(idx, jn.id, RoutingPolicy::kTerminal);
        continue;
      }
      if (k == w.slices() - 1) continue;
      double best = kInfinity;
      RoadId arg = RoutingPolicy::kUndefined;
      for (RoadId r : net.outgoing(jn.id)) {
        const double candidate = dynamic_candidate(net, v, w, k, r);
        if (candidate < best) {
          best = candidate;
          arg = r;
        }
      }
      policy.set(idx, jn.id, arg);
    }
  }
  return policy;
}

RoutingPolicy free_flow_policy(const Network& net, JunctionId destination, double v_max) {
  const std::vector<double> w = static_weights(net, v_max);
  return extract_policy(net, solve_static_value(net, w, destination), w);
}

void write_value_csv(std::ostream& out, const ValueFunction& v, double dt) {
  out << "t";
  for (std::size_t j = 0; j < v.junction_count(); ++j) out << ",j" << j;
  out << '\n';
  for (std::int64_t idx = 0; idx < v.slices(); ++idx) {
    fmt::print(out, "{:.6f}", static_cast<double>(v.first_slice() + idx) * dt);
    for (std::size_t j = 0; j < v.junction_count(); ++j) {
      fmt::print(out, ",{:.10g}", v.at(idx, static_cast<JunctionId>(j)));
    }
    out << '\n';
  }
}

void write_weight_csv(std::ostream& out, const WeightField& w) {
  out << "t";
  for (std::size_t r = 0; r < w.road_count(); ++r) out << ",r" << r;
  out << '\n';
  for (std::int64_t k = 0; k < w.slices(); ++k) {
    fmt::print(out, "{:.6f}", static_cast<double>(k) * w.dt());
    for (double x : w.slice(k)) fmt::print(out, ",{:.10g}", x);
    out << '\n';
  }
}

}  // namespace v2vsim
