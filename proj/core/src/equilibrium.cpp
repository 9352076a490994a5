#include "v2vsim/equilibrium.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <string>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "v2vsim/errors.hpp"

namespace v2vsim {

namespace {

constexpr double kHorizonSearchLimit = 36000.0;
constexpr double kMinHorizon = 120.0;

std::vector<const RoutingPolicy*> raw(std::span<const PolicyPtr> policies) {
  std::vector<const RoutingPolicy*> out(policies.size());
  std::transform(policies.begin(), policies.end(), out.begin(),
                 [](const PolicyPtr& p) { return p.get(); });
  return out;
}

std::vector<PolicyPtr> per_car(std::span<const PolicyPtr> by_destination,
                               std::span<const Trip> trips) {
  std::vector<PolicyPtr> out;
  out.reserve(trips.size());
  for (const Trip& t : trips) out.push_back(by_destination[t.destination]);
  return out;
}

}  // namespace

OdMode parse_od_mode(std::string_view tag) {
  if (tag == "start-roads" || tag == "fixed") return OdMode::StartRoads;
  if (tag == "random-od") return OdMode::RandomOd;
  if (tag == "random-origin") return OdMode::RandomOriginFixedDestination;
  throw ParameterError("unknown OD mode '" + std::string(tag) + "'");
}

std::string_view to_string(OdMode m) {
  switch (m) {
    case OdMode::StartRoads: return "start-roads";
    case OdMode::RandomOd: return "random-od";
    case OdMode::RandomOriginFixedDestination: return "random-origin";
  }
  return "random-od";
}

std::uint64_t uniform_index(std::mt19937_64& rng, std::uint64_t n) {
  if (n == 0) throw ParameterError("uniform_index needs a non-empty range");
  // Largest multiple of n representable in 64 bits; draws above it are rejected.
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % n;
}

std::vector<Trip> draw_trips(const Network& net, std::size_t cars, const OdSpec& spec,
                             std::uint64_t seed) {
  const std::uint64_t nj = net.junction_count();
  if (nj < 2) throw ScenarioError("random trips need at least two junctions");
  std::mt19937_64 rng(seed);
  std::vector<Trip> trips(cars);
  for (Trip& trip : trips) {
    switch (spec.mode) {
      case OdMode::StartRoads: {
        if (spec.start_roads.empty()) throw ScenarioError("no start roads given");
        const RoadId r = spec.start_roads[uniform_index(rng, spec.start_roads.size())];
        trip = {net.road(r).from, spec.destination, r};
        break;
      }
      case OdMode::RandomOd: {
        const auto o = static_cast<JunctionId>(uniform_index(rng, nj));
        auto d = static_cast<JunctionId>(uniform_index(rng, nj - 1));
        if (d >= o) ++d;
        trip = {o, d, -1};
        break;
      }
      case OdMode::RandomOriginFixedDestination: {
        if (!net.has_junction(spec.destination)) throw ScenarioError("unknown destination");
        auto o = static_cast<JunctionId>(uniform_index(rng, nj - 1));
        if (o >= spec.destination) ++o;
        trip = {o, spec.destination, -1};
        break;
      }
    }
  }
  return trips;
}

double auto_horizon(const Network& net, std::span<const Trip> trips, const SimParams& params) {
  Scenario probe;
  probe.net = std::shared_ptr<const Network>(&net, [](const Network*) {});
  probe.trips.assign(trips.begin(), trips.end());
  probe.params = params;
  probe.t_fin = std::ceil(kHorizonSearchLimit / params.dt) * params.dt;
  const RunResult bb = run_bb(probe);
  if (!bb.terminated) return probe.t_fin;
  const double makespan =
      bb.per_car_tt.empty() ? 0.0 : *std::max_element(bb.per_car_tt.begin(), bb.per_car_tt.end());
  return std::ceil(std::max(3.0 * makespan, kMinHorizon) / params.dt) * params.dt;
}

Scenario resolved(const Scenario& scn) {
  if (!scn.net) throw ScenarioError("scenario has no network");
  if (!(scn.params.dt > 0.0) || !(scn.params.v_max > 0.0) || !(scn.params.car_length > 0.0)) {
    throw ParameterError("dt, v_max and car length must be positive");
  }
  Scenario out = scn;
  if (out.t_fin <= 0.0) {
    out.t_fin = auto_horizon(*out.net, out.trips, out.params);
  } else {
    out.t_fin = std::ceil(out.t_fin / out.params.dt - 1e-9) * out.params.dt;
  }
  return out;
}

std::int64_t horizon_steps(const Scenario& scn) {
  return static_cast<std::int64_t>(std::llround(scn.t_fin / scn.params.dt));
}

WeightConfig weight_config(const Scenario& scn) {
  WeightConfig cfg;
  cfg.method = scn.method;
  cfg.v_max = scn.params.v_max;
  cfg.car_length = scn.params.car_length;
  cfg.cap = 10.0 * scn.t_fin;
  return cfg;
}

RunRecorder::RunRecorder(const SimState& initial, std::ostream* trajectory) {
  routes_.resize(initial.cars.size());
  for (std::size_t i = 0; i < initial.cars.size(); ++i) {
    routes_[i].push_back({initial.cars[i].road, initial.step});
  }
  if (trajectory) {
    writer_ = std::make_unique<TrajectoryWriter>(*trajectory);
    writer_->write(initial);
  }
}

void RunRecorder::after_step(const SimState& state, const StepEvents& events) {
  for (const auto& [i, entry] : events.entries) routes_[i].push_back(entry);
  if (writer_) writer_->write(state, events.arrivals);
}

RunResult RunRecorder::finish(const SimState& state, double t_fin) {
  RunResult res;
  res.t_fin = t_fin;
  res.per_car_tt.reserve(state.cars.size());
  for (const CarState& c : state.cars) {
    if (c.travel_time) {
      res.per_car_tt.push_back(*c.travel_time);
    } else {
      res.per_car_tt.push_back(t_fin);
      res.terminated = false;
    }
  }
  for (double tt : res.per_car_tt) res.ttt += tt;
  res.routes = std::move(routes_);
  return res;
}

std::vector<PolicyPtr> bb_policies(const Network& net, std::span<const Trip> trips, double v_max) {
  std::vector<PolicyPtr> out(net.junction_count());
  const std::vector<double> w = static_weights(net, v_max);
  for (const Trip& t : trips) {
    if (!net.has_junction(t.destination)) throw ScenarioError("unknown destination");
    if (out[t.destination]) continue;
    out[t.destination] = std::make_shared<const RoutingPolicy>(
        extract_policy(net, solve_static_value(net, w, t.destination), w));
  }
  return out;
}

RunResult run_fixed_policies(const Scenario& scn, std::span<const PolicyPtr> policies,
                             const RunOptions& opts, WeightField* snapshot) {
  const Network& net = *scn.net;
  const std::int64_t k_fin = horizon_steps(scn);
  const WeightConfig cfg = weight_config(scn);
  const std::vector<const RoutingPolicy*> ptrs = raw(policies);

  SimState state = spawn(net, scn.trips, ptrs, scn.params);
  state.record_traversals = scn.method == WeightMethod::M1;
  if (snapshot) *snapshot = WeightField(k_fin + 1, net.road_count(), scn.params.dt);
  auto take_snapshot = [&] {
    if (!snapshot) return;
    const std::vector<double> w =
        instantaneous_weights(net, state.cars, cfg, state.time(), state.traversals);
    std::copy(w.begin(), w.end(), snapshot->slice(state.step).begin());
  };

  RunRecorder recorder(state, opts.trajectory);
  StepEvents events;
  while (state.active_count() > 0 && state.step < k_fin) {
    take_snapshot();
    events.clear();
    step(state, ptrs, scn.params, &events);
    recorder.after_step(state, events);
  }
  if (snapshot) {
    const std::int64_t last = state.step;
    for (std::int64_t k = last; k <= k_fin; ++k) {
      const std::vector<double> w = instantaneous_weights(
          net, state.cars, cfg, static_cast<double>(k) * scn.params.dt, state.traversals);
      std::copy(w.begin(), w.end(), snapshot->slice(k).begin());
    }
  }
  RunResult res = recorder.finish(state, scn.t_fin);
  res.policies.assign(policies.begin(), policies.end());
  return res;
}

RunResult run_bb(const Scenario& scn_in, const RunOptions& opts) {
  const Scenario scn = resolved(scn_in);
  const auto by_dest = bb_policies(*scn.net, scn.trips, scn.params.v_max);
  return run_fixed_policies(scn, per_car(by_dest, scn.trips), opts);
}

RunResult run_rue(const Scenario& scn_in, const RunOptions& opts) {
  const Scenario scn = resolved(scn_in);
  const Network& net = *scn.net;
  const std::int64_t k_fin = horizon_steps(scn);
  const WeightConfig cfg = weight_config(scn);

  const auto bb = bb_policies(net, scn.trips, scn.params.v_max);
  std::vector<const RoutingPolicy*> ptrs = raw(per_car(bb, scn.trips));
  SimState state = spawn(net, scn.trips, ptrs, scn.params);
  state.record_traversals = scn.method == WeightMethod::M1;

  std::vector<RoutingPolicy> by_dest(net.junction_count());
  std::vector<char> needed(net.junction_count());
  RunRecorder recorder(state, opts.trajectory);
  StepEvents events;
  while (state.active_count() > 0 && state.step < k_fin) {
    const std::vector<double> w =
        instantaneous_weights(net, state.cars, cfg, state.time(), state.traversals);
    std::fill(needed.begin(), needed.end(), 0);
    for (const CarState& c : state.cars) {
      if (c.active) needed[c.destination] = 1;
    }
    for (std::size_t d = 0; d < needed.size(); ++d) {
      if (!needed[d]) continue;
      const auto dest = static_cast<JunctionId>(d);
      by_dest[d] = extract_policy(net, solve_reactive_value(net, w, dest), w);
    }
    for (std::size_t i = 0; i < state.cars.size(); ++i) {
      ptrs[i] = &by_dest[state.cars[i].destination];
    }
    events.clear();
    step(state, ptrs, scn.params, &events);
    recorder.after_step(state, events);
  }
  return recorder.finish(state, scn.t_fin);
}

double msa_update(WeightField& w_bar, const WeightField& w_hat, int k) {
  if (k < 1) throw ParameterError("MSA iteration index starts at 1");
  if (w_bar.values().size() != w_hat.values().size()) {
    throw ParameterError("MSA operands have different shapes");
  }
  auto bar = w_bar.values();
  auto hat = w_hat.values();
  double change = 0.0;
  if (k == 1) {
    std::copy(hat.begin(), hat.end(), bar.begin());
    return change;
  }
  const double kk = static_cast<double>(k);
  for (std::size_t i = 0; i < bar.size(); ++i) {
    const double next = ((kk - 1.0) * bar[i] + hat[i]) / kk;
    change = std::max(change, std::abs(next - bar[i]));
    bar[i] = next;
  }
  return change;
}

RunResult run_due(const Scenario& scn_in, const RunOptions& opts) {
  if (opts.max_iterations < 1) throw ParameterError("DUE needs at least one iteration");
  const Scenario scn = resolved(scn_in);
  const Network& net = *scn.net;
  const std::int64_t k_fin = horizon_steps(scn);
  const auto bb = bb_policies(net, scn.trips, scn.params.v_max);

  std::vector<PolicyPtr> policies = per_car(bb, scn.trips);
  WeightField w_bar(k_fin + 1, net.road_count(), scn.params.dt);
  WeightField w_hat;
  RunOptions load_opts;
  std::vector<IterationStat> stats;
  RunResult best;
  bool have_best = false;
  bool converged = false;
  double previous_ttt = 0.0;
  int k = 1;
  for (;; ++k) {
    RunResult load = run_fixed_policies(scn, policies, load_opts, &w_hat);
    stats.push_back({k, load.ttt, 0.0});
    if (k > 1 && std::abs(load.ttt - previous_ttt) <= opts.tolerance) {
      best = std::move(load);
      converged = true;
      break;
    }
    if (!have_best || load.ttt < best.ttt) {
      best = std::move(load);
      have_best = true;
    }
    if (k == opts.max_iterations) break;
    previous_ttt = stats.back().ttt;

    stats.back().max_weight_change = msa_update(w_bar, w_hat, k);
    std::vector<PolicyPtr> by_dest(net.junction_count());
    for (const Trip& t : scn.trips) {
      if (by_dest[t.destination]) continue;
      const ValueFunction v = solve_dynamic_value(net, w_bar, t.destination, 0);
      RoutingPolicy p = extract_policy(net, v, w_bar);
      p.set_fallback(bb[t.destination]);
      by_dest[t.destination] = std::make_shared<const RoutingPolicy>(std::move(p));
    }
    policies = per_car(by_dest, scn.trips);
  }

  if (opts.trajectory) {
    RunOptions trace = load_opts;
    trace.trajectory = opts.trajectory;
    best = run_fixed_policies(scn, best.policies, trace);
  }
  best.iterations = k;
  best.converged = converged;
  best.diagnostics = std::move(stats);
  if (opts.diagnostics) write_diagnostics_csv(*opts.diagnostics, best.diagnostics);
  return best;
}

void write_diagnostics_csv(std::ostream& out, std::span<const IterationStat> stats) {
  out << "iteration,ttt,max_weight_change\n";
  for (const IterationStat& s : stats) {
    fmt::print(out, "{},{:.6f},{:.6f}\n", s.iteration, s.ttt, s.max_weight_change);
  }
}

}  // namespace v2vsim
