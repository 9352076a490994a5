#include "v2vsim/v2v.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <string>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "v2vsim/errors.hpp"

namespace v2vsim {

// ---------------------------------------------------------------- knowledge

const KnowledgeRecord* KnowledgeBase::find(CarId subject) const {
  auto it = std::lower_bound(records_.begin(), records_.end(), subject,
                             [](const KnowledgeRecord& r, CarId s) { return r.subject < s; });
  return it != records_.end() && it->subject == subject ? &*it : nullptr;
}

bool KnowledgeBase::offer(const KnowledgeRecord& r) {
  if (r.subject == owner_) return false;
  auto it = std::lower_bound(records_.begin(), records_.end(), r.subject,
                             [](const KnowledgeRecord& a, CarId s) { return a.subject < s; });
  if (it != records_.end() && it->subject == r.subject) {
    if (it->step >= r.step) return false;
    *it = r;
  } else {
    records_.insert(it, r);
  }
  ++version_;
  return true;
}

bool expired(std::int64_t step, std::int64_t now, double dt, double memory) {
  if (memory == kInfinity) return false;
  return static_cast<double>(now - step) * dt > memory + 1e-9;
}

std::size_t KnowledgeBase::forget(std::int64_t now, double dt, double memory) {
  const auto first = std::remove_if(records_.begin(), records_.end(), [&](const KnowledgeRecord& r) {
    return expired(r.step, now, dt, memory);
  });
  const auto dropped = static_cast<std::size_t>(records_.end() - first);
  records_.erase(first, records_.end());
  if (dropped > 0) ++version_;
  return dropped;
}

// ---------------------------------------------------------------- exchange

NowcastRefresh parse_nowcast_refresh(std::string_view tag) {
  if (tag == "every-step") return NowcastRefresh::EveryStep;
  if (tag == "at-junctions") return NowcastRefresh::AtJunctions;
  throw ParameterError("unknown nowcast refresh '" + std::string(tag) + "'");
}

void validate(const V2VParams& p) {
  if (!(p.range >= 0.0)) throw ParameterError("communication range must be >= 0");
  if (!(p.comm_pause >= 0.0) || p.comm_pause == kInfinity) {
    throw ParameterError("communication pause must be finite and >= 0");
  }
  if (!(p.memory >= 0.0)) throw ParameterError("memory must be >= 0");
}

std::vector<std::pair<std::size_t, std::size_t>> detect_rendezvous(const SimState& state,
                                                                   double range) {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  if (!(range > 0.0)) return pairs;
  std::vector<std::size_t> idx;
  std::vector<Point> where;
  for (std::size_t i = 0; i < state.cars.size(); ++i) {
    const CarState& c = state.cars[i];
    if (!c.active) continue;
    idx.push_back(i);
    where.push_back(embed_position(*state.net, c.road, c.x));
  }
  for (std::size_t a = 0; a < idx.size(); ++a) {
    for (std::size_t b = a + 1; b < idx.size(); ++b) {
      if (range == kInfinity || distance(where[a], where[b]) < range) {
        pairs.emplace_back(idx[a], idx[b]);
      }
    }
  }
  return pairs;
}

KnowledgeRecord observe(const SimState& state, std::size_t i, PolicyPtr planned_path) {
  const CarState& c = state.cars[i];
  KnowledgeRecord r;
  r.subject = c.id;
  r.step = state.step;
  r.timestamp = state.time();
  r.road = c.road;
  r.x = c.x;
  r.speed = c.speed;
  r.destination = c.destination;
  r.planned_path = std::move(planned_path);
  return r;
}

bool may_communicate(double last_comm, double t, double comm_pause) {
  return t - last_comm >= comm_pause - 1e-9;
}

namespace {

bool receive(KnowledgeBase& into, const KnowledgeBase& from_before, const SimState& state,
             const V2VParams& params) {
  bool changed = false;
  for (const KnowledgeRecord& r : from_before.records()) {
    if (expired(r.step, state.step, state.dt, params.memory)) continue;
    changed |= into.offer(r);
  }
  return changed;
}

}  // namespace

std::vector<char> exchange_batch(std::span<KnowledgeBase> kbs, const SimState& state,
                                 std::span<const std::pair<std::size_t, std::size_t>> pairs,
                                 const V2VParams& params, std::span<const PolicyPtr> paths) {
  std::vector<char> changed(kbs.size(), 0);
  if (pairs.empty()) return changed;
  // Relays use the bases as they were before this instant.
  std::vector<std::int32_t> slot(kbs.size(), -1);
  std::vector<KnowledgeBase> before;
  if (params.cascade) {
    for (const auto& [a, b] : pairs) {
      for (std::size_t i : {a, b}) {
        if (slot[i] < 0) {
          slot[i] = static_cast<std::int32_t>(before.size());
          before.push_back(kbs[i]);
        }
      }
    }
  }
  auto path_of = [&](std::size_t i) { return paths.empty() ? PolicyPtr{} : paths[i]; };
  for (const auto& [a, b] : pairs) {
    changed[a] |= kbs[a].offer(observe(state, b, path_of(b)));
    changed[b] |= kbs[b].offer(observe(state, a, path_of(a)));
    if (params.cascade) {
      changed[a] |= receive(kbs[a], before[slot[b]], state, params);
      changed[b] |= receive(kbs[b], before[slot[a]], state, params);
    }
  }
  return changed;
}

void exchange(KnowledgeBase& a, KnowledgeBase& b, const SimState& state, const V2VParams& params,
              PolicyPtr path_a, PolicyPtr path_b) {
  const auto ia = static_cast<std::size_t>(a.owner());
  const auto ib = static_cast<std::size_t>(b.owner());
  const KnowledgeBase a_before = a;
  const KnowledgeBase b_before = b;
  a.offer(observe(state, ib, std::move(path_b)));
  b.offer(observe(state, ia, std::move(path_a)));
  if (params.cascade) {
    receive(a, b_before, state, params);
    receive(b, a_before, state, params);
  }
  a.last_comm = state.time();
  b.last_comm = state.time();
}

// ---------------------------------------------------------------- nowcast

namespace {

CarState car_from(const KnowledgeRecord& r) {
  CarState c;
  c.id = r.subject;
  c.origin = -1;
  c.destination = r.destination;
  c.road = r.road;
  c.x = r.x;
  c.speed = r.speed;
  c.entry_time = r.timestamp;
  return c;
}

}  // namespace

NowcastWorld::NowcastWorld(const Network& net, const SimParams& params, const WeightConfig& cfg,
                           NowcastRefresh refresh)
    : net_(&net),
      params_(params),
      cfg_(cfg),
      refresh_(refresh),
      by_destination_(net.junction_count()),
      planned_(net.junction_count(), 0) {
  state_.net = &net;
  state_.dt = params.dt;
}

std::size_t NowcastWorld::index_of(CarId subject) const {
  auto it = std::lower_bound(state_.cars.begin(), state_.cars.end(), subject,
                             [](const CarState& c, CarId s) { return c.id < s; });
  if (it != state_.cars.end() && it->id == subject) {
    return static_cast<std::size_t>(it - state_.cars.begin());
  }
  return state_.cars.size();
}

bool NowcastWorld::contains(CarId subject) const { return index_of(subject) < state_.cars.size(); }

std::vector<double> NowcastWorld::weights() const {
  return instantaneous_weights(*net_, state_.cars, cfg_, state_.time());
}

void NowcastWorld::replan() {
  if (refresh_ == NowcastRefresh::AtJunctions && !stale_) {
    bool missing = false;
    for (const CarState& c : state_.cars) missing |= !planned_[c.destination];
    if (!missing) return;
  }
  const std::vector<double> w = weights();
  std::fill(planned_.begin(), planned_.end(), 0);
  for (const CarState& c : state_.cars) {
    if (planned_[c.destination]) continue;
    by_destination_[c.destination] =
        extract_policy(*net_, solve_reactive_value(*net_, w, c.destination), w);
    planned_[c.destination] = 1;
  }
  stale_ = false;
}

void NowcastWorld::advance() {
  if (state_.cars.empty()) {
    ++state_.step;
    return;
  }
  replan();
  std::vector<const RoutingPolicy*> ptrs(state_.cars.size());
  for (std::size_t i = 0; i < ptrs.size(); ++i) {
    ptrs[i] = &by_destination_[state_.cars[i].destination];
  }
  StepEvents events;
  step(state_, ptrs, params_, &events);
  if (!events.entries.empty()) stale_ = true;
  if (!events.arrivals.empty()) {
    std::erase_if(state_.cars, [](const CarState& c) { return !c.active; });
    stale_ = true;
  }
}

void NowcastWorld::upsert(const KnowledgeRecord& r) {
  if (r.step > state_.step) throw ParameterError("record from the future");
  CarState car = car_from(r);
  if (r.step < state_.step) {
    // Alone on the network the car drives its free-flow route at v_max.
    SimState solo;
    solo.net = net_;
    solo.dt = params_.dt;
    solo.step = r.step;
    solo.cars.push_back(car);
    const RoutingPolicy route = free_flow_policy(*net_, r.destination, params_.v_max);
    const RoutingPolicy* ptr = &route;
    while (solo.step < state_.step && solo.cars[0].active) step(solo, {&ptr, 1}, params_);
    if (!solo.cars[0].active) {
      remove(r.subject);
      return;
    }
    car = solo.cars[0];
  }
  const std::size_t i = index_of(r.subject);
  if (i < state_.cars.size()) {
    if (state_.cars[i].road != car.road) stale_ = true;
    state_.cars[i] = car;
  } else {
    auto it = std::lower_bound(state_.cars.begin(), state_.cars.end(), r.subject,
                               [](const CarState& c, CarId s) { return c.id < s; });
    state_.cars.insert(it, car);
    stale_ = true;
  }
}

void NowcastWorld::remove(CarId subject) {
  const std::size_t i = index_of(subject);
  if (i < state_.cars.size()) {
    state_.cars.erase(state_.cars.begin() + static_cast<std::ptrdiff_t>(i));
    stale_ = true;
  }
}

SimState nowcast_rue(const KnowledgeBase& kb, std::int64_t to, const Network& net,
                     const SimParams& params, const WeightConfig& cfg) {
  std::vector<KnowledgeRecord> records;
  for (const KnowledgeRecord& r : kb.records()) {
    if (r.step <= to) records.push_back(r);
  }
  NowcastWorld world(net, params, cfg, NowcastRefresh::EveryStep);
  if (records.empty()) {
    world.set_step(to);
    return world.state();
  }
  std::stable_sort(records.begin(), records.end(),
                   [](const KnowledgeRecord& a, const KnowledgeRecord& b) { return a.step < b.step; });
  world.set_step(records.front().step);
  std::size_t next = 0;
  for (;;) {
    while (next < records.size() && records[next].step == world.state().step) {
      world.upsert(records[next++]);
    }
    if (world.state().step == to) break;
    world.advance();
  }
  return world.state();
}

// ---------------------------------------------------------------- engines

namespace {

/// Knowledge bases of the whole fleet plus the global communication clock.
class Fleet {
 public:
  Fleet(std::size_t cars, const V2VParams& params) : params_(params) {
    kbs.reserve(cars);
    for (std::size_t i = 0; i < cars; ++i) kbs.emplace_back(static_cast<CarId>(i));
    forgot.assign(cars, 0);
    changed.assign(cars, 0);
  }

  /// Forget pass, then the exchange batch if this step is a communication
  /// epoch. Fills `forgot` and `changed` per car.
  void communicate(const SimState& state, std::span<const PolicyPtr> paths = {}) {
    std::fill(forgot.begin(), forgot.end(), 0);
    std::fill(changed.begin(), changed.end(), 0);
    for (std::size_t i = 0; i < kbs.size(); ++i) {
      if (!state.cars[i].active) continue;
      if (kbs[i].forget(state.step, state.dt, params_.memory) > 0) forgot[i] = changed[i] = 1;
    }
    const double t = state.time();
    if (!may_communicate(last_epoch_, t, params_.comm_pause)) return;
    last_epoch_ = t;
    for (std::size_t i = 0; i < kbs.size(); ++i) {
      if (state.cars[i].active) kbs[i].last_comm = t;
    }
    const auto pairs = detect_rendezvous(state, params_.range);
    const std::vector<char> got = exchange_batch(kbs, state, pairs, params_, paths);
    for (std::size_t i = 0; i < kbs.size(); ++i) changed[i] |= got[i];
  }

  std::vector<KnowledgeBase> kbs;
  std::vector<char> forgot;
  std::vector<char> changed;

 private:
  V2VParams params_;
  double last_epoch_ = -kInfinity;
};

/// Nowcast world of one car kept in step with its knowledge base.
struct Tracker {
  Tracker(const Network& net, const SimParams& sp, const WeightConfig& cfg, NowcastRefresh refresh,
          std::size_t cars)
      : world(net, sp, cfg, refresh), synced(cars, -1) {}

  void sync(const KnowledgeBase& kb, std::int64_t now, bool forgot, bool changed) {
    while (world.state().step < now) world.advance();
    if (forgot) {
      std::vector<CarId> gone;
      for (CarId s = 0; s < static_cast<CarId>(synced.size()); ++s) {
        if (synced[s] >= 0 && !kb.find(s)) gone.push_back(s);
      }
      for (CarId s : gone) {
        world.remove(s);
        synced[s] = -1;
      }
    }
    if (!changed) return;
    for (const KnowledgeRecord& r : kb.records()) {
      if (synced[r.subject] == r.step) continue;
      world.upsert(r);
      synced[r.subject] = r.step;
    }
  }

  NowcastWorld world;
  std::vector<std::int64_t> synced;  // record step mirrored in the world, by subject
};

void check_v2v_scenario(const Scenario& scn, const V2VParams& params) {
  validate(params);
  if (scn.method == WeightMethod::M1) {
    throw ConfigError("M1 needs traversal histories, which fictitious worlds do not keep");
  }
}

void record_spread(KnowledgeSeries* s, const SimState& state, const Fleet& fleet, double range) {
  if (!s) return;
  s->times.push_back(state.time());
  s->k_n.push_back(knowledge_indicator(state, fleet.kbs));
  s->n_a.push_back(state.active_count());
  s->contacts.push_back(contact_indicator(state, range));
}

void maybe_dump(const V2VRunOptions& opts, const SimState& state, const Fleet& fleet,
                bool final_step) {
  if (!opts.knowledge_dump) return;
  const bool periodic = opts.dump_every > 0 && state.step % opts.dump_every == 0;
  if (periodic || (final_step && opts.dump_every == 0)) {
    write_knowledge_dump(*opts.knowledge_dump, state.time(), fleet.kbs);
  }
}

}  // namespace

RunResult run_v2v_rue(const Scenario& scn_in, const V2VParams& params, const V2VRunOptions& opts) {
  const Scenario scn = resolved(scn_in);
  check_v2v_scenario(scn, params);
  const Network& net = *scn.net;
  const std::int64_t k_fin = horizon_steps(scn);
  const WeightConfig cfg = weight_config(scn);
  const std::size_t n = scn.trips.size();

  const auto bb = bb_policies(net, scn.trips, scn.params.v_max);
  std::vector<const RoutingPolicy*> ptrs(n);
  for (std::size_t i = 0; i < n; ++i) ptrs[i] = bb[scn.trips[i].destination].get();
  SimState state = spawn(net, scn.trips, ptrs, scn.params);

  Fleet fleet(n, params);
  std::vector<Tracker> trackers;
  trackers.reserve(n);
  for (std::size_t i = 0; i < n; ++i) trackers.emplace_back(net, scn.params, cfg, params.refresh, n);
  std::vector<RoutingPolicy> own(n);

  RunRecorder recorder(state, opts.run.trajectory);
  StepEvents events;
  while (state.active_count() > 0 && state.step < k_fin) {
    fleet.communicate(state);
    record_spread(opts.spread, state, fleet, params.range);
    maybe_dump(opts, state, fleet, false);
    for (std::size_t c = 0; c < n; ++c) {
      const CarState& car = state.cars[c];
      if (!car.active) continue;
      Tracker& tr = trackers[c];
      tr.sync(fleet.kbs[c], state.step, fleet.forgot[c], fleet.changed[c]);
      const std::vector<double> w = tr.world.weights();
      own[c] = extract_policy(net, solve_reactive_value(net, w, car.destination), w);
      ptrs[c] = &own[c];
    }
    events.clear();
    step(state, ptrs, scn.params, &events);
    recorder.after_step(state, events);
  }
  maybe_dump(opts, state, fleet, true);
  return recorder.finish(state, scn.t_fin);
}

namespace {

/// Forecast of the known cars from their observation times to T_fin, each
/// following the path it shared; M3 weights from step `from` on.
WeightField forecast_weights(const Network& net, const KnowledgeBase& kb, const Scenario& scn,
                             const WeightConfig& cfg, std::span<const PolicyPtr> bb,
                             std::int64_t from, std::int64_t k_fin) {
  WeightField wf(k_fin + 1, net.road_count(), scn.params.dt);
  std::vector<KnowledgeRecord> records(kb.records().begin(), kb.records().end());
  std::stable_sort(records.begin(), records.end(),
                   [](const KnowledgeRecord& a, const KnowledgeRecord& b) { return a.step < b.step; });

  SimState world;
  world.net = &net;
  world.dt = scn.params.dt;
  world.step = records.empty() ? from : std::min(records.front().step, from);
  std::vector<PolicyPtr> paths;  // parallel to world.cars
  std::vector<const RoutingPolicy*> ptrs;
  std::size_t next = 0;
  for (;;) {
    while (next < records.size() && records[next].step == world.step) {
      const KnowledgeRecord& r = records[next++];
      world.cars.push_back(car_from(r));
      paths.push_back(r.planned_path ? r.planned_path : bb[r.destination]);
    }
    if (world.step >= from) {
      const std::vector<double> w = instantaneous_weights(net, world.cars, cfg, world.time());
      std::copy(w.begin(), w.end(), wf.slice(world.step).begin());
    }
    if (world.step == k_fin) break;
    ptrs.resize(paths.size());
    std::transform(paths.begin(), paths.end(), ptrs.begin(),
                   [](const PolicyPtr& p) { return p.get(); });
    step(world, ptrs, scn.params);
  }
  return wf;
}

}  // namespace

RunResult run_v2v_due(const Scenario& scn_in, const V2VParams& params, const V2VRunOptions& opts) {
  const Scenario scn = resolved(scn_in);
  check_v2v_scenario(scn, params);
  const Network& net = *scn.net;
  const std::int64_t k_fin = horizon_steps(scn);
  const WeightConfig cfg = weight_config(scn);
  const std::size_t n = scn.trips.size();

  const auto bb = bb_policies(net, scn.trips, scn.params.v_max);
  std::vector<PolicyPtr> plan(n);
  std::vector<const RoutingPolicy*> ptrs(n);
  for (std::size_t i = 0; i < n; ++i) {
    plan[i] = bb[scn.trips[i].destination];
    ptrs[i] = plan[i].get();
  }
  SimState state = spawn(net, scn.trips, ptrs, scn.params);
  Fleet fleet(n, params);
  std::vector<std::uint64_t> planned_at(n, std::numeric_limits<std::uint64_t>::max());

  RunRecorder recorder(state, opts.run.trajectory);
  StepEvents events;
  while (state.active_count() > 0 && state.step < k_fin) {
    fleet.communicate(state, plan);
    record_spread(opts.spread, state, fleet, params.range);
    maybe_dump(opts, state, fleet, false);
    for (std::size_t c = 0; c < n; ++c) {
      const CarState& car = state.cars[c];
      if (!car.active) continue;
      const KnowledgeBase& kb = fleet.kbs[c];
      if (kb.version() == planned_at[c]) continue;  // same knowledge, same forecast, same plan
      planned_at[c] = kb.version();
      if (kb.empty()) {
        plan[c] = bb[car.destination];
      } else {
        const WeightField wf = forecast_weights(net, kb, scn, cfg, bb, state.step, k_fin);
        RoutingPolicy p =
            extract_policy(net, solve_dynamic_value(net, wf, car.destination, state.step), wf);
        p.set_fallback(bb[car.destination]);
        plan[c] = std::make_shared<const RoutingPolicy>(std::move(p));
      }
      ptrs[c] = plan[c].get();
    }
    events.clear();
    step(state, ptrs, scn.params, &events);
    recorder.after_step(state, events);
  }
  maybe_dump(opts, state, fleet, true);
  RunResult res = recorder.finish(state, scn.t_fin);
  res.policies = plan;
  return res;
}

KnowledgeSeries run_spread(const Scenario& scn_in, const V2VParams& params,
                           const V2VRunOptions& opts) {
  const Scenario scn = resolved(scn_in);
  validate(params);
  const Network& net = *scn.net;
  const std::int64_t k_fin = horizon_steps(scn);
  const std::size_t n = scn.trips.size();
  const auto bb = bb_policies(net, scn.trips, scn.params.v_max);
  std::vector<const RoutingPolicy*> ptrs(n);
  for (std::size_t i = 0; i < n; ++i) ptrs[i] = bb[scn.trips[i].destination].get();
  SimState state = spawn(net, scn.trips, ptrs, scn.params);
  Fleet fleet(n, params);
  KnowledgeSeries series;
  std::unique_ptr<TrajectoryWriter> writer;
  if (opts.run.trajectory) {
    writer = std::make_unique<TrajectoryWriter>(*opts.run.trajectory);
    writer->write(state);
  }
  StepEvents events;
  while (state.active_count() > 0 && state.step < k_fin) {
    fleet.communicate(state);
    record_spread(&series, state, fleet, params.range);
    maybe_dump(opts, state, fleet, false);
    events.clear();
    step(state, ptrs, scn.params, &events);
    if (writer) writer->write(state, events.arrivals);
  }
  record_spread(&series, state, fleet, params.range);
  maybe_dump(opts, state, fleet, true);
  if (opts.spread) *opts.spread = series;
  return series;
}

EquilibriumCheck equilibrium_path_check(const Scenario& scn_in, const V2VParams& params,
                                        std::span<const std::vector<RoadId>> forced_paths,
                                        CarId tracked) {
  const Scenario scn = resolved(scn_in);
  check_v2v_scenario(scn, params);
  const Network& net = *scn.net;
  const std::size_t n = scn.trips.size();
  if (forced_paths.size() != n) throw ScenarioError("one forced path per car is required");
  if (tracked < 0 || static_cast<std::size_t>(tracked) >= n) {
    throw LookupError("unknown tracked car " + std::to_string(tracked));
  }
  std::vector<Trip> trips = scn.trips;
  std::vector<RoutingPolicy> forced;
  forced.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& path = forced_paths[i];
    forced.push_back(RoutingPolicy::from_path(net, path));
    if (net.road(path.front()).from != trips[i].origin ||
        net.road(path.back()).to != trips[i].destination) {
      throw ScenarioError("forced path of car " + std::to_string(i) +
                          " does not join its origin to its destination");
    }
    trips[i].start_road = path.front();
  }
  std::vector<const RoutingPolicy*> ptrs(n);
  for (std::size_t i = 0; i < n; ++i) ptrs[i] = &forced[i];

  const std::int64_t k_fin = horizon_steps(scn);
  const WeightConfig cfg = weight_config(scn);
  SimState state = spawn(net, trips, ptrs, scn.params);
  Fleet fleet(n, params);
  Tracker tracker(net, scn.params, cfg, params.refresh, n);
  const auto t = static_cast<std::size_t>(tracked);
  const JunctionId dest = trips[t].destination;

  EquilibriumCheck out;
  RunRecorder recorder(state, nullptr);
  StepEvents events;
  while (state.active_count() > 0 && state.step < k_fin) {
    fleet.communicate(state);
    RoutingPolicy preferred;
    const bool live = state.cars[t].active;
    if (live) {
      tracker.sync(fleet.kbs[t], state.step, fleet.forgot[t], fleet.changed[t]);
      const std::vector<double> w = tracker.world.weights();
      preferred = extract_policy(net, solve_reactive_value(net, w, dest), w);
      if (state.step == 0) {
        out.choices.push_back({trips[t].origin, 0, forced_paths[t].front(),
                               preferred.next(0, trips[t].origin)});
      }
    }
    const std::int64_t k = state.step;
    const RoadId road_before = state.cars[t].road;
    events.clear();
    step(state, ptrs, scn.params, &events);
    recorder.after_step(state, events);
    if (!live) continue;
    RoadId from_road = road_before;
    for (const auto& [i, entry] : events.entries) {
      if (i != t) continue;
      const JunctionId j = net.road(from_road).to;
      out.choices.push_back({j, k, entry.road, preferred.next(k, j)});
      from_road = entry.road;
    }
  }
  for (const JunctionChoice& c : out.choices) out.is_equilibrium &= c.chosen == c.preferred;
  out.run = recorder.finish(state, scn.t_fin);
  return out;
}

void write_spread_csv(std::ostream& out, const KnowledgeSeries& s) {
  out << "t,n_active,k_n\n";
  for (std::size_t i = 0; i < s.times.size(); ++i) {
    fmt::print(out, "{:.6f},{},{:.6f}\n", s.times[i], s.n_a[i], s.k_n[i]);
  }
}

void write_knowledge_dump(std::ostream& out, double t, std::span<const KnowledgeBase> kbs) {
  for (const KnowledgeBase& kb : kbs) {
    for (const KnowledgeRecord& r : kb.records()) {
      fmt::print(out, "{:.6f},{},{},{:.6f},{},{:.6f}\n", t, kb.owner(), r.subject, r.timestamp,
                 r.road, r.x);
    }
  }
}

}  // namespace v2vsim
