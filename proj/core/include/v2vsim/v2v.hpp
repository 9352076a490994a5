#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "v2vsim/dynamics.hpp"
#include "v2vsim/equilibrium.hpp"
#include "v2vsim/knowledge.hpp"
#include "v2vsim/metrics.hpp"
#include "v2vsim/network.hpp"
#include "v2vsim/routing.hpp"

namespace v2vsim {

/// When fictitious cars in a nowcast re-plan their route.
enum class NowcastRefresh { EveryStep, AtJunctions };

NowcastRefresh parse_nowcast_refresh(std::string_view tag);

struct V2VParams {
  double range = 150.0;          ///< R, meters; +inf reaches everyone
  double comm_pause = 0.0;       ///< delta_c, seconds between exchanges
  double memory = kInfinity;     ///< delta_m, seconds a record is kept
  bool cascade = true;           ///< relay records about third cars
  NowcastRefresh refresh = NowcastRefresh::EveryStep;
};

void validate(const V2VParams& p);

/// Pairs (a, b), a < b, of active car indices strictly closer than `range`
/// in the planar embedding, in lexicographic order.
std::vector<std::pair<std::size_t, std::size_t>> detect_rendezvous(const SimState& state,
                                                                   double range);

/// True state of car index i at the current step as a record.
KnowledgeRecord observe(const SimState& state, std::size_t i, PolicyPtr planned_path = {});

/// Whether a car that last communicated at `last_comm` may do so at `t`.
bool may_communicate(double last_comm, double t, double comm_pause);

/// All rendez-vous of one instant applied at once. Every pair learns about
/// each other (with planned paths if `paths` is non-empty, indexed like the
/// cars); with cascade, each side also receives the other's records as they
/// were before this instant. Records older than the memory are not stored.
/// Returns, per car, whether its base changed.
std::vector<char> exchange_batch(std::span<KnowledgeBase> kbs, const SimState& state,
                                 std::span<const std::pair<std::size_t, std::size_t>> pairs,
                                 const V2VParams& params, std::span<const PolicyPtr> paths = {});

/// A single rendez-vous between cars a and b (indices into state.cars).
void exchange(KnowledgeBase& a, KnowledgeBase& b, const SimState& state, const V2VParams& params,
              PolicyPtr path_a = {}, PolicyPtr path_b = {});

/// Fictitious world of the cars one car knows about, kept at the current
/// time. Cars re-plan with reactive policies computed from this world only.
class NowcastWorld {
 public:
  NowcastWorld(const Network& net, const SimParams& params, const WeightConfig& cfg,
               NowcastRefresh refresh);

  /// One fictitious step of every car in the world.
  void advance();
  /// Places the subject of `r` at its observed position, first moving it
  /// alone from the observation time to now if the record is older.
  void upsert(const KnowledgeRecord& r);
  void remove(CarId subject);
  /// Moves the world clock without touching cars (used on an empty world).
  void set_step(std::int64_t step) { state_.step = step; }

  std::vector<double> weights() const;
  const SimState& state() const { return state_; }
  bool contains(CarId subject) const;

 private:
  void replan();
  std::size_t index_of(CarId subject) const;  // position in state_.cars or size()

  const Network* net_;
  SimParams params_;
  WeightConfig cfg_;
  NowcastRefresh refresh_;
  SimState state_;
  std::vector<RoutingPolicy> by_destination_;
  std::vector<char> planned_;  // by destination, for AtJunctions
  bool stale_ = true;
};

/// Reference nowcast built from scratch: every known car enters a fresh
/// fictitious world at its record's time and position and the world runs to
/// step `to` with reactive re-planning at every step.
SimState nowcast_rue(const KnowledgeBase& kb, std::int64_t to, const Network& net,
                     const SimParams& params, const WeightConfig& cfg);

struct V2VRunOptions {
  RunOptions run;
  KnowledgeSeries* spread = nullptr;   ///< per-step K_N, filled when set
  std::ostream* knowledge_dump = nullptr;  ///< t,owner,subject,timestamp,road,x
  std::int64_t dump_every = 0;         ///< steps between dumps, 0 = final only
};

RunResult run_v2v_rue(const Scenario& scn, const V2VParams& params,
                      const V2VRunOptions& opts = {});
RunResult run_v2v_due(const Scenario& scn, const V2VParams& params,
                      const V2VRunOptions& opts = {});

/// BB dynamics with knowledge exchange only (information spreading).
KnowledgeSeries run_spread(const Scenario& scn, const V2VParams& params,
                           const V2VRunOptions& opts = {});

struct JunctionChoice {
  JunctionId junction = 0;
  std::int64_t step = 0;
  RoadId chosen = 0;     ///< road of the forced path
  RoadId preferred = 0;  ///< road the tracked car's V2V-RUE state would pick
};

struct EquilibriumCheck {
  std::vector<JunctionChoice> choices;
  bool is_equilibrium = true;
  RunResult run;
};

/// Runs every car along its forced path while the tracked car keeps a
/// V2V-RUE knowledge state, and compares its forced road with its preferred
/// road at every junction it leaves, its origin included.
EquilibriumCheck equilibrium_path_check(const Scenario& scn, const V2VParams& params,
                                        std::span<const std::vector<RoadId>> forced_paths,
                                        CarId tracked);

void write_spread_csv(std::ostream& out, const KnowledgeSeries& s);
void write_knowledge_dump(std::ostream& out, double t, std::span<const KnowledgeBase> kbs);

}  // namespace v2vsim
