#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "v2vsim/dynamics.hpp"
#include "v2vsim/policy.hpp"

namespace v2vsim {

/// What one car knows about another, as observed at a rendez-vous.
struct KnowledgeRecord {
  CarId subject = 0;
  std::int64_t step = 0;  ///< time of the original observation, in steps
  double timestamp = 0.0; ///< the same in seconds
  RoadId road = 0;
  double x = 0.0;
  double speed = 0.0;     ///< velocity(headway) of the subject when observed
  JunctionId destination = 0;
  PolicyPtr planned_path; ///< set only when paths are shared

  /// Field-wise equality; planned paths compare by identity.
  friend bool operator==(const KnowledgeRecord&, const KnowledgeRecord&) = default;
};

/// Records held by one car, at most one per subject, sorted by subject.
/// The owner never appears among the subjects.
class KnowledgeBase {
 public:
  KnowledgeBase() = default;
  explicit KnowledgeBase(CarId owner) : owner_(owner) {}

  CarId owner() const { return owner_; }
  std::span<const KnowledgeRecord> records() const { return records_; }
  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }
  const KnowledgeRecord* find(CarId subject) const;

  /// Stores `r` unless it is about the owner or a record at least as recent
  /// is already held. Returns whether anything changed.
  bool offer(const KnowledgeRecord& r);

  /// Drops records older than `memory` seconds at step `now`; returns how
  /// many were dropped.
  std::size_t forget(std::int64_t now, double dt, double memory);

  /// Bumped on every change; lets callers cache work derived from the base.
  std::uint64_t version() const { return version_; }

  double last_comm = -kInfinity;

 private:
  CarId owner_ = 0;
  std::vector<KnowledgeRecord> records_;
  std::uint64_t version_ = 0;
};

/// Age test shared by forget and exchange: a record observed at `step` is
/// too old at `now` when (now - step) * dt exceeds `memory`.
bool expired(std::int64_t step, std::int64_t now, double dt, double memory);

}  // namespace v2vsim
