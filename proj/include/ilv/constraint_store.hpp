#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "ilv/pose_graph.hpp"

namespace ilv {

constexpr std::int64_t kUnassignedId = -1;

// A place-recognition match between frames t and t_prime, with the
// retrieval similarity score. ids are dense and assigned in arrival order.
struct VprConstraint {
  std::int64_t id = kUnassignedId;
  std::int64_t t = 0;
  std::int64_t t_prime = 0;
  double score = 0.0;
};

// Append-only history of constraints. Appended items are never mutated
// or removed; ids are consecutive.
class ConstraintHistory {
 public:
  explicit ConstraintHistory(std::int64_t delta_t) : delta_t_(delta_t) {}

  // Assigns consecutive ids and returns them. Every item must satisfy
  // |t - t_prime| > delta_t; a violating item aborts the whole batch.
  std::vector<std::int64_t> append(std::span<const VprConstraint> batch);

  const VprConstraint& at(std::int64_t id) const;
  std::span<const VprConstraint> all() const { return constraints_; }
  std::int64_t size() const {
    return static_cast<std::int64_t>(constraints_.size());
  }
  std::int64_t delta_t() const { return delta_t_; }

 private:
  std::vector<VprConstraint> constraints_;
  std::int64_t delta_t_ = 0;
};

enum class Consistency : std::uint8_t {
  inconsistent = 0,
  consistent = 1,
  not_evaluable = 2,  // a referenced frame lies beyond the trajectory
};

// Eq.-style consistency test: strictly inside t_p counts as consistent.
// Frames beyond the trajectory make the constraint not evaluable, which
// is excluded from both the consistent and inconsistent tallies.
Consistency check_consistency(const VprConstraint& c, const Trajectory& traj,
                              double t_p);
bool is_consistent(const VprConstraint& c, const Trajectory& traj, double t_p);

struct GroundTruth {
  Trajectory trajectory;
  double t_p = 10.0;
};

// Consistency against the true trajectory; throws std::out_of_range when
// the ground truth does not cover both frames.
bool label_ground_truth(const VprConstraint& c, const GroundTruth& gt);

// Hypothesis-by-constraint lookup table. Rows are keyed by hypothesis id
// and filled lazily: refresh evaluates exactly the (row, constraint)
// pairs that have not been evaluated yet, drops rows that left the live
// set, and reports how many new pairs it computed. Entries never change
// once written because hypothesis trajectories are fixed at birth.
class ConsistencyTable {
 public:
  explicit ConsistencyTable(double t_p) : t_p_(t_p) {}

  std::size_t refresh(const std::map<std::int64_t, const Trajectory*>& live,
                      const ConstraintHistory& history);

  std::int64_t consistent_count(std::int64_t id) const;
  Consistency entry(std::int64_t id, std::int64_t constraint_id) const;
  std::uint64_t row_generation(std::int64_t id) const;
  std::vector<std::int64_t> row_ids() const;
  std::size_t row_width(std::int64_t id) const;
  double t_p() const { return t_p_; }

  // State equality (entries and counts); generation stamps are
  // bookkeeping and excluded.
  friend bool same_state(const ConsistencyTable& a, const ConsistencyTable& b);

 private:
  struct Row {
    std::vector<Consistency> states;
    std::int64_t consistent = 0;
    std::uint64_t stamp = 0;
  };
  std::map<std::int64_t, Row> rows_;
  double t_p_ = 10.0;
  std::uint64_t generation_ = 0;
};

bool same_state(const ConsistencyTable& a, const ConsistencyTable& b);

}  // namespace ilv
