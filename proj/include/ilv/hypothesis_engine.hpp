#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <vector>

#include "ilv/constraint_store.hpp"
#include "ilv/pose_graph.hpp"

namespace ilv {

// One trajectory hypothesis: the constraint subset it was grown from and
// the optimizer output over the odometry available at its birth. The
// trajectory never changes afterwards; newer hypotheses cover newer frames.
struct Hypothesis {
  std::int64_t id = -1;
  std::int64_t parent = -1;  // -1 for seeds
  std::vector<std::int64_t> constraint_ids;
  Trajectory trajectory;
  std::int64_t consistent_count = 0;
  std::int64_t birth_window = -1;
  bool stagnant = false;  // extension drew from an empty candidate pool
  bool degraded = false;  // optimizer hit its damping ceiling
};

struct EngineConfig {
  std::int64_t window = 500;     // frames per window
  int parents_per_window = 10;   // parents ranked per iteration
  int children_per_parent = 10;  // generation iterations per window
  int live_cap = 200;            // live hypotheses kept after pruning
  double t_p = 10.0;             // consistency threshold, metres
  std::int64_t history_cap = 2000;
  std::uint64_t rng_seed = 0;
  GraphWeights weights;
  OptimizerOptions optimizer;

  std::int64_t births_per_window() const {
    return static_cast<std::int64_t>(parents_per_window) * children_per_parent;
  }
  void validate() const;
};

struct WindowStats {
  std::int64_t window = 0;
  std::int64_t births = 0;
  std::int64_t stagnant_births = 0;
  std::size_t evaluated_pairs = 0;
  std::int64_t live_before = 0;
  std::int64_t live_after = 0;
  std::int64_t history_size = 0;
  std::int64_t frames_end = 0;
};

// Birth record kept for every hypothesis ever created, pruned or not.
struct LineageRecord {
  std::int64_t id = -1;
  std::int64_t parent = -1;
  std::int64_t birth_window = -1;
  std::vector<std::int64_t> constraint_ids;
  std::int64_t appended_constraint = -1;  // -1 for seeds and stagnant children
  double selection_gap = 0.0;  // parent gap of the appended constraint
  bool stagnant = false;
  std::int64_t final_count = 0;  // last known consistency count
  std::int64_t final_rank = -1;  // rank at export; -1 once pruned
};

struct RankEntry {
  std::int64_t id = -1;
  std::int64_t consistent_count = 0;
  std::int64_t birth_window = -1;
};

// Consistency-count ranking: count descending, then older birth window,
// then smaller id.
std::vector<std::int64_t> rank_ids(std::vector<RankEntry> entries);

// Windowed multi-model hypothesize-and-verify over a streaming sequence.
// Frames arrive via push_odometry/append_constraints; run_window performs
// the per-window generation schedule (children_per_parent iterations of
// parents_per_window births, re-ranking between iterations) and prunes.
class HypothesisEngine {
 public:
  // delta_t is the retrieval temporal exclusion; the constraint history
  // revalidates it on every append.
  HypothesisEngine(const EngineConfig& cfg, std::int64_t delta_t);

  // Streaming input. Odometry must arrive in frame order (t = 2, 3, ...).
  void push_odometry(const OdometryMeasurement& m);
  // Appends up to the history cap; returns the ids actually stored.
  std::vector<std::int64_t> append_constraints(
      std::span<const VprConstraint> batch);

  bool at_window_boundary() const;
  WindowStats run_window();
  // Runs a final partial window if frames arrived since the last one.
  std::optional<WindowStats> finalize();

  // Generation primitives (public so behaviours are testable in isolation).
  std::optional<std::int64_t> seed_hypothesis();
  std::vector<std::int64_t> candidate_pool(const Hypothesis& h) const;
  std::int64_t extend_hypothesis(std::int64_t parent_id);
  std::int64_t extend_with(std::int64_t parent_id, std::int64_t constraint_id);
  std::size_t refresh();
  void prune();

  // Replays every recorded extension against the parent trajectory and
  // returns the number that violate the strict gap > t_p selection rule.
  std::int64_t audit_extensions() const;

  std::vector<std::int64_t> ranking() const;
  std::vector<LineageRecord> lineage_with_final_ranks() const;

  std::int64_t frame_count() const {
    return static_cast<std::int64_t>(dead_reckoning_.size());
  }
  const ConstraintHistory& history() const { return history_; }
  const Trajectory& dead_reckoning() const { return dead_reckoning_; }
  const Hypothesis& hypothesis(std::int64_t id) const { return all_.at(id); }
  bool is_live(std::int64_t id) const { return live_.contains(id); }
  std::vector<std::int64_t> live_ids() const;
  const ConsistencyTable& table() const { return table_; }
  const std::vector<WindowStats>& window_stats() const { return stats_; }
  const EngineConfig& config() const { return cfg_; }
  std::int64_t dropped_constraints() const { return dropped_constraints_; }
  std::int64_t windows_run() const { return window_count_; }

 private:
  std::int64_t birth(Hypothesis h, std::int64_t appended, double gap);
  OptimizeResult optimize_over(const std::vector<std::int64_t>& constraint_ids,
                               const Trajectory& initial) const;
  Trajectory extended_to_now(const Trajectory& base) const;

  EngineConfig cfg_;
  ConstraintHistory history_;
  PoseGraph graph_;  // odometry chain; loop edges swapped in per solve
  Trajectory dead_reckoning_;
  std::map<std::int64_t, Hypothesis> all_;
  std::set<std::int64_t> live_;
  ConsistencyTable table_;
  std::vector<LineageRecord> lineage_;
  std::vector<WindowStats> stats_;
  std::mt19937_64 rng_;
  std::int64_t next_id_ = 0;
  std::int64_t window_count_ = 0;
  std::int64_t last_window_frame_ = 0;
  std::int64_t dropped_constraints_ = 0;
};

}  // namespace ilv
