#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "ilv/constraint_store.hpp"
#include "ilv/pose_graph.hpp"
#include "ilv/simulator.hpp"

namespace ilv {

// Precision/recall of the constraint set a trajectory is consistent with.
// A zero denominator leaves the metric undefined rather than coercing it
// to 0 or 1.
struct PrPoint {
  std::optional<double> precision;
  std::optional<double> recall;
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  std::int64_t fn = 0;
  std::string label;
};

// S = history constraints consistent with the trajectory (strict t_p);
// TP/FP split S by ground-truth label, FN counts true-labelled history
// constraints outside S.
PrPoint precision_recall(const Trajectory& traj,
                         const ConstraintHistory& history,
                         const GroundTruth& gt);

// FN under the alternative universe of all geometric revisit pairs: the
// registry entries not covered by the consistent set.
std::int64_t fn_vs_registry(const Trajectory& traj,
                            const ConstraintHistory& history,
                            const RevisitRegistry& registry, double t_p);

// RMS position error after aligning the first pose onto the ground truth
// (anchor alignment only, no global fitting).
double trajectory_rmse(const Trajectory& traj, const Trajectory& gt);

// Image-retrieval-only baseline: pose-graph SLAM over `x` history
// constraints sampled uniformly without replacement.
PrPoint ir_baseline_point(const ConstraintHistory& history,
                          std::span<const OdometryMeasurement> odometry,
                          int x, std::mt19937_64& rng, const GroundTruth& gt,
                          const GraphWeights& weights,
                          const OptimizerOptions& opts);

struct SweepEntry {
  std::string method;  // "ILV" or "IR"
  double param = 0.0;  // N_r for ILV, X for IR
  std::uint64_t seed = 0;
  PrPoint point;
};

struct SweepSummary {
  std::string method;
  double param = 0.0;
  int defined = 0;    // entries with both metrics defined
  int undefined = 0;  // entries with any undefined metric
  double precision_mean = 0.0;
  double precision_sd = 0.0;
  double recall_mean = 0.0;
  double recall_sd = 0.0;
};

// Per (method, param) mean and spread over the defined entries.
std::vector<SweepSummary> summarize_sweep(std::span<const SweepEntry> entries);

}  // namespace ilv
