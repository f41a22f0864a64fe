#include "ilv/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <stdexcept>

namespace ilv {

PrPoint precision_recall(const Trajectory& traj,
                         const ConstraintHistory& history,
                         const GroundTruth& gt) {
  PrPoint point;
  for (const VprConstraint& c : history.all()) {
    const bool truth = label_ground_truth(c, gt);
    const bool in_s = is_consistent(c, traj, gt.t_p);
    if (in_s && truth) ++point.tp;
    if (in_s && !truth) ++point.fp;
    if (!in_s && truth) ++point.fn;
  }
  if (point.tp + point.fp > 0) {
    point.precision = static_cast<double>(point.tp) /
                      static_cast<double>(point.tp + point.fp);
  }
  if (point.tp + point.fn > 0) {
    point.recall = static_cast<double>(point.tp) /
                   static_cast<double>(point.tp + point.fn);
  }
  return point;
}

std::int64_t fn_vs_registry(const Trajectory& traj,
                            const ConstraintHistory& history,
                            const RevisitRegistry& registry, double t_p) {
  std::set<std::pair<std::int64_t, std::int64_t>> covered;
  for (const VprConstraint& c : history.all()) {
    if (is_consistent(c, traj, t_p)) {
      covered.emplace(std::min(c.t, c.t_prime), std::max(c.t, c.t_prime));
    }
  }
  std::int64_t missed = 0;
  for (const auto& pair : registry.pairs) {
    if (!covered.contains(pair)) ++missed;
  }
  return missed;
}

double trajectory_rmse(const Trajectory& traj, const Trajectory& gt) {
  if (traj.size() != gt.size()) {
    throw std::invalid_argument("trajectory_rmse: lengths differ (" +
                                std::to_string(traj.size()) + " vs " +
                                std::to_string(gt.size()) + ")");
  }
  if (traj.empty()) {
    throw std::invalid_argument("trajectory_rmse: empty trajectory");
  }
  const Pose2d align = compose(gt.front(), inverse(traj.front()));
  double sum = 0.0;
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const Pose2d aligned = compose(align, traj[i]);
    sum += (aligned.position() - gt[i].position()).squaredNorm();
  }
  return std::sqrt(sum / static_cast<double>(traj.size()));
}

PrPoint ir_baseline_point(const ConstraintHistory& history,
                          std::span<const OdometryMeasurement> odometry,
                          int x, std::mt19937_64& rng, const GroundTruth& gt,
                          const GraphWeights& weights,
                          const OptimizerOptions& opts) {
  if (history.size() == 0) {
    throw std::invalid_argument("ir_baseline_point: empty history");
  }
  std::vector<std::int64_t> ids(static_cast<std::size_t>(history.size()));
  std::iota(ids.begin(), ids.end(), 0);
  std::shuffle(ids.begin(), ids.end(), rng);
  const auto keep = std::min<std::size_t>(static_cast<std::size_t>(x),
                                          ids.size());
  PoseGraph graph;
  graph.weights = weights;
  graph.odom_edges.assign(odometry.begin(), odometry.end());
  for (std::size_t i = 0; i < keep; ++i) {
    const VprConstraint& c = history.at(ids[i]);
    graph.loop_edges.push_back({c.t, c.t_prime, weights.loop});
  }
  const Trajectory initial = integrate_odometry(odometry);
  OptimizeResult res = optimize(graph, initial, opts);
  return precision_recall(res.trajectory, history, gt);
}

std::vector<SweepSummary> summarize_sweep(
    std::span<const SweepEntry> entries) {
  std::map<std::pair<std::string, double>, std::vector<const SweepEntry*>>
      groups;
  for (const SweepEntry& e : entries) {
    groups[{e.method, e.param}].push_back(&e);
  }
  std::vector<SweepSummary> out;
  for (const auto& [key, group] : groups) {
    SweepSummary s;
    s.method = key.first;
    s.param = key.second;
    std::vector<double> ps, rs;
    for (const SweepEntry* e : group) {
      if (e->point.precision && e->point.recall) {
        ps.push_back(*e->point.precision);
        rs.push_back(*e->point.recall);
        ++s.defined;
      } else {
        ++s.undefined;
      }
    }
    auto mean_sd = [](const std::vector<double>& v, double& mean, double& sd) {
      if (v.empty()) return;
      mean = std::accumulate(v.begin(), v.end(), 0.0) /
             static_cast<double>(v.size());
      double acc = 0.0;
      for (const double x : v) acc += (x - mean) * (x - mean);
      sd = v.size() > 1
               ? std::sqrt(acc / static_cast<double>(v.size() - 1))
               : 0.0;
    };
    mean_sd(ps, s.precision_mean, s.precision_sd);
    mean_sd(rs, s.recall_mean, s.recall_sd);
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace ilv
