#include "ilv/hypothesis_engine.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace ilv {

void EngineConfig::validate() const {
  if (window < 1 || parents_per_window < 1 || children_per_parent < 1 ||
      live_cap < 1 || history_cap < 1) {
    throw std::invalid_argument("EngineConfig: counts must be positive");
  }
  if (t_p <= 0) {
    throw std::invalid_argument("EngineConfig: t_p must be positive");
  }
  if (weights.w_xy <= 0 || weights.w_theta <= 0 || weights.loop <= 0) {
    throw std::invalid_argument("EngineConfig: weights must be positive");
  }
}

std::vector<std::int64_t> rank_ids(std::vector<RankEntry> entries) {
  std::sort(entries.begin(), entries.end(),
            [](const RankEntry& a, const RankEntry& b) {
              if (a.consistent_count != b.consistent_count)
                return a.consistent_count > b.consistent_count;
              if (a.birth_window != b.birth_window)
                return a.birth_window < b.birth_window;
              return a.id < b.id;
            });
  std::vector<std::int64_t> ids;
  ids.reserve(entries.size());
  for (const auto& e : entries) ids.push_back(e.id);
  return ids;
}

HypothesisEngine::HypothesisEngine(const EngineConfig& cfg,
                                   std::int64_t delta_t)
    : cfg_(cfg),
      history_(delta_t),
      table_(cfg.t_p),
      rng_(cfg.rng_seed ^ 0x1c0de5eedULL) {
  cfg_.validate();
  graph_.weights = cfg_.weights;
  dead_reckoning_.push_back(Pose2d::identity());
}

void HypothesisEngine::push_odometry(const OdometryMeasurement& m) {
  const std::int64_t expected = frame_count() + 1;
  if (m.t != expected) {
    throw std::invalid_argument("push_odometry: expected frame " +
                                std::to_string(expected) + ", got " +
                                std::to_string(m.t));
  }
  graph_.odom_edges.push_back(m);
  dead_reckoning_.push_back(compose(dead_reckoning_.back(), m.delta));
}

std::vector<std::int64_t> HypothesisEngine::append_constraints(
    std::span<const VprConstraint> batch) {
  const std::int64_t room = cfg_.history_cap - history_.size();
  const auto keep = std::min<std::int64_t>(
      room < 0 ? 0 : room, static_cast<std::int64_t>(batch.size()));
  dropped_constraints_ += static_cast<std::int64_t>(batch.size()) - keep;
  return history_.append(batch.subspan(0, static_cast<std::size_t>(keep)));
}

bool HypothesisEngine::at_window_boundary() const {
  return frame_count() - last_window_frame_ >= cfg_.window;
}

Trajectory HypothesisEngine::extended_to_now(const Trajectory& base) const {
  Trajectory out = base;
  out.reserve(dead_reckoning_.size());
  for (std::size_t t = base.size() + 1; t <= dead_reckoning_.size(); ++t) {
    out.push_back(compose(out.back(), graph_.odom_edges[t - 2].delta));
  }
  return out;
}

OptimizeResult HypothesisEngine::optimize_over(
    const std::vector<std::int64_t>& constraint_ids,
    const Trajectory& initial) const {
  PoseGraph graph;
  graph.weights = graph_.weights;
  graph.odom_edges = graph_.odom_edges;
  graph.loop_edges.reserve(constraint_ids.size());
  for (const std::int64_t cid : constraint_ids) {
    const VprConstraint& c = history_.at(cid);
    graph.loop_edges.push_back({c.t, c.t_prime, cfg_.weights.loop});
  }
  return optimize(graph, initial, cfg_.optimizer);
}

std::int64_t HypothesisEngine::birth(Hypothesis h, std::int64_t appended,
                                     double gap) {
  h.id = next_id_++;
  h.birth_window = window_count_;
  LineageRecord rec;
  rec.id = h.id;
  rec.parent = h.parent;
  rec.birth_window = h.birth_window;
  rec.constraint_ids = h.constraint_ids;
  rec.appended_constraint = appended;
  rec.selection_gap = gap;
  rec.stagnant = h.stagnant;
  lineage_.push_back(std::move(rec));
  live_.insert(h.id);
  const std::int64_t id = h.id;
  all_.emplace(id, std::move(h));
  return id;
}

std::optional<std::int64_t> HypothesisEngine::seed_hypothesis() {
  if (history_.size() == 0) {
    return std::nullopt;
  }
  std::uniform_int_distribution<std::int64_t> pick(0, history_.size() - 1);
  const std::int64_t cid = pick(rng_);
  Hypothesis h;
  h.constraint_ids = {cid};
  OptimizeResult res = optimize_over(h.constraint_ids, dead_reckoning_);
  h.trajectory = std::move(res.trajectory);
  h.degraded = res.degraded;
  return birth(std::move(h), -1, 0.0);
}

std::vector<std::int64_t> HypothesisEngine::candidate_pool(
    const Hypothesis& h) const {
  std::vector<std::int64_t> pool;
  const auto members =
      std::set<std::int64_t>(h.constraint_ids.begin(), h.constraint_ids.end());
  for (const VprConstraint& c : history_.all()) {
    if (members.contains(c.id)) continue;
    if (check_consistency(c, h.trajectory, cfg_.t_p) ==
        Consistency::not_evaluable)
      continue;
    if (closure_gap(h.trajectory, c.t, c.t_prime) > cfg_.t_p) {
      pool.push_back(c.id);
    }
  }
  return pool;
}

std::int64_t HypothesisEngine::extend_hypothesis(std::int64_t parent_id) {
  const Hypothesis& parent = all_.at(parent_id);
  const std::vector<std::int64_t> pool = candidate_pool(parent);
  if (pool.empty()) {
    return extend_with(parent_id, -1);
  }
  std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
  return extend_with(parent_id, pool[pick(rng_)]);
}

std::int64_t HypothesisEngine::extend_with(std::int64_t parent_id,
                                           std::int64_t constraint_id) {
  const Hypothesis& parent = all_.at(parent_id);
  Hypothesis child;
  child.parent = parent_id;
  child.constraint_ids = parent.constraint_ids;
  double gap = 0.0;
  if (constraint_id >= 0) {
    const VprConstraint& c = history_.at(constraint_id);
    gap = closure_gap(parent.trajectory, c.t, c.t_prime);
    child.constraint_ids.push_back(constraint_id);
  } else {
    child.stagnant = true;
  }
  OptimizeResult res =
      optimize_over(child.constraint_ids, extended_to_now(parent.trajectory));
  child.trajectory = std::move(res.trajectory);
  child.degraded = res.degraded;
  return birth(std::move(child), constraint_id, gap);
}

std::size_t HypothesisEngine::refresh() {
  std::map<std::int64_t, const Trajectory*> live_view;
  for (const std::int64_t id : live_) {
    live_view[id] = &all_.at(id).trajectory;
  }
  const std::size_t evaluated = table_.refresh(live_view, history_);
  for (const std::int64_t id : live_) {
    all_.at(id).consistent_count = table_.consistent_count(id);
  }
  return evaluated;
}

std::vector<std::int64_t> HypothesisEngine::ranking() const {
  std::vector<RankEntry> entries;
  entries.reserve(live_.size());
  for (const std::int64_t id : live_) {
    const Hypothesis& h = all_.at(id);
    entries.push_back({id, h.consistent_count, h.birth_window});
  }
  return rank_ids(std::move(entries));
}

void HypothesisEngine::prune() {
  const std::vector<std::int64_t> ranked = ranking();
  if (ranked.size() <= static_cast<std::size_t>(cfg_.live_cap)) {
    return;
  }
  for (std::size_t r = static_cast<std::size_t>(cfg_.live_cap);
       r < ranked.size(); ++r) {
    const std::int64_t id = ranked[r];
    lineage_[static_cast<std::size_t>(id)].final_count =
        all_.at(id).consistent_count;
    live_.erase(id);
  }
  refresh();  // drops the pruned rows; evaluates nothing new
}

WindowStats HypothesisEngine::run_window() {
  WindowStats stats;
  stats.window = window_count_;
  stats.live_before = static_cast<std::int64_t>(live_.size());
  std::size_t pairs = refresh();
  for (int iter = 0; iter < cfg_.children_per_parent; ++iter) {
    const std::vector<std::int64_t> ranked = ranking();
    const int n_parents = static_cast<int>(std::min<std::size_t>(
        ranked.size(), static_cast<std::size_t>(cfg_.parents_per_window)));
    for (int p = 0; p < n_parents; ++p) {
      const std::int64_t id = extend_hypothesis(ranked[p]);
      ++stats.births;
      if (all_.at(id).stagnant) ++stats.stagnant_births;
    }
    for (int s = n_parents; s < cfg_.parents_per_window; ++s) {
      const auto id = seed_hypothesis();
      if (!id) break;  // no seed material yet
      ++stats.births;
    }
    pairs += refresh();
  }
  prune();
  stats.evaluated_pairs = pairs;
  stats.live_after = static_cast<std::int64_t>(live_.size());
  stats.history_size = history_.size();
  stats.frames_end = frame_count();
  ++window_count_;
  last_window_frame_ = frame_count();
  stats_.push_back(stats);
  return stats;
}

std::optional<WindowStats> HypothesisEngine::finalize() {
  if (frame_count() <= last_window_frame_) {
    return std::nullopt;
  }
  return run_window();
}

std::int64_t HypothesisEngine::audit_extensions() const {
  std::int64_t violations = 0;
  for (const LineageRecord& rec : lineage_) {
    if (rec.appended_constraint < 0) continue;
    const VprConstraint& c = history_.at(rec.appended_constraint);
    const Hypothesis& parent = all_.at(rec.parent);
    const double gap = closure_gap(parent.trajectory, c.t, c.t_prime);
    if (!(gap > cfg_.t_p) || gap != rec.selection_gap) {
      ++violations;
    }
  }
  return violations;
}

std::vector<std::int64_t> HypothesisEngine::live_ids() const {
  return {live_.begin(), live_.end()};
}

std::vector<LineageRecord> HypothesisEngine::lineage_with_final_ranks()
    const {
  std::vector<LineageRecord> out = lineage_;
  const std::vector<std::int64_t> ranked = ranking();
  for (std::size_t r = 0; r < ranked.size(); ++r) {
    LineageRecord& rec = out[static_cast<std::size_t>(ranked[r])];
    rec.final_rank = static_cast<std::int64_t>(r);
    rec.final_count = all_.at(ranked[r]).consistent_count;
  }
  return out;
}

}  // namespace ilv
