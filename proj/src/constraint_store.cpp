#include "ilv/constraint_store.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace ilv {

std::vector<std::int64_t> ConstraintHistory::append(
    std::span<const VprConstraint> batch) {
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto& c = batch[i];
    if (c.t < 1 || c.t_prime < 1 || std::abs(c.t - c.t_prime) <= delta_t_) {
      throw std::invalid_argument(
          "ConstraintHistory::append: item " + std::to_string(i) + " (" +
          std::to_string(c.t) + ", " + std::to_string(c.t_prime) +
          ") violates the temporal exclusion |t - t'| > " +
          std::to_string(delta_t_));
    }
  }
  std::vector<std::int64_t> ids;
  ids.reserve(batch.size());
  for (const auto& c : batch) {
    VprConstraint stored = c;
    stored.id = static_cast<std::int64_t>(constraints_.size());
    constraints_.push_back(stored);
    ids.push_back(stored.id);
  }
  return ids;
}

const VprConstraint& ConstraintHistory::at(std::int64_t id) const {
  if (id < 0 || id >= size()) {
    throw std::out_of_range("ConstraintHistory::at: id " + std::to_string(id));
  }
  return constraints_[static_cast<std::size_t>(id)];
}

Consistency check_consistency(const VprConstraint& c, const Trajectory& traj,
                              double t_p) {
  if (c.t < 1 || c.t_prime < 1) {
    throw std::invalid_argument("check_consistency: invalid frame index");
  }
  const auto len = static_cast<std::int64_t>(traj.size());
  if (c.t > len || c.t_prime > len) {
    return Consistency::not_evaluable;
  }
  return closure_gap(traj, c.t, c.t_prime) < t_p ? Consistency::consistent
                                                 : Consistency::inconsistent;
}

bool is_consistent(const VprConstraint& c, const Trajectory& traj,
                   double t_p) {
  return check_consistency(c, traj, t_p) == Consistency::consistent;
}

bool label_ground_truth(const VprConstraint& c, const GroundTruth& gt) {
  const Consistency s = check_consistency(c, gt.trajectory, gt.t_p);
  if (s == Consistency::not_evaluable) {
    throw std::out_of_range(
        "label_ground_truth: ground truth does not cover frames " +
        std::to_string(c.t) + ", " + std::to_string(c.t_prime));
  }
  return s == Consistency::consistent;
}

std::size_t ConsistencyTable::refresh(
    const std::map<std::int64_t, const Trajectory*>& live,
    const ConstraintHistory& history) {
  ++generation_;
  for (auto it = rows_.begin(); it != rows_.end();) {
    it = live.contains(it->first) ? std::next(it) : rows_.erase(it);
  }
  std::size_t evaluated = 0;
  const auto constraints = history.all();
  for (const auto& [id, traj] : live) {
    Row& row = rows_[id];
    const std::size_t from = row.states.size();
    if (from == constraints.size()) continue;
    row.states.reserve(constraints.size());
    for (std::size_t c = from; c < constraints.size(); ++c) {
      const Consistency s = check_consistency(constraints[c], *traj, t_p_);
      row.states.push_back(s);
      if (s == Consistency::consistent) ++row.consistent;
      ++evaluated;
    }
    row.stamp = generation_;
  }
  return evaluated;
}

std::int64_t ConsistencyTable::consistent_count(std::int64_t id) const {
  return rows_.at(id).consistent;
}

Consistency ConsistencyTable::entry(std::int64_t id,
                                    std::int64_t constraint_id) const {
  const Row& row = rows_.at(id);
  if (constraint_id < 0 ||
      constraint_id >= static_cast<std::int64_t>(row.states.size())) {
    throw std::out_of_range("ConsistencyTable::entry: constraint " +
                            std::to_string(constraint_id));
  }
  return row.states[static_cast<std::size_t>(constraint_id)];
}

std::uint64_t ConsistencyTable::row_generation(std::int64_t id) const {
  return rows_.at(id).stamp;
}

std::vector<std::int64_t> ConsistencyTable::row_ids() const {
  std::vector<std::int64_t> ids;
  ids.reserve(rows_.size());
  for (const auto& [id, row] : rows_) ids.push_back(id);
  return ids;
}

std::size_t ConsistencyTable::row_width(std::int64_t id) const {
  return rows_.at(id).states.size();
}

bool same_state(const ConsistencyTable& a, const ConsistencyTable& b) {
  if (a.rows_.size() != b.rows_.size()) return false;
  for (auto ia = a.rows_.begin(), ib = b.rows_.begin(); ia != a.rows_.end();
       ++ia, ++ib) {
    if (ia->first != ib->first) return false;
    if (ia->second.consistent != ib->second.consistent) return false;
    if (ia->second.states != ib->second.states) return false;
  }
  return true;
}

}  // namespace ilv
