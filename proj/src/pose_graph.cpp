#include "ilv/pose_graph.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

namespace ilv {

namespace {

void check_frame(const Trajectory& traj, std::int64_t t, const char* what) {
  if (t < 1 || t > static_cast<std::int64_t>(traj.size())) {
    throw std::out_of_range(std::string(what) + ": frame " + std::to_string(t) +
                            " outside trajectory of length " +
                            std::to_string(traj.size()));
  }
}

}  // namespace

Trajectory integrate_odometry(std::span<const OdometryMeasurement> odometry) {
  Trajectory traj;
  traj.reserve(odometry.size() + 1);
  traj.push_back(Pose2d::identity());
  std::int64_t expected = 2;
  for (const auto& m : odometry) {
    if (m.t != expected) {
      throw std::invalid_argument("integrate_odometry: missing index " +
                                  std::to_string(expected) + ", got " +
                                  std::to_string(m.t));
    }
    traj.push_back(compose(traj.back(), m.delta));
    ++expected;
  }
  return traj;
}

Eigen::Vector3d odometry_residual(const Pose2d& xi, const Pose2d& xj,
                                  const Pose2d& measured) {
  const Pose2d pred = between(xi, xj);
  return {pred.x - measured.x, pred.y - measured.y,
          normalize_angle(pred.theta - measured.theta)};
}

void odometry_jacobians(const Pose2d& xi, const Pose2d& xj,
                        Eigen::Matrix3d& ji, Eigen::Matrix3d& jj) {
  const double c = std::cos(xi.theta);
  const double s = std::sin(xi.theta);
  const double dx = xj.x - xi.x;
  const double dy = xj.y - xi.y;
  ji << -c, -s, -s * dx + c * dy,
         s, -c, -c * dx - s * dy,
         0,  0, -1;
  jj << c, s, 0,
       -s, c, 0,
        0, 0, 1;
}

Eigen::Vector2d loop_residual(const Pose2d& xi, const Pose2d& xj) {
  return {xi.x - xj.x, xi.y - xj.y};
}

void loop_jacobians(Eigen::Matrix<double, 2, 3>& ji,
                    Eigen::Matrix<double, 2, 3>& jj) {
  ji << 1, 0, 0,
        0, 1, 0;
  jj << -1, 0, 0,
         0, -1, 0;
}

double total_error(const PoseGraph& graph, const Trajectory& traj) {
  if (static_cast<std::int64_t>(traj.size()) != graph.frame_count()) {
    throw std::invalid_argument("total_error: trajectory length " +
                                std::to_string(traj.size()) +
                                " does not match graph frame count " +
                                std::to_string(graph.frame_count()));
  }
  const auto& w = graph.weights;
  double err = 0.0;
  for (const auto& m : graph.odom_edges) {
    const Eigen::Vector3d r =
        odometry_residual(traj[m.t - 2], traj[m.t - 1], m.delta);
    err += w.w_xy * (r[0] * r[0] + r[1] * r[1]) + w.w_theta * r[2] * r[2];
  }
  for (const auto& e : graph.loop_edges) {
    check_frame(traj, e.i, "total_error loop edge");
    check_frame(traj, e.j, "total_error loop edge");
    const Eigen::Vector2d r = loop_residual(traj[e.i - 1], traj[e.j - 1]);
    err += e.weight * r.squaredNorm();
  }
  return err;
}

double closure_gap(const Trajectory& traj, std::int64_t i, std::int64_t j) {
  check_frame(traj, i, "closure_gap");
  check_frame(traj, j, "closure_gap");
  return (traj[i - 1].position() - traj[j - 1].position()).norm();
}

namespace {

// Variable layout: frame t (t >= 2) owns the 3 slots starting at (t-2)*3.
// Frame 1 is the gauge anchor and never enters the system.
struct NormalEquations {
  Eigen::SparseMatrix<double> h;
  Eigen::VectorXd g;
};

NormalEquations build_normal_equations(const PoseGraph& graph,
                                       const Trajectory& x) {
  const std::int64_t n_var = (graph.frame_count() - 1) * 3;
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(graph.odom_edges.size() * 36 + graph.loop_edges.size() * 16);
  Eigen::VectorXd g = Eigen::VectorXd::Zero(n_var);

  auto add_block = [&](std::int64_t frame_row, std::int64_t frame_col,
                       const Eigen::Matrix3d& blk) {
    if (frame_row < 2 || frame_col < 2) return;
    const std::int64_t r0 = (frame_row - 2) * 3;
    const std::int64_t c0 = (frame_col - 2) * 3;
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c)
        triplets.emplace_back(r0 + r, c0 + c, blk(r, c));
  };
  auto add_grad = [&](std::int64_t frame, const Eigen::Vector3d& v) {
    if (frame < 2) return;
    g.segment<3>((frame - 2) * 3) += v;
  };

  const auto& w = graph.weights;
  const Eigen::Vector3d w_odo(w.w_xy, w.w_xy, w.w_theta);
  for (const auto& m : graph.odom_edges) {
    const std::int64_t i = m.t - 1;
    const std::int64_t j = m.t;
    const Eigen::Vector3d r = odometry_residual(x[i - 1], x[j - 1], m.delta);
    Eigen::Matrix3d ji, jj;
    odometry_jacobians(x[i - 1], x[j - 1], ji, jj);
    const Eigen::Matrix3d jiw = w_odo.asDiagonal() * ji;
    const Eigen::Matrix3d jjw = w_odo.asDiagonal() * jj;
    add_block(i, i, ji.transpose() * jiw);
    add_block(i, j, ji.transpose() * jjw);
    add_block(j, i, jj.transpose() * jiw);
    add_block(j, j, jj.transpose() * jjw);
    add_grad(i, ji.transpose() * (w_odo.asDiagonal() * r));
    add_grad(j, jj.transpose() * (w_odo.asDiagonal() * r));
  }

  Eigen::Matrix<double, 2, 3> li, lj;
  loop_jacobians(li, lj);
  for (const auto& e : graph.loop_edges) {
    const Eigen::Vector2d r = loop_residual(x[e.i - 1], x[e.j - 1]);
    add_block(e.i, e.i, e.weight * li.transpose() * li);
    add_block(e.i, e.j, e.weight * li.transpose() * lj);
    add_block(e.j, e.i, e.weight * lj.transpose() * li);
    add_block(e.j, e.j, e.weight * lj.transpose() * lj);
    add_grad(e.i, e.weight * li.transpose() * r);
    add_grad(e.j, e.weight * lj.transpose() * r);
  }

  NormalEquations eq;
  eq.h.resize(n_var, n_var);
  eq.h.setFromTriplets(triplets.begin(), triplets.end());
  eq.g = std::move(g);
  return eq;
}

Trajectory apply_step(const Trajectory& x, const Eigen::VectorXd& delta) {
  Trajectory out = x;
  for (std::size_t t = 2; t <= x.size(); ++t) {
    const auto d = delta.segment<3>((t - 2) * 3);
    out[t - 1] = Pose2d(x[t - 1].x + d[0], x[t - 1].y + d[1],
                        x[t - 1].theta + d[2]);
  }
  return out;
}

}  // namespace

OptimizeResult optimize(const PoseGraph& graph, const Trajectory& initial,
                        const OptimizerOptions& opts) {
  if (static_cast<std::int64_t>(initial.size()) != graph.frame_count()) {
    throw std::invalid_argument("optimize: initial trajectory length " +
                                std::to_string(initial.size()) +
                                " does not match graph frame count " +
                                std::to_string(graph.frame_count()));
  }
  for (const auto& e : graph.loop_edges) {
    check_frame(initial, e.i, "optimize loop edge");
    check_frame(initial, e.j, "optimize loop edge");
    if (e.i == e.j) {
      throw std::invalid_argument("optimize: loop edge ties frame " +
                                  std::to_string(e.i) + " to itself");
    }
  }

  OptimizeResult res;
  res.trajectory = initial;
  res.final_error = total_error(graph, res.trajectory);
  res.error_history.push_back(res.final_error);
  if (initial.size() < 2) {
    return res;
  }

  const std::int64_t n_var = (graph.frame_count() - 1) * 3;
  Eigen::SparseMatrix<double> identity(n_var, n_var);
  identity.setIdentity();

  double lambda = opts.lambda_init;
  for (int iter = 0; iter < opts.max_iters; ++iter) {
    const NormalEquations eq = build_normal_equations(graph, res.trajectory);
    if (eq.g.lpNorm<Eigen::Infinity>() < 1e-12) {
      break;  // already at a stationary point
    }
    bool accepted = false;
    double decrease = 0.0;
    while (!accepted) {
      const Eigen::SparseMatrix<double> damped = eq.h + lambda * identity;
      Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(damped);
      bool solved = solver.info() == Eigen::Success;
      Eigen::VectorXd delta;
      if (solved) {
        delta = solver.solve(-eq.g);
        solved = solver.info() == Eigen::Success && delta.allFinite();
      }
      if (solved) {
        Trajectory candidate = apply_step(res.trajectory, delta);
        const double cand_err = total_error(graph, candidate);
        if (std::isfinite(cand_err) && cand_err <= res.final_error) {
          decrease = res.final_error - cand_err;
          res.trajectory = std::move(candidate);
          res.final_error = cand_err;
          res.error_history.push_back(cand_err);
          ++res.iterations;
          lambda = std::max(lambda / 10.0, 1e-12);
          accepted = true;
          continue;
        }
      }
      lambda *= 10.0;
      if (lambda > opts.lambda_max) {
        res.degraded = true;
        return res;
      }
    }
    if (decrease < opts.tol) {
      break;
    }
  }
  return res;
}

}  // namespace ilv
