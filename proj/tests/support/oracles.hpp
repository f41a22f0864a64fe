#pragma once

// Test-only reference implementations. Everything here recomputes results
// through an independent route (homogeneous matrices, finite differences,
// dense solves) so the library under test never checks itself.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Geometry>

#include "ilv/pose_graph.hpp"
#include "ilv/se2.hpp"

namespace oracle {

inline Eigen::Matrix3d homogeneous(const ilv::Pose2d& p) {
  Eigen::Matrix3d m = Eigen::Matrix3d::Identity();
  m.topLeftCorner<2, 2>() = Eigen::Rotation2Dd(p.theta).toRotationMatrix();
  m(0, 2) = p.x;
  m(1, 2) = p.y;
  return m;
}

inline ilv::Pose2d from_homogeneous(const Eigen::Matrix3d& m) {
  const double theta = std::atan2(m(1, 0), m(0, 0));
  return ilv::Pose2d(m(0, 2), m(1, 2), theta);
}

// Matrix-product route for compose.
inline ilv::Pose2d compose_via_matrices(const ilv::Pose2d& a,
                                        const ilv::Pose2d& b) {
  return from_homogeneous(homogeneous(a) * homogeneous(b));
}

inline double angle_diff(double a, double b) {
  return std::atan2(std::sin(a - b), std::cos(a - b));
}

inline bool pose_approx(const ilv::Pose2d& a, const ilv::Pose2d& b,
                        double tol) {
  return std::abs(a.x - b.x) <= tol && std::abs(a.y - b.y) <= tol &&
         std::abs(angle_diff(a.theta, b.theta)) <= tol;
}

inline ilv::Pose2d random_pose(std::mt19937_64& rng, double span = 10.0) {
  std::uniform_real_distribution<double> pos(-span, span);
  std::uniform_real_distribution<double> ang(-M_PI, M_PI);
  return ilv::Pose2d(pos(rng), pos(rng), ang(rng));
}

// Dense damped least-squares reference for the pose-graph objective.
// Residuals are recomputed from homogeneous matrices and the Jacobian is
// taken by central finite differences; the linear solve is a dense LDLT.
class DenseReference {
 public:
  explicit DenseReference(const ilv::PoseGraph& graph) : graph_(graph) {}

  Eigen::VectorXd residuals(const ilv::Trajectory& x) const {
    const auto& w = graph_.weights;
    Eigen::VectorXd r(3 * graph_.odom_edges.size() +
                      2 * graph_.loop_edges.size());
    Eigen::Index at = 0;
    for (const auto& m : graph_.odom_edges) {
      const Eigen::Matrix3d rel =
          homogeneous(x[m.t - 2]).inverse() * homogeneous(x[m.t - 1]);
      const ilv::Pose2d pred = from_homogeneous(rel);
      r[at++] = std::sqrt(w.w_xy) * (pred.x - m.delta.x);
      r[at++] = std::sqrt(w.w_xy) * (pred.y - m.delta.y);
      r[at++] = std::sqrt(w.w_theta) * angle_diff(pred.theta, m.delta.theta);
    }
    for (const auto& e : graph_.loop_edges) {
      const double s = std::sqrt(e.weight);
      r[at++] = s * (x[e.i - 1].x - x[e.j - 1].x);
      r[at++] = s * (x[e.i - 1].y - x[e.j - 1].y);
    }
    return r;
  }

  double error(const ilv::Trajectory& x) const {
    return residuals(x).squaredNorm();
  }

  Eigen::MatrixXd jacobian_fd(const ilv::Trajectory& x,
                              double eps = 1e-7) const {
    const Eigen::Index n_res = residuals(x).size();
    const Eigen::Index n_var = 3 * (static_cast<Eigen::Index>(x.size()) - 1);
    Eigen::MatrixXd j(n_res, n_var);
    for (Eigen::Index v = 0; v < n_var; ++v) {
      ilv::Trajectory hi = x, lo = x;
      const std::size_t frame = static_cast<std::size_t>(v / 3) + 1;
      const int comp = static_cast<int>(v % 3);
      auto nudge = [&](ilv::Trajectory& traj, double d) {
        ilv::Pose2d p = traj[frame];
        if (comp == 0) p.x += d;
        if (comp == 1) p.y += d;
        if (comp == 2) p = ilv::Pose2d(p.x, p.y, p.theta + d);
        traj[frame] = p;
      };
      nudge(hi, eps);
      nudge(lo, -eps);
      j.col(v) = (residuals(hi) - residuals(lo)) / (2 * eps);
    }
    return j;
  }

  // Dense Levenberg loop run until stall; returns the final error.
  double solve(const ilv::Trajectory& initial, ilv::Trajectory* out = nullptr,
               int max_iters = 200) const {
    ilv::Trajectory x = initial;
    double err = error(x);
    double lambda = 1e-4;
    for (int it = 0; it < max_iters; ++it) {
      const Eigen::VectorXd r = residuals(x);
      const Eigen::MatrixXd j = jacobian_fd(x);
      const Eigen::MatrixXd h = j.transpose() * j;
      const Eigen::VectorXd g = j.transpose() * r;
      bool accepted = false;
      while (!accepted) {
        Eigen::MatrixXd damped = h;
        damped.diagonal().array() += lambda;
        const Eigen::VectorXd delta = damped.ldlt().solve(-g);
        ilv::Trajectory cand = x;
        for (std::size_t t = 2; t <= x.size(); ++t) {
          const auto d = delta.segment<3>((t - 2) * 3);
          cand[t - 1] = ilv::Pose2d(x[t - 1].x + d[0], x[t - 1].y + d[1],
                                    x[t - 1].theta + d[2]);
        }
        const double cand_err = error(cand);
        if (std::isfinite(cand_err) && cand_err <= err) {
          const double decrease = err - cand_err;
          x = std::move(cand);
          err = cand_err;
          lambda = std::max(lambda / 10.0, 1e-14);
          accepted = true;
          if (decrease < 1e-12) {
            if (out) *out = x;
            return err;
          }
        } else {
          lambda *= 10.0;
          if (lambda > 1e14) {
            if (out) *out = x;
            return err;
          }
        }
      }
    }
    if (out) *out = x;
    return err;
  }

 private:
  const ilv::PoseGraph& graph_;
};

struct RandomGraph {
  ilv::PoseGraph graph;
  ilv::Trajectory initial;  // integrated odometry
};

// Noisy chain with a few random loop edges, small enough that the damped
// sparse solve and the dense reference land in the same basin.
inline RandomGraph make_random_graph(std::mt19937_64& rng, int max_nodes = 6) {
  std::uniform_int_distribution<int> n_nodes_dist(3, max_nodes);
  const int n = n_nodes_dist(rng);
  std::normal_distribution<double> noise(0.0, 0.05);
  std::uniform_real_distribution<double> turn(-0.6, 0.6);

  RandomGraph out;
  out.graph.weights.w_xy = 1.0;
  out.graph.weights.w_theta = 10.0;
  out.graph.weights.loop = 1.0;
  for (int t = 2; t <= n; ++t) {
    out.graph.odom_edges.push_back(
        {t, ilv::Pose2d(1.0 + noise(rng), noise(rng), turn(rng))});
  }
  std::uniform_int_distribution<int> loops_dist(1, 2);
  std::uniform_int_distribution<int> node_dist(1, n);
  const int n_loops = loops_dist(rng);
  for (int l = 0; l < n_loops; ++l) {
    int i = node_dist(rng);
    int j = node_dist(rng);
    if (i == j) j = (j % n) + 1;
    out.graph.loop_edges.push_back({i, j, 1.0});
  }
  out.initial = ilv::integrate_odometry(out.graph.odom_edges);
  return out;
}

// Spearman rank correlation; average ranks for ties.
inline double spearman(const std::vector<double>& a,
                       const std::vector<double>& b) {
  auto ranks = [](const std::vector<double>& v) {
    const std::size_t n = v.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0u);
    std::sort(order.begin(), order.end(),
              [&](std::size_t i, std::size_t j) { return v[i] < v[j]; });
    std::vector<double> r(n);
    std::size_t i = 0;
    while (i < n) {
      std::size_t j = i;
      while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
      const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
      for (std::size_t k = i; k <= j; ++k) r[order[k]] = avg;
      i = j + 1;
    }
    return r;
  };
  const std::vector<double> ra = ranks(a), rb = ranks(b);
  const double n = static_cast<double>(a.size());
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += ra[i];
    mb += rb[i];
  }
  ma /= n;
  mb /= n;
  double cov = 0, va = 0, vb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    cov += (ra[i] - ma) * (rb[i] - mb);
    va += (ra[i] - ma) * (ra[i] - ma);
    vb += (rb[i] - mb) * (rb[i] - mb);
  }
  return cov / std::sqrt(va * vb);
}

}  // namespace oracle
