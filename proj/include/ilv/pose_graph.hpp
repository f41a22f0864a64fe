#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "ilv/se2.hpp"

namespace ilv {

// Frames are 1-based: frame t lives at index t-1. Frame 1 is the anchor.
using Trajectory = std::vector<Pose2d>;

// Relative motion from frame t-1 to frame t, so valid indices start at 2.
struct OdometryMeasurement {
  std::int64_t t = 0;
  Pose2d delta;
};

// Place-coincidence constraint between frames i and j. Translation only:
// the measurement asserts the two frames are the same place, nothing about
// relative orientation.
struct LoopEdge {
  std::int64_t i = 0;
  std::int64_t j = 0;
  double weight = 1.0;
};

struct GraphWeights {
  double w_xy = 1.0;     // odometry translation information, 1/m^2
  double w_theta = 10.0; // odometry rotation information, 1/rad^2
  double loop = 1.0;     // loop-edge information, 1/m^2
};

struct PoseGraph {
  std::vector<OdometryMeasurement> odom_edges; // contiguous t = 2..T
  std::vector<LoopEdge> loop_edges;
  GraphWeights weights;

  std::int64_t frame_count() const {
    return static_cast<std::int64_t>(odom_edges.size()) + 1;
  }
};

struct OptimizerOptions {
  int max_iters = 50;
  double tol = 1e-6;          // stop when accepted error decrease falls below
  double lambda_init = 1e-4;  // Levenberg damping, x10 on rejection, /10 on acceptance
  double lambda_max = 1e10;   // past this the solve gives up and flags degraded
};

struct OptimizeResult {
  Trajectory trajectory;
  double final_error = 0.0;
  int iterations = 0;
  bool degraded = false;
  std::vector<double> error_history; // accepted errors, non-increasing
};

// Chains deltas from the identity anchor: pose_t = pose_{t-1} (+) delta_t.
// Throws std::invalid_argument naming the missing index on a gap.
Trajectory integrate_odometry(std::span<const OdometryMeasurement> odometry);

// Sum of weighted squared residuals over all edges.
double total_error(const PoseGraph& graph, const Trajectory& traj);

// Euclidean distance between the (x, y) positions of frames i and j.
double closure_gap(const Trajectory& traj, std::int64_t i, std::int64_t j);

// Sparse damped Gauss-Newton over poses 2..T (frame 1 stays fixed).
OptimizeResult optimize(const PoseGraph& graph, const Trajectory& initial,
                        const OptimizerOptions& opts = {});

// Residual and Jacobian blocks, exposed so tests can check the
// linearization against finite differences.
Eigen::Vector3d odometry_residual(const Pose2d& xi, const Pose2d& xj,
                                  const Pose2d& measured);
void odometry_jacobians(const Pose2d& xi, const Pose2d& xj,
                        Eigen::Matrix3d& ji, Eigen::Matrix3d& jj);
Eigen::Vector2d loop_residual(const Pose2d& xi, const Pose2d& xj);
void loop_jacobians(Eigen::Matrix<double, 2, 3>& ji,
                    Eigen::Matrix<double, 2, 3>& jj);

}  // namespace ilv
