#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "ilv/constraint_store.hpp"
#include "ilv/pose_graph.hpp"
#include "ilv/retrieval.hpp"

namespace ilv {

enum class PathShape {
  square_loop,
  figure_eight,
  campus_grid,
};

PathShape path_shape_from_string(const std::string& s);
std::string to_string(PathShape shape);

struct WorldConfig {
  std::uint64_t rng_seed = 1;
  std::int64_t frames = 1651;  // T
  PathShape shape = PathShape::square_loop;
  double step = 0.46;            // metres per frame
  int laps = 2;                  // times the closed path is traversed
  double sigma_xy = 0.0;         // odometry translation noise per step
  double sigma_theta = 0.0;      // odometry rotation noise per step
  double bias_xy = 0.0;          // deterministic forward drift per step
  double bias_theta = 0.0;       // deterministic heading drift per step
  int descriptor_dim = 256;      // D
  double place_cell = 5.0;       // appearance quantization, metres
  int alias_pairs = 0;           // distant cell pairs sharing an embedding
  double appearance_noise = 0.0; // per-component descriptor noise
  double alias_min_gap = 30.0;   // minimum true distance between aliased cells
  std::int64_t delta_t = 200;    // temporal exclusion for the registry
  double t_p = 10.0;             // revisit gap threshold

  void validate() const;
};

// Canonical (t < t') frame pairs whose true gap is below t_p and whose
// temporal separation exceeds delta_t; the ground-truth oracle.
struct RevisitRegistry {
  std::vector<std::pair<std::int64_t, std::int64_t>> pairs;  // sorted

  bool contains(std::int64_t t, std::int64_t t_prime) const;
};

struct World {
  WorldConfig config;
  GroundTruth gt;
  std::vector<OdometryMeasurement> odometry;
  std::vector<RawDescriptor> descriptors;
  RevisitRegistry registry;
  // Appearance bookkeeping for the aliasing report.
  std::vector<int> cell_of_frame;             // per frame, dense cell id
  std::vector<Eigen::Vector2d> cell_centers;  // per cell id
  std::vector<std::pair<int, int>> aliased_cells;
};

World generate(const WorldConfig& cfg);

struct AliasReportEntry {
  int cell_a = 0;
  int cell_b = 0;
  Eigen::Vector2d center_a;
  Eigen::Vector2d center_b;
  // Colliding frame pairs that are retrieval-eligible yet truly distant:
  // same underlying embedding, |t - t'| > delta_t, true gap >= t_p.
  std::vector<std::pair<std::int64_t, std::int64_t>> frame_pairs;
};

std::vector<AliasReportEntry> aliasing_report(const World& world);

}  // namespace ilv
