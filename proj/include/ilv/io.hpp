#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ilv/driver.hpp"

namespace ilv {

// Malformed content: message carries the file and 1-based line number.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Filesystem trouble (missing file, failed write).
class FileError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Shortest decimal form that parses back to the same double.
std::string fmt_double(double v);

// Line-oriented dataset files. Every file starts with
//   #format <name> <version> <count> <fields>
// followed by exactly <count> records of <fields> whitespace-separated
// fields. Readers reject count or field mismatches with the line number.
void write_odometry(const std::string& path,
                    std::span<const OdometryMeasurement> odometry);
std::vector<OdometryMeasurement> read_odometry(const std::string& path);

void write_descriptors(const std::string& path,
                       std::span<const RawDescriptor> descriptors);
std::vector<RawDescriptor> read_descriptors(const std::string& path);

void write_ground_truth(const std::string& path, const Trajectory& traj);
Trajectory read_ground_truth(const std::string& path);

void write_registry(const std::string& path, const RevisitRegistry& registry);
RevisitRegistry read_registry(const std::string& path);

// Whole-dataset helpers over a directory containing odometry.txt,
// descriptors.txt, ground_truth.txt and registry.txt.
void write_dataset(const std::string& dir, const Dataset& dataset);
Dataset read_dataset(const std::string& dir);

// Constraint export: id, frames, score and the ground-truth label.
struct ConstraintRecord {
  std::int64_t id = 0;
  std::int64_t t = 0;
  std::int64_t t_prime = 0;
  double score = 0.0;
  int gt_label = 0;
};
void write_constraints(const std::string& path,
                       std::span<const ConstraintRecord> records);
std::vector<ConstraintRecord> read_constraints(const std::string& path);

void write_lineage(const std::string& path,
                   std::span<const LineageRecord> records);

struct RankedTrajectory {
  std::int64_t rank = 0;
  std::int64_t id = 0;
  const Trajectory* trajectory = nullptr;
};
void write_ranked_trajectories(const std::string& path,
                               std::span<const RankedTrajectory> rows);
// Returns rank -> (id, trajectory), ascending rank.
std::vector<std::pair<std::int64_t, Trajectory>> read_ranked_trajectories(
    const std::string& path);

struct ConsistencySnapshotRow {
  std::int64_t hyp_id = 0;
  std::int64_t rank = 0;
  std::string states;  // one char per constraint id: '1', '0' or '-'
};
void write_consistency_snapshot(const std::string& path,
                                std::span<const ConsistencySnapshotRow> rows);

void write_window_stats(const std::string& path,
                        std::span<const WindowStats> stats);

void write_pr_csv(const std::string& path, std::span<const SweepEntry> rows);
std::vector<SweepEntry> read_pr_csv(const std::string& path);
void write_sweep_summary_csv(const std::string& path,
                             std::span<const SweepSummary> rows);

struct RmseRow {
  std::int64_t hypothesis_id = 0;
  std::int64_t rank = 0;
  double rmse_m = 0.0;
};
void write_rmse_csv(const std::string& path, std::span<const RmseRow> rows);

// Run manifest: the fully resolved configuration as JSON; a run is
// reproducible from its manifest alone.
std::string manifest_to_json(const RunConfig& cfg);
RunConfig run_config_from_manifest_file(const std::string& path);
void write_manifest(const std::string& path, const RunConfig& cfg);

}  // namespace ilv
