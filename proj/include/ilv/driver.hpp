#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "ilv/evaluation.hpp"
#include "ilv/hypothesis_engine.hpp"
#include "ilv/retrieval.hpp"
#include "ilv/simulator.hpp"

namespace ilv {

struct RunConfig {
  std::uint64_t seed = 1;
  WorldConfig world;
  RetrievalConfig retrieval;
  EngineConfig engine;
  // Descriptors to fit the PCA on; empty means the dataset's own frames.
  std::string pca_training_path;
  // IR baseline sweep settings.
  std::vector<int> baseline_x = {10, 20, 30, 40, 50};
  int baseline_reps = 5;

  // The one user-facing seed fans out to the world, the projection and
  // the engine.
  std::uint64_t projection_seed() const;
  std::uint64_t engine_seed() const;
  std::uint64_t baseline_seed() const;
  void validate() const;
};

struct Dataset {
  std::vector<OdometryMeasurement> odometry;
  std::vector<RawDescriptor> descriptors;
  GroundTruth gt;
  RevisitRegistry registry;

  std::int64_t frames() const {
    return static_cast<std::int64_t>(descriptors.size());
  }
  void check_consistent_counts() const;
};

Dataset dataset_from_world(World world);

struct PipelineResult {
  std::unique_ptr<HypothesisEngine> engine;
  PcaModel pca;
  ProjectionModel projection;
  std::vector<std::int64_t> appended_per_frame;  // retrieval log
};

// Streams the dataset frame by frame: query past frames, append the
// matches, add the frame to the index, run a generation window every
// cfg.engine.window frames (plus a final partial window). on_window fires
// after each completed window with the engine state current.
PipelineResult run_pipeline(
    const Dataset& dataset, const RunConfig& cfg,
    const std::vector<RawDescriptor>* pca_training = nullptr,
    const std::function<void(const HypothesisEngine&)>& on_window = {});

}  // namespace ilv
