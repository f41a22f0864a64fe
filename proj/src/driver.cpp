#include "ilv/driver.hpp"

#include <stdexcept>
#include <string>

namespace ilv {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t RunConfig::projection_seed() const {
  return splitmix64(seed ^ 0x70726f6aULL);
}

std::uint64_t RunConfig::engine_seed() const {
  return splitmix64(seed ^ 0x656e6769ULL);
}

std::uint64_t RunConfig::baseline_seed() const {
  return splitmix64(seed ^ 0x62617365ULL);
}

void RunConfig::validate() const {
  world.validate();
  retrieval.validate();
  engine.validate();
  if (baseline_reps < 1) {
    throw std::invalid_argument("RunConfig: baseline_reps must be positive");
  }
  for (const int x : baseline_x) {
    if (x < 1) {
      throw std::invalid_argument("RunConfig: baseline X values must be positive");
    }
  }
}

void Dataset::check_consistent_counts() const {
  const std::int64_t t = frames();
  if (t < 2) {
    throw std::invalid_argument("Dataset: needs at least 2 frames");
  }
  if (static_cast<std::int64_t>(odometry.size()) != t - 1) {
    throw std::invalid_argument(
        "Dataset: odometry count " + std::to_string(odometry.size()) +
        " does not match descriptor frames " + std::to_string(t));
  }
  if (static_cast<std::int64_t>(gt.trajectory.size()) != t) {
    throw std::invalid_argument(
        "Dataset: ground-truth count " +
        std::to_string(gt.trajectory.size()) +
        " does not match descriptor frames " + std::to_string(t));
  }
  for (std::int64_t i = 0; i < t; ++i) {
    if (descriptors[static_cast<std::size_t>(i)].t != i + 1) {
      throw std::invalid_argument("Dataset: descriptor frames not contiguous");
    }
  }
}

Dataset dataset_from_world(World world) {
  Dataset ds;
  ds.odometry = std::move(world.odometry);
  ds.descriptors = std::move(world.descriptors);
  ds.gt = std::move(world.gt);
  ds.registry = std::move(world.registry);
  return ds;
}

PipelineResult run_pipeline(
    const Dataset& dataset, const RunConfig& cfg,
    const std::vector<RawDescriptor>* pca_training,
    const std::function<void(const HypothesisEngine&)>& on_window) {
  cfg.retrieval.validate();
  cfg.engine.validate();
  dataset.check_consistent_counts();

  PipelineResult result;
  const std::vector<RawDescriptor>& train =
      pca_training ? *pca_training : dataset.descriptors;
  result.pca = fit_pca(train, cfg.retrieval.pca_k);
  result.projection = make_projection(cfg.retrieval.pca_k, cfg.retrieval.n_b,
                                      cfg.projection_seed());
  result.engine = std::make_unique<HypothesisEngine>(cfg.engine,
                                                     cfg.retrieval.delta_t);
  HypothesisEngine& engine = *result.engine;

  RetrievalIndex index;
  const std::int64_t frames = dataset.frames();
  result.appended_per_frame.reserve(static_cast<std::size_t>(frames));
  for (std::int64_t t = 1; t <= frames; ++t) {
    if (t >= 2) {
      engine.push_odometry(dataset.odometry[static_cast<std::size_t>(t - 2)]);
    }
    const CompressedDescriptor desc =
        compress(result.pca, dataset.descriptors[static_cast<std::size_t>(t - 1)]);
    const BinaryCode code = encode_binary(result.projection, desc);
    const auto matches = index.query(t, code, desc, cfg.retrieval);
    const auto kept = engine.append_constraints(matches);
    result.appended_per_frame.push_back(
        static_cast<std::int64_t>(kept.size()));
    index.append(code, desc);
    if (engine.at_window_boundary()) {
      engine.run_window();
      if (on_window) on_window(engine);
    }
  }
  if (engine.finalize() && on_window) {
    on_window(engine);
  }
  return result;
}

}  // namespace ilv
