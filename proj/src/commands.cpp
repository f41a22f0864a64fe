#include "ilv/commands.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>

#include <json.hpp>

namespace ilv {

namespace fs = std::filesystem;

RunConfig resolve(RunConfig cfg) {
  cfg.world.rng_seed = cfg.seed;
  cfg.world.delta_t = cfg.retrieval.delta_t;
  cfg.world.t_p = cfg.engine.t_p;
  cfg.engine.rng_seed = cfg.engine_seed();
  return cfg;
}

void cmd_simulate(const RunConfig& cfg, const std::string& out_dir) {
  cfg.validate();
  const World world = generate(cfg.world);
  const Dataset dataset = dataset_from_world(std::move(world));
  write_dataset(out_dir, dataset);
  write_manifest(out_dir + "/manifest.json", cfg);
}

namespace {

std::vector<ConstraintRecord> constraint_records(
    const ConstraintHistory& history, const GroundTruth& gt) {
  std::vector<ConstraintRecord> records;
  records.reserve(static_cast<std::size_t>(history.size()));
  for (const VprConstraint& c : history.all()) {
    records.push_back({c.id, c.t, c.t_prime, c.score,
                       label_ground_truth(c, gt) ? 1 : 0});
  }
  return records;
}

void write_snapshot(const HypothesisEngine& engine, const std::string& dir) {
  const auto ranked = engine.ranking();
  std::vector<ConsistencySnapshotRow> rows;
  rows.reserve(ranked.size());
  for (std::size_t r = 0; r < ranked.size(); ++r) {
    ConsistencySnapshotRow row;
    row.hyp_id = ranked[r];
    row.rank = static_cast<std::int64_t>(r);
    const std::size_t width = engine.table().row_width(ranked[r]);
    row.states.reserve(width);
    for (std::size_t c = 0; c < width; ++c) {
      switch (engine.table().entry(ranked[r], static_cast<std::int64_t>(c))) {
        case Consistency::consistent: row.states.push_back('1'); break;
        case Consistency::inconsistent: row.states.push_back('0'); break;
        case Consistency::not_evaluable: row.states.push_back('-'); break;
      }
    }
    rows.push_back(std::move(row));
  }
  char name[64];
  std::snprintf(name, sizeof(name), "consistency_window_%06lld.txt",
                static_cast<long long>(engine.frame_count()));
  write_consistency_snapshot(dir + "/" + name, rows);
}

}  // namespace

void cmd_verify(const RunConfig& cfg, const std::string& dataset_dir,
                const std::string& out_dir) {
  cfg.retrieval.validate();
  cfg.engine.validate();
  const Dataset dataset = read_dataset(dataset_dir);
  std::vector<RawDescriptor> training;
  if (!cfg.pca_training_path.empty()) {
    training = read_descriptors(cfg.pca_training_path);
  }

  fs::create_directories(out_dir);
  write_manifest(out_dir + "/manifest.json", cfg);

  const PipelineResult result = run_pipeline(
      dataset, cfg, cfg.pca_training_path.empty() ? nullptr : &training,
      [&](const HypothesisEngine& engine) { write_snapshot(engine, out_dir); });
  const HypothesisEngine& engine = *result.engine;

  save_models(out_dir + "/models.bin", result.pca, result.projection);
  write_constraints(out_dir + "/constraints.txt",
                    constraint_records(engine.history(), dataset.gt));
  write_window_stats(out_dir + "/window_stats.csv", engine.window_stats());
  write_lineage(out_dir + "/lineage.txt", engine.lineage_with_final_ranks());

  const auto ranked = engine.ranking();
  const std::size_t top = std::min<std::size_t>(ranked.size(), 10);
  std::vector<RankedTrajectory> top_rows;
  std::vector<SweepEntry> pr_rows;
  std::vector<RmseRow> rmse_rows;
  for (std::size_t r = 0; r < top; ++r) {
    const Hypothesis& h = engine.hypothesis(ranked[r]);
    top_rows.push_back(
        {static_cast<std::int64_t>(r), h.id, &h.trajectory});
    SweepEntry entry;
    entry.method = "ILV";
    entry.param = cfg.retrieval.n_r;
    entry.seed = cfg.seed;
    entry.point = precision_recall(h.trajectory, engine.history(), dataset.gt);
    entry.point.label = "rank" + std::to_string(r);
    pr_rows.push_back(std::move(entry));
    if (h.trajectory.size() == dataset.gt.trajectory.size()) {
      rmse_rows.push_back({h.id, static_cast<std::int64_t>(r),
                           trajectory_rmse(h.trajectory, dataset.gt.trajectory)});
    }
  }
  write_ranked_trajectories(out_dir + "/top_trajectories.txt", top_rows);
  write_pr_csv(out_dir + "/pr.csv", pr_rows);
  write_rmse_csv(out_dir + "/trajectory_error.csv", rmse_rows);

  if (!ranked.empty()) {
    const Hypothesis& best = engine.hypothesis(ranked.front());
    std::vector<ConstraintRecord> selected;
    for (const std::int64_t cid : best.constraint_ids) {
      const VprConstraint& c = engine.history().at(cid);
      selected.push_back({c.id, c.t, c.t_prime, c.score,
                          label_ground_truth(c, dataset.gt) ? 1 : 0});
    }
    write_constraints(out_dir + "/rank0_constraints.txt", selected);
  } else {
    write_constraints(out_dir + "/rank0_constraints.txt", {});
  }

  nlohmann::json summary;
  summary["frames"] = engine.frame_count();
  summary["history_size"] = engine.history().size();
  summary["dropped_constraints"] = engine.dropped_constraints();
  summary["windows"] = engine.windows_run();
  std::int64_t births = 0;
  std::size_t max_pairs = 0;
  for (const auto& w : engine.window_stats()) {
    births += w.births;
    max_pairs = std::max(max_pairs, w.evaluated_pairs);
  }
  summary["births"] = births;
  summary["max_window_evaluated_pairs"] = max_pairs;
  summary["audit_violations"] = engine.audit_extensions();
  summary["live_hypotheses"] = static_cast<std::int64_t>(ranked.size());
  if (!ranked.empty()) {
    const Hypothesis& best = engine.hypothesis(ranked.front());
    const PrPoint point =
        precision_recall(best.trajectory, engine.history(), dataset.gt);
    nlohmann::json rank0;
    rank0["hypothesis_id"] = best.id;
    rank0["tp"] = point.tp;
    rank0["fp"] = point.fp;
    rank0["fn"] = point.fn;
    rank0["fn_vs_registry"] = fn_vs_registry(
        best.trajectory, engine.history(), dataset.registry, cfg.engine.t_p);
    rank0["precision"] =
        point.precision ? nlohmann::json(*point.precision) : nlohmann::json();
    rank0["recall"] =
        point.recall ? nlohmann::json(*point.recall) : nlohmann::json();
    if (best.trajectory.size() == dataset.gt.trajectory.size()) {
      rank0["rmse_m"] = trajectory_rmse(best.trajectory, dataset.gt.trajectory);
    }
    summary["rank0"] = rank0;
  }
  std::ofstream os(out_dir + "/summary.json");
  if (!os) throw FileError("cannot write " + out_dir + "/summary.json");
  os << summary.dump(2) << '\n';
}

void cmd_evaluate(const RunConfig& cfg,
                  const std::vector<std::string>& results_dirs,
                  const std::string& dataset_dir, const std::string& out_dir) {
  if (results_dirs.empty()) {
    throw std::invalid_argument("evaluate: needs at least one results directory");
  }
  const Dataset dataset = read_dataset(dataset_dir);
  fs::create_directories(out_dir);

  std::vector<SweepEntry> entries;
  for (const std::string& dir : results_dirs) {
    const RunConfig run_cfg =
        run_config_from_manifest_file(dir + "/manifest.json");
    const auto trajectories =
        read_ranked_trajectories(dir + "/top_trajectories.txt");
    const auto records = read_constraints(dir + "/constraints.txt");
    if (trajectories.empty()) continue;
    const Trajectory& rank0 = trajectories.front().second;
    PrPoint point;
    for (const ConstraintRecord& r : records) {
      const VprConstraint c{r.id, r.t, r.t_prime, r.score};
      const bool in_s = is_consistent(c, rank0, run_cfg.engine.t_p);
      if (in_s && r.gt_label) ++point.tp;
      if (in_s && !r.gt_label) ++point.fp;
      if (!in_s && r.gt_label) ++point.fn;
    }
    if (point.tp + point.fp > 0)
      point.precision = double(point.tp) / double(point.tp + point.fp);
    if (point.tp + point.fn > 0)
      point.recall = double(point.tp) / double(point.tp + point.fn);
    SweepEntry entry;
    entry.method = "ILV";
    entry.param = run_cfg.retrieval.n_r;
    entry.seed = run_cfg.seed;
    entry.point = point;
    entries.push_back(std::move(entry));
  }

  // IR baseline over the first run's constraint history.
  const RunConfig base_cfg =
      run_config_from_manifest_file(results_dirs.front() + "/manifest.json");
  const auto base_records =
      read_constraints(results_dirs.front() + "/constraints.txt");
  ConstraintHistory history(base_cfg.retrieval.delta_t);
  {
    std::vector<VprConstraint> batch;
    batch.reserve(base_records.size());
    for (const auto& r : base_records) {
      batch.push_back({kUnassignedId, r.t, r.t_prime, r.score});
    }
    history.append(batch);
  }
  if (history.size() > 0) {
    for (const int x : cfg.baseline_x) {
      for (int rep = 0; rep < cfg.baseline_reps; ++rep) {
        std::mt19937_64 rng(cfg.baseline_seed() +
                            static_cast<std::uint64_t>(x) * 1000003ULL +
                            static_cast<std::uint64_t>(rep));
        SweepEntry entry;
        entry.method = "IR";
        entry.param = x;
        entry.seed = static_cast<std::uint64_t>(rep);
        entry.point = ir_baseline_point(history, dataset.odometry, x, rng,
                                        dataset.gt, base_cfg.engine.weights,
                                        base_cfg.engine.optimizer);
        entries.push_back(std::move(entry));
      }
    }
  }

  write_pr_csv(out_dir + "/pr_sweep.csv", entries);
  const auto summaries = summarize_sweep(entries);
  write_sweep_summary_csv(out_dir + "/pr_summary.csv", summaries);

  nlohmann::json totals;
  std::int64_t tp = 0, fp = 0, fn = 0;
  for (const auto& e : entries) {
    tp += e.point.tp;
    fp += e.point.fp;
    fn += e.point.fn;
  }
  totals["entries"] = entries.size();
  totals["tp_total"] = tp;
  totals["fp_total"] = fp;
  totals["fn_total"] = fn;
  std::ofstream os(out_dir + "/summary.json");
  if (!os) throw FileError("cannot write " + out_dir + "/summary.json");
  os << totals.dump(2) << '\n';
}

void cmd_run(const RunConfig& cfg, const std::string& out_dir) {
  cfg.validate();
  fs::create_directories(out_dir);
  cmd_simulate(cfg, out_dir + "/dataset");
  cmd_verify(cfg, out_dir + "/dataset", out_dir + "/results");
  cmd_evaluate(cfg, {out_dir + "/results"}, out_dir + "/dataset",
               out_dir + "/eval");
}

}  // namespace ilv
