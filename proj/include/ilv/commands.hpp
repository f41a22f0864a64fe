#pragma once

#include <string>
#include <vector>

#include "ilv/io.hpp"

namespace ilv {

// Canonicalizes derived fields: the world seed and exclusion window track
// the global seed and retrieval settings, the engine seed is fanned out
// from the global one. Idempotent, so a manifest round-trips unchanged.
RunConfig resolve(RunConfig cfg);

// simulate: dataset files plus manifest under out_dir.
void cmd_simulate(const RunConfig& cfg, const std::string& out_dir);

// verify: streams the dataset through the engine and writes the result
// exports (manifest, constraints, window stats, top trajectories, rank-0
// constraint list, per-window consistency snapshots, lineage, PR and
// trajectory-error CSVs, summary).
void cmd_verify(const RunConfig& cfg, const std::string& dataset_dir,
                const std::string& out_dir);

// evaluate: PR sweep across one or more verify result directories plus
// the image-retrieval-only baseline grid.
void cmd_evaluate(const RunConfig& cfg,
                  const std::vector<std::string>& results_dirs,
                  const std::string& dataset_dir, const std::string& out_dir);

// run: simulate -> verify -> evaluate under one output directory.
void cmd_run(const RunConfig& cfg, const std::string& out_dir);

}  // namespace ilv
