// ilv: incremental loop-closure verification over pose-graph SLAM.
//
// Subcommands:
//   simulate  generate a synthetic dataset (odometry, descriptors,
//             ground truth, revisit registry)
//   verify    stream a dataset through the hypothesize-and-verify engine
//   evaluate  PR sweep of verify results plus the retrieval-only baseline
//   run       simulate -> verify -> evaluate in one output directory

#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ilv/commands.hpp"

namespace {

struct Cli {
  ilv::RunConfig cfg;
  std::string manifest_path;
  std::string shape = "square_loop";
  std::string dataset_dir;
  std::string out_dir;
  std::vector<std::string> results_dirs;
};

void add_config_flags(CLI::App* app, Cli& cli) {
  app->add_option("--seed", cli.cfg.seed, "Global RNG seed");
  app->add_option("--manifest", cli.manifest_path,
                  "Load the full configuration from a manifest file");
  // World.
  app->add_option("--frames", cli.cfg.world.frames, "Frames to simulate");
  app->add_option("--shape", cli.shape,
                  "Path shape: square_loop, figure_eight, campus_grid");
  app->add_option("--step", cli.cfg.world.step, "Metres per frame");
  app->add_option("--laps", cli.cfg.world.laps, "Loop traversals");
  app->add_option("--sigma-xy", cli.cfg.world.sigma_xy,
                  "Odometry translation noise per step");
  app->add_option("--sigma-theta", cli.cfg.world.sigma_theta,
                  "Odometry rotation noise per step");
  app->add_option("--bias-xy", cli.cfg.world.bias_xy,
                  "Deterministic forward drift per step");
  app->add_option("--bias-theta", cli.cfg.world.bias_theta,
                  "Deterministic heading drift per step");
  app->add_option("--descriptor-dim", cli.cfg.world.descriptor_dim,
                  "Raw descriptor dimension");
  app->add_option("--place-cell", cli.cfg.world.place_cell,
                  "Appearance cell size, metres");
  app->add_option("--alias-pairs", cli.cfg.world.alias_pairs,
                  "Distant cell pairs sharing an appearance");
  app->add_option("--appearance-noise", cli.cfg.world.appearance_noise,
                  "Descriptor noise per component");
  app->add_option("--alias-min-gap", cli.cfg.world.alias_min_gap,
                  "Minimum distance between aliased cells");
  // Retrieval.
  app->add_option("--nr", cli.cfg.retrieval.n_r, "Matches kept per query");
  app->add_option("--tb", cli.cfg.retrieval.t_b, "Hamming threshold");
  app->add_option("--delta-t", cli.cfg.retrieval.delta_t,
                  "Temporal exclusion, frames");
  app->add_option("--nb", cli.cfg.retrieval.n_b, "Binary code bits");
  app->add_option("--pca-k", cli.cfg.retrieval.pca_k,
                  "Compressed descriptor dimension");
  app->add_option("--pca-training", cli.cfg.pca_training_path,
                  "Descriptor file to fit the PCA on (default: the dataset)");
  // Engine.
  app->add_option("--window", cli.cfg.engine.window, "Frames per window");
  app->add_option("--parents", cli.cfg.engine.parents_per_window,
                  "Parents ranked per iteration");
  app->add_option("--children", cli.cfg.engine.children_per_parent,
                  "Generation iterations per window");
  app->add_option("--cap", cli.cfg.engine.live_cap,
                  "Live hypotheses kept after pruning");
  app->add_option("--tp", cli.cfg.engine.t_p,
                  "Consistency threshold, metres");
  app->add_option("--history-cap", cli.cfg.engine.history_cap,
                  "Constraint history cap");
  // Optimizer.
  app->add_option("--w-xy", cli.cfg.engine.weights.w_xy,
                  "Odometry translation weight");
  app->add_option("--w-theta", cli.cfg.engine.weights.w_theta,
                  "Odometry rotation weight");
  app->add_option("--loop-weight", cli.cfg.engine.weights.loop,
                  "Loop edge weight");
  app->add_option("--max-iters", cli.cfg.engine.optimizer.max_iters,
                  "Optimizer iteration cap");
  app->add_option("--tol", cli.cfg.engine.optimizer.tol,
                  "Optimizer convergence tolerance");
  // Evaluation.
  app->add_option("--baseline-x", cli.cfg.baseline_x,
                  "Baseline constraint-sample sizes");
  app->add_option("--baseline-reps", cli.cfg.baseline_reps,
                  "Baseline replicates per X");
}

ilv::RunConfig final_config(const Cli& cli) {
  if (!cli.manifest_path.empty()) {
    return ilv::resolve(ilv::run_config_from_manifest_file(cli.manifest_path));
  }
  ilv::RunConfig cfg = cli.cfg;
  cfg.world.shape = ilv::path_shape_from_string(cli.shape);
  return ilv::resolve(cfg);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"incremental loop-closure verification"};
  app.require_subcommand(1);

  Cli cli;
  CLI::App* sim = app.add_subcommand("simulate", "Generate a dataset");
  sim->add_option("--out", cli.out_dir, "Output directory")->required();
  add_config_flags(sim, cli);

  CLI::App* verify = app.add_subcommand("verify", "Run the engine");
  verify->add_option("--dataset", cli.dataset_dir, "Dataset directory")
      ->required();
  verify->add_option("--out", cli.out_dir, "Results directory")->required();
  add_config_flags(verify, cli);

  CLI::App* evaluate = app.add_subcommand("evaluate", "PR sweep");
  evaluate->add_option("--results", cli.results_dirs, "Results directories")
      ->required();
  evaluate->add_option("--dataset", cli.dataset_dir, "Dataset directory")
      ->required();
  evaluate->add_option("--out", cli.out_dir, "Evaluation output directory")
      ->required();
  add_config_flags(evaluate, cli);

  CLI::App* run = app.add_subcommand("run", "simulate + verify + evaluate");
  run->add_option("--out", cli.out_dir, "Output directory")->required();
  add_config_flags(run, cli);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    std::cerr << "error: config: " << e.what() << '\n';
    return 2;
  }

  try {
    const ilv::RunConfig cfg = final_config(cli);
    if (sim->parsed()) {
      ilv::cmd_simulate(cfg, cli.out_dir);
    } else if (verify->parsed()) {
      ilv::cmd_verify(cfg, cli.dataset_dir, cli.out_dir);
    } else if (evaluate->parsed()) {
      ilv::cmd_evaluate(cfg, cli.results_dirs, cli.dataset_dir, cli.out_dir);
    } else if (run->parsed()) {
      ilv::cmd_run(cfg, cli.out_dir);
    }
  } catch (const ilv::ParseError& e) {
    std::cerr << "error: data: " << e.what() << '\n';
    return 1;
  } catch (const ilv::FileError& e) {
    std::cerr << "error: io: " << e.what() << '\n';
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: config: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: internal: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
