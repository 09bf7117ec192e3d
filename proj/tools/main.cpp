// wrht: robust hypothesis testing and change monitoring over Wasserstein
// balls around empirical samples.  Subcommands: solve, calibrate, detect,
// baseline, simulate.  All output is deterministic JSON keyed by --seed.
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "wrht/cli_io.hpp"
#include "wrht/errors.hpp"

namespace {

struct CommonArgs {
  wrht::RunConfig cfg;
  std::optional<std::string> out;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->set_config("--config", "", "Flat key=value file; command-line flags override");
  cmd->add_option("--family", args.cfg.family, "Loss family: exp|log|quad|hinge")
      ->capture_default_str();
  cmd->add_option("--norm", args.cfg.norm, "Ground metric: l1|l2|linf")->capture_default_str();
  cmd->add_option("--seed", args.cfg.seed, "RNG seed; outputs are a pure function of it")
      ->capture_default_str();
  cmd->add_option("--out", args.out, "Write the JSON report here instead of stdout");
  cmd->add_flag("--has-header", args.cfg.has_header, "Skip the first row of every CSV");
  cmd->add_option("--max-iters", args.cfg.solver_max_iters, "Solver iteration cap");
  cmd->add_option("--gap-tol", args.cfg.solver_gap_tol, "Solver duality-gap stop");
}

void add_radius(CLI::App* cmd, CommonArgs& args) {
  auto* t1 = cmd->add_option("--theta1", args.cfg.theta1, "Radius around the first sample")
                 ->capture_default_str();
  auto* t2 = cmd->add_option("--theta2", args.cfg.theta2, "Radius around the second sample")
                 ->capture_default_str();
  cmd->add_flag("--auto-theta", args.cfg.auto_theta,
                "Bootstrap-calibrate a shared radius from the first sample file")
      ->excludes(t1)
      ->excludes(t2);
}

void add_calibration(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--window", args.cfg.window, "Bootstrap sample size n")->capture_default_str();
  cmd->add_option("--bootstrap", args.cfg.bootstrap_reps, "Bootstrap replicates B")
      ->capture_default_str();
  cmd->add_option("--confidence", args.cfg.confidence, "Quantile level 1-beta")
      ->capture_default_str();
  cmd->add_option("--divergence-tol", args.cfg.divergence_tol,
                  "Divergence level the radius must push bootstrap noise under")
      ->capture_default_str();
  cmd->add_option("--theta-grid", args.cfg.theta_grid, "Ascending candidate radii");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Minimax robust testing with Wasserstein uncertainty sets"};
  app.require_subcommand(1);

  CommonArgs solve_args, calib_args, detect_args, base_args, sim_args;
  std::string q1_path, q2_path, pre_path, stream_path, train_path;
  std::optional<std::string> model_path, detect_q1, detect_q2;

  auto* solve = app.add_subcommand("solve", "Solve one least-favorable-pair instance");
  solve->add_option("q1", q1_path, "CSV of first-hypothesis samples")->required();
  solve->add_option("q2", q2_path, "CSV of second-hypothesis samples")->required();
  add_common(solve, solve_args);
  add_radius(solve, solve_args);
  add_calibration(solve, solve_args);
  solve->add_option("--save-model", solve_args.cfg.save_model,
                    "Also write the fitted detector to this path");

  auto* calibrate = app.add_subcommand("calibrate", "Bootstrap-select the uncertainty radius");
  calibrate->add_option("pre", pre_path, "CSV of pre-change samples")->required();
  add_common(calibrate, calib_args);
  add_calibration(calibrate, calib_args);

  auto* detect = app.add_subcommand("detect", "Run the robust CUSUM monitor over a stream");
  detect->add_option("stream", stream_path, "CSV of the monitored stream")->required();
  auto* model_opt =
      detect->add_option("--model", model_path, "Previously saved detector file");
  auto* dq1 = detect->add_option("--q1", detect_q1, "CSV of first-hypothesis samples");
  auto* dq2 = detect->add_option("--q2", detect_q2, "CSV of second-hypothesis samples");
  model_opt->excludes(dq1)->excludes(dq2);
  dq1->needs(dq2);
  dq2->needs(dq1);
  add_common(detect, detect_args);
  add_radius(detect, detect_args);
  add_calibration(detect, detect_args);
  detect->add_option("--threshold", detect_args.cfg.threshold, "Alarm threshold h")->required();
  detect->add_option("--change-time", detect_args.cfg.change_time,
                     "1-based index of the true first post-change sample, if known");

  auto* baseline = app.add_subcommand("baseline", "Run the T^2 control chart over a stream");
  baseline->add_option("train", train_path, "CSV of in-control training samples")->required();
  baseline->add_option("stream", stream_path, "CSV of the monitored stream")->required();
  add_common(baseline, base_args);
  baseline->add_option("--threshold", base_args.cfg.threshold, "Alarm threshold h")->required();
  baseline->add_option("--change-time", base_args.cfg.change_time,
                       "1-based index of the true first post-change sample, if known");
  baseline->add_option("--ridge", base_args.cfg.ridge,
                       "Covariance ridge (default: 1e-8 * trace/d)");

  auto* simulate =
      app.add_subcommand("simulate", "Seeded Monte Carlo comparison of both monitors");
  add_common(simulate, sim_args);
  add_radius(simulate, sim_args);
  add_calibration(simulate, sim_args);
  simulate->add_option("--alpha", sim_args.cfg.alphas, "Type-I levels to sweep");
  simulate->add_option("--dim", sim_args.cfg.sim_dim, "Stream dimension")->capture_default_str();
  simulate->add_option("--shift", sim_args.cfg.sim_shift, "Post-change mean shift (first axis)")
      ->capture_default_str();
  simulate->add_option("--cov-scale", sim_args.cfg.sim_cov_scale, "Noise standard deviation")
      ->capture_default_str();
  simulate->add_option("--pre-length", sim_args.cfg.sim_pre_length, "Pre-change steps per run")
      ->capture_default_str();
  simulate->add_option("--post-length", sim_args.cfg.sim_post_length, "Post-change steps per run")
      ->capture_default_str();
  simulate->add_option("--runs", sim_args.cfg.sim_runs, "Monitored Monte Carlo runs")
      ->capture_default_str();
  simulate->add_option("--threshold-reps", sim_args.cfg.sim_threshold_reps,
                       "Pre-change runs used to calibrate thresholds")
      ->capture_default_str();
  simulate->add_option("--ridge", sim_args.cfg.ridge,
                       "Covariance ridge (default: 1e-8 * trace/d)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*solve) {
      wrht::write_report(wrht::cmd_solve(q1_path, q2_path, solve_args.cfg), solve_args.out);
    } else if (*calibrate) {
      wrht::write_report(wrht::cmd_calibrate(pre_path, calib_args.cfg), calib_args.out);
    } else if (*detect) {
      wrht::write_report(
          wrht::cmd_detect(model_path, detect_q1, detect_q2, stream_path, detect_args.cfg),
          detect_args.out);
    } else if (*baseline) {
      wrht::write_report(wrht::cmd_baseline(train_path, stream_path, base_args.cfg),
                         base_args.out);
    } else if (*simulate) {
      wrht::write_report(wrht::cmd_simulate(sim_args.cfg), sim_args.out);
    }
  } catch (const wrht::io_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
