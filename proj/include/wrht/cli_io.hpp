#pragma once

#include <optional>
#include <string>
#include <vector>

#include "wrht/json_io.hpp"
#include "wrht/sequential.hpp"

namespace wrht {

/// Reads one sample per row, d = column count; locale-independent decimal
/// parsing.  Throws io_error naming the offending row/column on ragged rows
/// or non-numeric cells, and "no samples" on an empty file.
std::vector<Eigen::VectorXd> parse_samples_csv(const std::string& path, bool has_header);

/// @brief Everything a command can be told.  One struct serves all commands;
/// each consumes the fields it understands.  Optionals fall back to
/// context-appropriate defaults (e.g. the solver runs tighter inside `solve`
/// than inside bootstrap calibration).
struct RunConfig {
  std::string family = "log";
  std::string norm = "l2";
  double theta1 = 0.0;
  double theta2 = 0.0;
  bool auto_theta = false;

  std::optional<int> solver_max_iters;
  std::optional<double> solver_gap_tol;

  // bootstrap radius calibration
  int window = 20;
  int bootstrap_reps = 50;
  double confidence = 0.9;
  double divergence_tol = 0.05;
  std::vector<double> theta_grid;  // empty: default grid

  // monitoring
  std::optional<double> threshold;
  std::optional<int> change_time;  // 1-based index of the first post-change sample
  std::optional<double> ridge;     // absent: automatic

  // synthetic scenario
  int sim_dim = 2;
  double sim_shift = 2.0;
  double sim_cov_scale = 1.0;
  int sim_pre_length = 200;
  int sim_post_length = 200;
  int sim_runs = 100;
  int sim_threshold_reps = 200;
  std::vector<double> alphas;  // empty: {0.01, 0.05, 0.1}

  bool has_header = false;
  std::optional<std::string> save_model;  // solve: also write the detector here
  std::uint64_t seed = 0;
};

/// The grid the calibration sweep uses when none is configured.
std::vector<double> default_theta_grid();

/// Solve one instance from two CSV samples; returns the solution report
/// ("objective", "divergence", "fw_gap", "iterations", "theta", "family",
/// "p1", "p2", "support", "phi").
nlohmann::ordered_json cmd_solve(const std::string& q1_csv, const std::string& q2_csv,
                                 const RunConfig& config);

/// Bootstrap radius calibration from pre-change samples; returns "theta",
/// "saturated", "theta_grid", "quantile_curve", "seed".
nlohmann::ordered_json cmd_calibrate(const std::string& pre_csv, const RunConfig& config);

/// Monitor a stream with the robust-detector CUSUM.  The detector comes
/// either from a saved model file or from two sample CSVs (solved on the
/// spot).  Returns the monitoring report (method, alarm_time, threshold,
/// truth_change_time, delay, false_alarm, per_step_stat).
nlohmann::ordered_json cmd_detect(const std::optional<std::string>& model_path,
                                  const std::optional<std::string>& q1_csv,
                                  const std::optional<std::string>& q2_csv,
                                  const std::string& stream_csv, const RunConfig& config);

/// Monitor a stream with the T^2 control chart fitted on training samples.
nlohmann::ordered_json cmd_baseline(const std::string& train_csv, const std::string& stream_csv,
                                    const RunConfig& config);

/// End-to-end synthetic experiment: generate streams, calibrate radius and
/// thresholds, monitor with both methods over seeded Monte Carlo runs, and
/// summarize ("type1_rate", "detection_rate", "avg_delay", "delays" per
/// method and alpha).
nlohmann::ordered_json cmd_simulate(const RunConfig& config);

/// Serialize + newline; shared by the CLI and the tests.
void write_report(const nlohmann::ordered_json& report, const std::optional<std::string>& out_path);

}  // namespace wrht
