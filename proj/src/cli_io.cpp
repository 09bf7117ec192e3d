#include "wrht/cli_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "wrht/errors.hpp"
#include "wrht/rng.hpp"

namespace wrht {

namespace {

nlohmann::ordered_json to_json_array(const Eigen::VectorXd& v) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

nlohmann::ordered_json to_json_array(const std::vector<double>& v) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (double x : v) arr.push_back(x);
  return arr;
}

nlohmann::ordered_json to_json_points(const std::vector<Eigen::VectorXd>& pts) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& p : pts) arr.push_back(to_json_array(p));
  return arr;
}

SolverConfig solver_for_solve(const RunConfig& cfg) {
  SolverConfig sc;
  sc.max_iters = cfg.solver_max_iters.value_or(2000);
  sc.gap_tol = cfg.solver_gap_tol.value_or(1e-7);
  sc.seed = cfg.seed;
  return sc;
}

SolverConfig solver_for_calibration(const RunConfig& cfg) {
  SolverConfig sc;
  sc.max_iters = cfg.solver_max_iters.value_or(400);
  sc.gap_tol = cfg.solver_gap_tol.value_or(1e-5);
  sc.seed = cfg.seed;
  return sc;
}

CalibrationConfig calibration_config(const RunConfig& cfg) {
  CalibrationConfig cc;
  cc.window_size = cfg.window;
  cc.bootstrap_reps = cfg.bootstrap_reps;
  cc.confidence = cfg.confidence;
  cc.divergence_tol = cfg.divergence_tol;
  cc.theta_grid = cfg.theta_grid.empty() ? default_theta_grid() : cfg.theta_grid;
  cc.seed = cfg.seed;
  return cc;
}

nlohmann::ordered_json calibration_to_json(const CalibrationResult& result,
                                           const std::vector<double>& grid) {
  nlohmann::ordered_json out;
  out["theta"] = result.theta;
  out["saturated"] = result.saturated;
  out["theta_grid"] = to_json_array(grid);
  out["quantile_curve"] = to_json_array(result.quantile_curve);
  return out;
}

nlohmann::ordered_json report_to_json(const ChangeReport& report) {
  nlohmann::ordered_json out;
  out["method"] = report.method;
  out["alarm_time"] =
      report.alarm_time ? nlohmann::ordered_json(*report.alarm_time) : nlohmann::ordered_json();
  out["threshold"] = report.threshold;
  out["truth_change_time"] = report.truth_change_time
                                 ? nlohmann::ordered_json(*report.truth_change_time)
                                 : nlohmann::ordered_json();
  out["delay"] = report.delay ? nlohmann::ordered_json(*report.delay) : nlohmann::ordered_json();
  out["false_alarm"] = report.false_alarm;
  out["per_step_stat"] = to_json_array(report.per_step_stat);
  return out;
}

/// A detector plus the solve it came from, for reporting.
struct BuiltModel {
  DetectorModel model;
  LfdSolution solution;
  double theta1 = 0.0;
  double theta2 = 0.0;
  std::optional<nlohmann::ordered_json> calibration;
};

BuiltModel model_from_samples(const std::string& q1_csv, const std::string& q2_csv,
                              const RunConfig& cfg) {
  const auto family = family_from_string(cfg.family);
  const auto norm = norm_from_string(cfg.norm);
  const auto pts1 = parse_samples_csv(q1_csv, cfg.has_header);
  const auto pts2 = parse_samples_csv(q2_csv, cfg.has_header);

  BuiltModel built;
  if (cfg.auto_theta) {
    const auto cc = calibration_config(cfg);
    const auto calib = calibrate_radius(pts1, family, norm, cc, solver_for_calibration(cfg));
    built.theta1 = built.theta2 = calib.theta;
    built.calibration = calibration_to_json(calib, cc.theta_grid);
  } else {
    built.theta1 = cfg.theta1;
    built.theta2 = cfg.theta2;
  }

  const auto q1 = EmpiricalDistribution::uniform(pts1);
  const auto q2 = EmpiricalDistribution::uniform(pts2);
  const auto problem = make_problem(q1, q2, family, norm, built.theta1, built.theta2);
  built.solution = solve(problem, solver_for_solve(cfg));
  built.model = build(built.solution, family, norm);
  return built;
}

/// Derives a child seed so distinct harness roles never share RNG streams.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t role) {
  return CounterRng(master, role).u64_at(0);
}

}  // namespace

std::vector<double> default_theta_grid() {
  return {0.0, 0.01, 0.02, 0.05, 0.1, 0.2, 0.35, 0.5};
}

std::vector<Eigen::VectorXd> parse_samples_csv(const std::string& path, bool has_header) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open '" + path + "'");
  std::vector<Eigen::VectorXd> samples;
  std::string line;
  int row = 0;
  Eigen::Index width = -1;
  bool skipped_header = false;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (has_header && !skipped_header) {
      skipped_header = true;
      continue;
    }
    if (line.empty()) continue;
    std::vector<double> cells;
    std::size_t start = 0;
    int col = 0;
    while (start <= line.size()) {
      ++col;
      std::size_t end = line.find(',', start);
      if (end == std::string::npos) end = line.size();
      std::size_t a = start, b = end;
      while (a < b && (line[a] == ' ' || line[a] == '\t')) ++a;
      while (b > a && (line[b - 1] == ' ' || line[b - 1] == '\t')) --b;
      double value = 0.0;
      const auto [ptr, ec] = std::from_chars(line.data() + a, line.data() + b, value);
      if (ec != std::errc() || ptr != line.data() + b)
        throw io_error("'" + path + "': non-numeric cell at row " + std::to_string(row) +
                       ", column " + std::to_string(col));
      cells.push_back(value);
      start = end + 1;
      if (end == line.size()) break;
    }
    if (width < 0) width = static_cast<Eigen::Index>(cells.size());
    if (static_cast<Eigen::Index>(cells.size()) != width)
      throw io_error("'" + path + "': row " + std::to_string(row) + " has " +
                     std::to_string(cells.size()) + " columns, expected " + std::to_string(width));
    samples.push_back(Eigen::Map<const Eigen::VectorXd>(cells.data(), width));
  }
  if (samples.empty()) throw io_error("'" + path + "': no samples");
  return samples;
}

nlohmann::ordered_json cmd_solve(const std::string& q1_csv, const std::string& q2_csv,
                                 const RunConfig& config) {
  const auto built = model_from_samples(q1_csv, q2_csv, config);
  if (config.save_model) save_detector(built.model, *config.save_model);
  nlohmann::ordered_json out;
  out["objective"] = built.solution.objective;
  out["divergence"] = built.solution.divergence;
  out["fw_gap"] = built.solution.fw_gap;
  out["iterations"] = built.solution.iterations;
  out["theta"] = nlohmann::ordered_json::array({built.theta1, built.theta2});
  out["family"] = config.family;
  out["p1"] = to_json_array(built.solution.p1);
  out["p2"] = to_json_array(built.solution.p2);
  out["support"] = to_json_points(built.solution.pool.points);
  out["phi"] = to_json_array(built.model.phi);
  if (built.calibration) out["calibration"] = *built.calibration;
  out["seed"] = config.seed;
  return out;
}

nlohmann::ordered_json cmd_calibrate(const std::string& pre_csv, const RunConfig& config) {
  const auto family = family_from_string(config.family);
  const auto norm = norm_from_string(config.norm);
  const auto data = parse_samples_csv(pre_csv, config.has_header);
  const auto cc = calibration_config(config);
  const auto result = calibrate_radius(data, family, norm, cc, solver_for_calibration(config));
  nlohmann::ordered_json out = calibration_to_json(result, cc.theta_grid);
  out["seed"] = config.seed;
  return out;
}

nlohmann::ordered_json cmd_detect(const std::optional<std::string>& model_path,
                                  const std::optional<std::string>& q1_csv,
                                  const std::optional<std::string>& q2_csv,
                                  const std::string& stream_csv, const RunConfig& config) {
  if (!config.threshold) throw std::invalid_argument("detect needs --threshold");
  nlohmann::ordered_json out;
  DetectorModel model;
  std::optional<nlohmann::ordered_json> calibration;
  if (model_path) {
    model = load_detector(*model_path);
  } else if (q1_csv && q2_csv) {
    auto built = model_from_samples(*q1_csv, *q2_csv, config);
    model = std::move(built.model);
    calibration = std::move(built.calibration);
    out["theta"] = nlohmann::ordered_json::array({built.theta1, built.theta2});
  } else {
    throw std::invalid_argument("detect needs either --model or both --q1 and --q2");
  }

  const auto stream = parse_samples_csv(stream_csv, config.has_header);
  const auto scores = robust_scores(model, stream);
  const auto run = cusum_run(scores, *config.threshold);
  const auto report = make_report("robust-cusum", *config.threshold, run.trajectory,
                                  run.alarm_time, config.change_time);
  const auto report_json = report_to_json(report);
  for (const auto& [key, value] : report_json.items()) out[key] = value;
  if (calibration) out["calibration"] = *calibration;
  return out;
}

nlohmann::ordered_json cmd_baseline(const std::string& train_csv, const std::string& stream_csv,
                                    const RunConfig& config) {
  if (!config.threshold) throw std::invalid_argument("baseline needs --threshold");
  const auto train = parse_samples_csv(train_csv, config.has_header);
  const auto stream = parse_samples_csv(stream_csv, config.has_header);
  const double ridge = config.ridge ? *config.ridge : hotelling_auto_ridge(train);
  const auto model = hotelling_fit(train, ridge);

  std::vector<double> stats;
  stats.reserve(stream.size());
  std::optional<int> alarm;
  for (std::size_t t = 0; t < stream.size(); ++t) {
    stats.push_back(hotelling_score(model, stream[t]));
    if (!alarm && stats.back() >= *config.threshold) alarm = static_cast<int>(t) + 1;
  }
  const auto report =
      make_report("hotelling", *config.threshold, stats, alarm, config.change_time);
  nlohmann::ordered_json out = report_to_json(report);
  out["ridge"] = ridge;
  return out;
}

nlohmann::ordered_json cmd_simulate(const RunConfig& config) {
  const auto family = family_from_string(config.family);
  const auto norm = norm_from_string(config.norm);
  const int d = config.sim_dim;
  if (d < 1) throw std::invalid_argument("simulate needs a positive dimension");
  if (config.sim_runs < 1 || config.sim_threshold_reps < 1)
    throw std::invalid_argument("simulate needs at least one run and one threshold rep");
  const int horizon = config.sim_pre_length + config.sim_post_length;
  if (config.sim_pre_length < config.window)
    throw std::invalid_argument("pre-change length must cover at least one window");
  const std::vector<double> alphas = config.alphas.empty()
                                         ? std::vector<double>{0.01, 0.05, 0.1}
                                         : config.alphas;

  const Eigen::VectorXd pre_mean = Eigen::VectorXd::Zero(d);
  Eigen::VectorXd post_mean = Eigen::VectorXd::Zero(d);
  post_mean[0] = config.sim_shift;

  StreamSpec spec;
  spec.d = d;
  spec.pre_mean = pre_mean;
  spec.post_mean = post_mean;
  spec.cov_scale = config.sim_cov_scale;

  // Training data: a pre-change stretch and a reference post-change window.
  spec.change_time = config.sim_pre_length;
  spec.length = config.sim_pre_length;
  spec.seed = derive_seed(config.seed, 1);
  const auto train_pre = synth_stream(spec);

  spec.change_time = 0;
  spec.length = config.window;
  spec.seed = derive_seed(config.seed, 2);
  const auto reference_post = synth_stream(spec);

  // Radius: bootstrap-calibrated on the pre-change training data by default.
  double theta1 = config.theta1, theta2 = config.theta2;
  std::optional<nlohmann::ordered_json> calibration;
  if (config.auto_theta) {
    RunConfig calib_cfg = config;
    calib_cfg.seed = derive_seed(config.seed, 3);
    const auto cc = calibration_config(calib_cfg);
    const auto calib =
        calibrate_radius(train_pre, family, norm, cc, solver_for_calibration(calib_cfg));
    theta1 = theta2 = calib.theta;
    calibration = calibration_to_json(calib, cc.theta_grid);
  }

  // Detector: first window of pre-change training vs the reference window.
  std::vector<Eigen::VectorXd> window1(train_pre.begin(), train_pre.begin() + config.window);
  const auto q1 = EmpiricalDistribution::uniform(std::move(window1));
  const auto q2 = EmpiricalDistribution::uniform(reference_post);
  const auto problem = make_problem(q1, q2, family, norm, theta1, theta2);
  const auto solution = solve(problem, solver_for_solve(config));
  const auto model = build(solution, family, norm);

  const auto hotelling = hotelling_fit(
      train_pre, config.ridge ? *config.ridge : hotelling_auto_ridge(train_pre));

  // Threshold calibration: all-pre-change streams over the full horizon.
  std::vector<double> robust_maxima(config.sim_threshold_reps);
  std::vector<double> hotelling_maxima(config.sim_threshold_reps);
  for (int r = 0; r < config.sim_threshold_reps; ++r) {
    spec.change_time = horizon;
    spec.length = horizon;
    spec.seed = derive_seed(config.seed, 1000 + static_cast<std::uint64_t>(r));
    const auto stream = synth_stream(spec);
    const auto traj =
        cusum_run(robust_scores(model, stream), std::numeric_limits<double>::infinity())
            .trajectory;
    robust_maxima[r] = traj.empty() ? 0.0 : *std::max_element(traj.begin(), traj.end());
    double hmax = 0.0;
    for (const auto& x : stream) hmax = std::max(hmax, hotelling_score(hotelling, x));
    hotelling_maxima[r] = hmax;
  }

  // Evaluation streams are shared across alphas; only thresholds differ.
  const int truth = config.sim_pre_length + 1;
  std::vector<std::vector<double>> robust_traj(config.sim_runs);
  std::vector<std::vector<double>> hotelling_stats(config.sim_runs);
  for (int i = 0; i < config.sim_runs; ++i) {
    spec.change_time = config.sim_pre_length;
    spec.length = horizon;
    spec.seed = derive_seed(config.seed, 2000 + static_cast<std::uint64_t>(i));
    const auto stream = synth_stream(spec);
    robust_traj[i] =
        cusum_run(robust_scores(model, stream), std::numeric_limits<double>::infinity())
            .trajectory;
    auto& stats = hotelling_stats[i];
    stats.reserve(stream.size());
    for (const auto& x : stream) stats.push_back(hotelling_score(hotelling, x));
  }

  auto first_crossing = [](const std::vector<double>& stats, double h) -> std::optional<int> {
    for (std::size_t t = 0; t < stats.size(); ++t)
      if (stats[t] >= h) return static_cast<int>(t) + 1;
    return std::nullopt;
  };

  auto summarize = [&](const std::vector<std::vector<double>>& stats, double h,
                       const std::string& method) {
    std::vector<ChangeReport> reports;
    nlohmann::ordered_json delays = nlohmann::ordered_json::array();
    reports.reserve(stats.size());
    for (const auto& s : stats) {
      auto report = make_report(method, h, {}, first_crossing(s, h), truth);
      delays.push_back(report.delay ? nlohmann::ordered_json(*report.delay)
                                    : nlohmann::ordered_json());
      reports.push_back(std::move(report));
    }
    const auto summary = evaluate_runs(reports);
    nlohmann::ordered_json entry;
    entry["alpha"] = 0.0;  // caller overwrites
    entry["threshold"] = h;
    entry["type1_rate"] = summary.type1_rate;
    entry["detection_rate"] = summary.detection_rate;
    entry["avg_delay"] = summary.avg_delay ? nlohmann::ordered_json(*summary.avg_delay)
                                           : nlohmann::ordered_json();
    entry["delays"] = delays;
    return entry;
  };

  nlohmann::ordered_json robust_entries = nlohmann::ordered_json::array();
  nlohmann::ordered_json hotelling_entries = nlohmann::ordered_json::array();
  for (const double alpha : alphas) {
    const double h_rob = upper_quantile(robust_maxima, alpha);
    const double h_hot = upper_quantile(hotelling_maxima, alpha);
    auto rob = summarize(robust_traj, h_rob, "robust-cusum");
    rob["alpha"] = alpha;
    robust_entries.push_back(std::move(rob));
    auto hot = summarize(hotelling_stats, h_hot, "hotelling");
    hot["alpha"] = alpha;
    hotelling_entries.push_back(std::move(hot));
  }

  nlohmann::ordered_json out;
  out["seed"] = config.seed;
  nlohmann::ordered_json scenario;
  scenario["d"] = d;
  scenario["shift"] = config.sim_shift;
  scenario["cov_scale"] = config.sim_cov_scale;
  scenario["pre_length"] = config.sim_pre_length;
  scenario["post_length"] = config.sim_post_length;
  scenario["window"] = config.window;
  scenario["runs"] = config.sim_runs;
  scenario["threshold_reps"] = config.sim_threshold_reps;
  scenario["family"] = config.family;
  scenario["norm"] = config.norm;
  out["scenario"] = scenario;
  out["theta"] = nlohmann::ordered_json::array({theta1, theta2});
  if (calibration) out["calibration"] = *calibration;
  out["solution"] = {{"objective", solution.objective},
                     {"divergence", solution.divergence},
                     {"fw_gap", solution.fw_gap},
                     {"iterations", solution.iterations}};
  out["alphas"] = to_json_array(alphas);
  nlohmann::ordered_json methods;
  methods["robust-cusum"] = robust_entries;
  methods["hotelling"] = hotelling_entries;
  out["methods"] = methods;
  return out;
}

void write_report(const nlohmann::ordered_json& report,
                  const std::optional<std::string>& out_path) {
  if (out_path) {
    json_write_file(*out_path, report);
  } else {
    std::cout << json_to_string(report) << '\n';
  }
}

}  // namespace wrht
