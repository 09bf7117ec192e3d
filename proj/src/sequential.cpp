#include "wrht/sequential.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "wrht/errors.hpp"
#include "wrht/rng.hpp"

namespace wrht {

namespace {
// Fixed stream tags so the different consumers of one user seed never share
// counter positions.
constexpr std::uint64_t kBootstrapStream = 0xB007;
constexpr std::uint64_t kSynthStream = 0x57E4;
}  // namespace

double upper_quantile(std::vector<double> values, double alpha) {
  if (values.empty()) throw std::invalid_argument("quantile of an empty sample");
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha must lie in (0, 1)");
  std::sort(values.begin(), values.end());
  const auto r = static_cast<double>(values.size());
  // Ceiling order statistic, "ties up"; the -1e-9 absorbs representation
  // error in (1-alpha)*R before the ceiling.
  auto index = static_cast<long>(std::ceil((1.0 - alpha) * r - 1e-9)) + 1;
  index = std::clamp(index, 1L, static_cast<long>(values.size()));
  return values[index - 1];
}

CalibrationResult calibrate_radius(const std::vector<Eigen::VectorXd>& pre_change_data,
                                   const PsiFamily& family, Norm norm,
                                   const CalibrationConfig& cfg, const SolverConfig& solver) {
  const int n = cfg.window_size;
  if (n < 1 || cfg.bootstrap_reps < 1)
    throw std::invalid_argument("calibration needs window_size >= 1 and bootstrap_reps >= 1");
  if (!(cfg.confidence > 0.0 && cfg.confidence < 1.0))
    throw std::invalid_argument("calibration confidence must lie in (0, 1)");
  if (!(cfg.divergence_tol >= 0.0))
    throw std::invalid_argument("divergence tolerance must be nonnegative");
  if (cfg.theta_grid.empty()) throw std::invalid_argument("radius grid must be nonempty");
  for (std::size_t g = 0; g < cfg.theta_grid.size(); ++g) {
    if (!(cfg.theta_grid[g] >= 0.0)) throw std::invalid_argument("radius grid must be nonnegative");
    if (g > 0 && !(cfg.theta_grid[g] > cfg.theta_grid[g - 1]))
      throw std::invalid_argument("radius grid must be strictly increasing");
  }
  const auto total = static_cast<std::uint64_t>(pre_change_data.size());
  if (static_cast<int>(total) < 2 * n)
    throw std::invalid_argument("calibration needs at least 2 * window_size pre-change samples");

  const CounterRng rng(cfg.seed, kBootstrapStream);
  const std::size_t grid_size = cfg.theta_grid.size();
  std::vector<std::vector<double>> divergences(grid_size);

  for (int b = 0; b < cfg.bootstrap_reps; ++b) {
    // Replicate b owns counters [b*2n, (b+1)*2n): its draws are independent
    // of every other replicate and of the grid sweep.
    std::vector<Eigen::VectorXd> pts1(n), pts2(n);
    const std::uint64_t base = static_cast<std::uint64_t>(b) * 2 * n;
    for (int j = 0; j < n; ++j) pts1[j] = pre_change_data[rng.pick_at(base + j, total)];
    for (int j = 0; j < n; ++j) pts2[j] = pre_change_data[rng.pick_at(base + n + j, total)];
    const auto q1 = EmpiricalDistribution::uniform(std::move(pts1));
    const auto q2 = EmpiricalDistribution::uniform(std::move(pts2));

    LfdProblem problem = make_problem(q1, q2, family, norm, 0.0, 0.0);
    LfdSolution previous;
    for (std::size_t g = 0; g < grid_size; ++g) {
      problem.theta1 = cfg.theta_grid[g];
      problem.theta2 = cfg.theta_grid[g];
      const LfdSolution sol =
          g == 0 ? solve(problem, solver)
                 : solve_warm(problem, solver, &previous.gamma1, &previous.gamma2);
      divergences[g].push_back(sol.divergence);
      previous = sol;
    }
  }

  CalibrationResult result;
  result.quantile_curve.resize(grid_size);
  for (std::size_t g = 0; g < grid_size; ++g)
    result.quantile_curve[g] = upper_quantile(divergences[g], 1.0 - cfg.confidence);

  result.saturated = true;
  result.theta = cfg.theta_grid.back();
  for (std::size_t g = 0; g < grid_size; ++g) {
    if (result.quantile_curve[g] <= cfg.divergence_tol) {
      result.theta = cfg.theta_grid[g];
      result.saturated = false;
      break;
    }
  }
  return result;
}

CusumResult cusum_run(const std::vector<double>& scores, double h) {
  if (std::isnan(h) || h < 0.0)
    throw std::invalid_argument("cusum threshold must be nonnegative");
  for (double s : scores)
    if (!std::isfinite(s)) throw std::invalid_argument("cusum scores must be finite");
  CusumResult result;
  result.trajectory.reserve(scores.size());
  double s = 0.0;
  for (std::size_t t = 0; t < scores.size(); ++t) {
    s = std::max(0.0, s + scores[t]);
    result.trajectory.push_back(s);
    if (!result.alarm_time && s >= h) result.alarm_time = static_cast<int>(t) + 1;
  }
  return result;
}

std::vector<double> robust_scores(const DetectorModel& model,
                                  const std::vector<Eigen::VectorXd>& stream) {
  std::vector<double> scores;
  scores.reserve(stream.size());
  for (const auto& x : stream) scores.push_back(-evaluate(model, x));
  return scores;
}

HotellingModel hotelling_fit(const std::vector<Eigen::VectorXd>& training, double ridge) {
  if (training.empty()) throw std::invalid_argument("baseline fit needs training samples");
  if (!(ridge >= 0.0)) throw std::invalid_argument("ridge must be nonnegative");
  const auto d = training[0].size();
  for (const auto& x : training)
    if (x.size() != d) throw std::invalid_argument("training samples must share one dimension");
  const auto nsz = static_cast<Eigen::Index>(training.size());
  if (nsz < d + 1)
    throw std::invalid_argument("baseline fit needs at least d + 1 training samples");

  Eigen::VectorXd mu = Eigen::VectorXd::Zero(d);
  for (const auto& x : training) mu += x;
  mu /= static_cast<double>(nsz);
  Eigen::MatrixXd sigma = Eigen::MatrixXd::Zero(d, d);
  for (const auto& x : training) {
    const Eigen::VectorXd c = x - mu;
    sigma += c * c.transpose();
  }
  sigma /= static_cast<double>(nsz - 1);
  sigma += ridge * Eigen::MatrixXd::Identity(d, d);

  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sigma);
  const Eigen::VectorXd vals = eig.eigenvalues();
  const double top = vals.maxCoeff();
  if (!(vals.minCoeff() > 1e-12 * std::max(top, 1e-300)))
    throw data_error("training covariance is numerically singular; pass a positive ridge");

  HotellingModel model;
  model.mu = std::move(mu);
  model.sigma_inv =
      eig.eigenvectors() * vals.cwiseInverse().asDiagonal() * eig.eigenvectors().transpose();
  model.ridge = ridge;
  return model;
}

double hotelling_auto_ridge(const std::vector<Eigen::VectorXd>& training) {
  if (training.empty()) throw std::invalid_argument("baseline fit needs training samples");
  const auto d = training[0].size();
  Eigen::VectorXd mu = Eigen::VectorXd::Zero(d);
  for (const auto& x : training) mu += x;
  mu /= static_cast<double>(training.size());
  double trace = 0.0;
  for (const auto& x : training) trace += (x - mu).squaredNorm();
  if (training.size() > 1) trace /= static_cast<double>(training.size() - 1);
  return 1e-8 * trace / static_cast<double>(d);
}

double hotelling_score(const HotellingModel& model, const Eigen::VectorXd& x) {
  if (x.size() != model.mu.size())
    throw std::invalid_argument("observation dimension does not match the baseline model");
  const Eigen::VectorXd c = x - model.mu;
  return std::max(0.0, c.dot(model.sigma_inv * c));
}

double threshold_by_type1(const std::function<std::vector<double>(int)>& score_generator,
                          double alpha, int reps) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha must lie in (0, 1)");
  if (reps < 1) throw std::invalid_argument("threshold calibration needs at least one run");
  std::vector<double> maxima(reps);
  for (int r = 0; r < reps; ++r) {
    const auto traj =
        cusum_run(score_generator(r), std::numeric_limits<double>::infinity()).trajectory;
    maxima[r] = traj.empty() ? 0.0 : *std::max_element(traj.begin(), traj.end());
  }
  return upper_quantile(std::move(maxima), alpha);
}

ChangeReport make_report(std::string method, double threshold, std::vector<double> per_step_stat,
                         std::optional<int> alarm_time, std::optional<int> truth_change_time) {
  ChangeReport report;
  report.method = std::move(method);
  report.threshold = threshold;
  report.per_step_stat = std::move(per_step_stat);
  report.alarm_time = alarm_time;
  report.truth_change_time = truth_change_time;
  if (alarm_time) {
    if (truth_change_time && *alarm_time >= *truth_change_time)
      report.delay = *alarm_time - *truth_change_time;
    else
      report.false_alarm = true;  // premature, or no change ever happens
  }
  return report;
}

RunSummary evaluate_runs(const std::vector<ChangeReport>& reports) {
  if (reports.empty()) throw std::invalid_argument("cannot summarize zero runs");
  RunSummary summary;
  int false_alarms = 0, detections = 0;
  double delay_sum = 0.0;
  int delay_count = 0;
  for (const auto& r : reports) {
    if (r.false_alarm) ++false_alarms;
    if (r.alarm_time && r.truth_change_time && *r.alarm_time >= *r.truth_change_time) {
      ++detections;
      if (r.delay) {
        delay_sum += *r.delay;
        ++delay_count;
      }
    }
  }
  const auto n = static_cast<double>(reports.size());
  summary.type1_rate = false_alarms / n;
  summary.detection_rate = detections / n;
  if (delay_count > 0) summary.avg_delay = delay_sum / delay_count;
  return summary;
}

std::vector<Eigen::VectorXd> synth_stream(const StreamSpec& spec) {
  if (spec.d < 1) throw std::invalid_argument("stream dimension must be positive");
  if (spec.length < 0 || spec.change_time < 0 || spec.change_time > spec.length)
    throw std::invalid_argument("stream change_time must lie in [0, length]");
  if (spec.pre_mean.size() != spec.d || spec.post_mean.size() != spec.d)
    throw std::invalid_argument("stream means must match the stream dimension");
  if (!(spec.cov_scale >= 0.0)) throw std::invalid_argument("noise scale must be nonnegative");

  const CounterRng rng(spec.seed, kSynthStream);
  std::vector<Eigen::VectorXd> out;
  out.reserve(spec.length);
  for (int i = 0; i < spec.length; ++i) {
    const Eigen::VectorXd& mean = i < spec.change_time ? spec.pre_mean : spec.post_mean;
    Eigen::VectorXd x(spec.d);
    for (int j = 0; j < spec.d; ++j)
      x[j] = mean[j] +
             spec.cov_scale * rng.gaussian_at(static_cast<std::uint64_t>(i) * spec.d + j);
    out.push_back(std::move(x));
  }
  return out;
}

}  // namespace wrht
