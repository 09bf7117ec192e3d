#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "wrht/detector.hpp"
#include "wrht/distributions.hpp"
#include "wrht/lfd_solver.hpp"

namespace wrht {

/// @brief Free parameters of the bootstrap radius-selection procedure: the
/// radius is the smallest grid value at which the divergence between two
/// size-n bootstrap resamples of pre-change data is, with the given
/// confidence, within divergence_tol of zero.
struct CalibrationConfig {
  int window_size = 20;                // n: atoms per bootstrap sample
  int bootstrap_reps = 50;             // B
  double confidence = 0.9;             // 1 - beta
  double divergence_tol = 0.05;        // delta
  std::vector<double> theta_grid;      // increasing, nonnegative
  std::uint64_t seed = 0;
};

struct CalibrationResult {
  double theta = 0.0;
  bool saturated = false;              // no grid value met the tolerance; theta is the grid max
  std::vector<double> quantile_curve;  // per-grid upper quantile of bootstrap divergences
};

/// Runs the bootstrap sweep.  Replicate draws come from a counter-based
/// generator keyed by (seed, replicate), so neither the grid order nor B
/// perturbs individual draws; per replicate, ascending radii are solved with
/// warm starts, which makes each replicate's divergence (and hence the
/// quantile curve) nonincreasing in the radius.  Throws std::invalid_argument
/// on insufficient data (< 2n samples) or a malformed config.
CalibrationResult calibrate_radius(const std::vector<Eigen::VectorXd>& pre_change_data,
                                   const PsiFamily& family, Norm norm,
                                   const CalibrationConfig& cfg,
                                   const SolverConfig& solver = {.max_iters = 400,
                                                                 .gap_tol = 1e-5});

/// Upper empirical quantile with the ceiling ("ties up") convention: the
/// ascending order statistic at index ceil((1-alpha)*R) + 1, clamped to R.
/// A fresh draw exceeds the returned value with probability close to alpha.
double upper_quantile(std::vector<double> values, double alpha);

struct CusumResult {
  std::optional<int> alarm_time;   // 1-based; absent if the statistic never reaches h
  std::vector<double> trajectory;  // S_t for every step, alarm or not
};

/// One-sided CUSUM recursion S_t = max(0, S_{t-1} + scores[t]), S_0 = 0,
/// alarming at the first t with S_t >= h.  Throws std::invalid_argument on
/// non-finite scores or h < 0 (h = +infinity is allowed to disable alarms).
CusumResult cusum_run(const std::vector<double>& scores, double h);

/// Per-observation scores feeding the CUSUM: score_t = -evaluate(model, x_t),
/// so the statistic drifts upward once observations favor the second
/// (post-change) hypothesis.
std::vector<double> robust_scores(const DetectorModel& model,
                                  const std::vector<Eigen::VectorXd>& stream);

struct HotellingModel {
  Eigen::VectorXd mu;
  Eigen::MatrixXd sigma_inv;  // symmetric positive definite
  double ridge = 0.0;
};

/// Fits mean and ridged sample covariance (N-1 normalization) and inverts it
/// through an eigendecomposition.  Needs at least d+1 samples.  A covariance
/// that stays singular after the ridge raises data_error suggesting a larger
/// ridge.
HotellingModel hotelling_fit(const std::vector<Eigen::VectorXd>& training, double ridge);

/// The default ridge used by the command-line tools: 1e-8 * trace(S)/d.
double hotelling_auto_ridge(const std::vector<Eigen::VectorXd>& training);

/// T^2 statistic (x - mu)' Sigma^{-1} (x - mu); nonnegative.
double hotelling_score(const HotellingModel& model, const Eigen::VectorXd& x);

/// Threshold with empirical type-I control: the upper alpha-quantile of
/// max_t S_t over `reps` simulated pre-change score sequences.
/// score_generator(r) must deterministically produce run r's scores.
double threshold_by_type1(const std::function<std::vector<double>(int)>& score_generator,
                          double alpha, int reps);

/// @brief Outcome of monitoring one stream with one method.
struct ChangeReport {
  std::string method;  // "robust-cusum" or "hotelling"
  std::optional<int> alarm_time;
  double threshold = 0.0;
  std::vector<double> per_step_stat;
  std::optional<int> truth_change_time;  // 1-based index of the first post-change sample
  std::optional<int> delay;              // alarm - truth when the alarm is not premature
  bool false_alarm = false;              // alarm strictly before the change (or with no change)
};

/// Assembles a ChangeReport with the delay/false-alarm invariants enforced.
ChangeReport make_report(std::string method, double threshold, std::vector<double> per_step_stat,
                         std::optional<int> alarm_time, std::optional<int> truth_change_time);

struct RunSummary {
  std::optional<double> avg_delay;  // over detected (non-premature) runs; absent if none
  double type1_rate = 0.0;
  double detection_rate = 0.0;      // fraction alarming at or after the change
};

/// Aggregates reports; throws std::invalid_argument on empty input.
RunSummary evaluate_runs(const std::vector<ChangeReport>& reports);

/// @brief Synthetic Gaussian stream: isotropic noise around pre_mean for the
/// first change_time samples, then around post_mean.
struct StreamSpec {
  int d = 1;
  Eigen::VectorXd pre_mean;
  Eigen::VectorXd post_mean;
  double cov_scale = 1.0;  // noise standard deviation
  int change_time = 0;     // number of leading pre-change samples (== length: no change)
  int length = 0;
  std::uint64_t seed = 0;
};

/// Deterministic per seed; sample i is a pure function of (seed, i).
std::vector<Eigen::VectorXd> synth_stream(const StreamSpec& spec);

}  // namespace wrht
