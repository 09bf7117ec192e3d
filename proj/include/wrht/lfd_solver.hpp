#pragma once

#include <cstdint>

#include "wrht/distributions.hpp"
#include "wrht/psi_divergence.hpp"

namespace wrht {

/// @brief A transport plan for one sample: row l spreads the 1/n_k mass of
/// atom l of sample k over the support pool.  (The other sample's rows are
/// identically zero and therefore not stored.)
struct TransportPlan {
  int k = 1;                  // side tag: whose atoms the rows redistribute
  Eigen::MatrixXd rows;       // n_k x pool_size, entries >= 0, row sums 1/n_k
  double budget_used = 0.0;   // transport spend sum_{l,m} rows(l,m) * c(source(l), m)
};

/// @brief One instance of the finite concave program: maximize
/// sum_m h(p1[m], p2[m]) over transport plans whose spends stay within the
/// radii (theta1, theta2), where p_k are the plans' column masses.
struct LfdProblem {
  SupportPool pool;
  CostMatrix costs;
  PsiFamily family;
  double theta1 = 0.0;
  double theta2 = 0.0;
};

/// Assembles pool, cost matrix and radii from two uniform empirical samples.
/// Throws std::invalid_argument on dimension mismatch, non-uniform weights,
/// or negative radius.
LfdProblem make_problem(const EmpiricalDistribution& q1, const EmpiricalDistribution& q2,
                        const PsiFamily& family, Norm norm, double theta1, double theta2);

struct SolverConfig {
  int max_iters = 2000;
  double gap_tol = 1e-7;
  /// Reserved for reproducibility bookkeeping; the solver itself is fully
  /// deterministic and draws no randomness.
  std::uint64_t seed = 0;
};

/// @brief Solver output: the two least favorable transport plans, their
/// column masses (the least favorable distributions on the pool), the exact
/// objective, the induced divergence 1 - objective/2, and a duality-gap
/// certificate for the (smoothed) surrogate at the returned plans.
struct LfdSolution {
  SupportPool pool;
  TransportPlan gamma1, gamma2;
  Eigen::VectorXd p1, p2;
  double objective = 0.0;
  double divergence = 0.0;
  double fw_gap = 0.0;
  int iterations = 0;
};

/// Identity plan: every atom keeps its mass at its own pool index.
TransportPlan diagonal_plan(const LfdProblem& problem, int side);

/// Column masses p[m] = sum_l rows(l, m).
Eigen::VectorXd column_masses(const TransportPlan& plan, int pool_size);

/// Recomputes the transport spend of `plan` from scratch.
double plan_cost(const LfdProblem& problem, const TransportPlan& plan);

/// Throws std::invalid_argument if `plan` violates shape, nonnegativity
/// (>= -1e-12), row sums (within 1e-10 of 1/n_k), or budget
/// (<= theta_k + 1e-9).
void check_plan_feasible(const LfdProblem& problem, const TransportPlan& plan);

struct ObjectiveGradient {
  double objective = 0.0;  // exact pointwise objective, summed over the pool
  double smoothed = 0.0;   // smoothed surrogate the solver climbs
  Eigen::VectorXd p1, p2;
  Eigen::VectorXd grad1, grad2;  // d smoothed / d p_k[m], masses clamped to >= 1e-12
};

/// Evaluates objective and (clamped) gradient at a feasible plan pair.
ObjectiveGradient objective_and_gradient(const LfdProblem& problem, const TransportPlan& plan1,
                                         const TransportPlan& plan2);

/// @brief Exact linear-maximization oracle: maximizes <g, column_masses(s)>
/// over plans s for side k with transport spend <= theta.
///
/// The budget is dualized: at price lambda every row puts its mass on
/// argmax_m (g[m] - lambda * c[m]) (cheapest column among score ties, then
/// lowest index); a bisection on lambda over [0, (max g - min g)/min positive
/// cost] finds the breakpoint where that assignment first fits the budget,
/// and the leftover budget is spent by sliding tied rows toward their most
/// expensive tied column, so at most one row ends up fractional.
/// Deterministic throughout.
TransportPlan lmo(const SupportPool& pool, const CostMatrix& costs, int side,
                  const Eigen::VectorXd& gradient, double theta);

/// Frank-Wolfe with the exact oracle and golden-section line-search
/// refinement of the 2/(t+2) step, started from the identity plans.  A
/// finishing pass pools each group of zero-cost duplicate columns onto its
/// first index: the move is free and, by superadditivity of the concave
/// 1-homogeneous pointwise objective, never worse — it supplies the pairwise
/// rebalancing that vertex steps cannot express (and makes the zero-radius
/// objective exactly the duplicate-grouped empirical sum).
LfdSolution solve(const LfdProblem& problem, const SolverConfig& config = {});

/// Same, but started from the given feasible plans.  Warm-starting an
/// ascending-radius sweep this way also makes the reported objective monotone
/// in the radius by construction.
LfdSolution solve_warm(const LfdProblem& problem, const SolverConfig& config,
                       const TransportPlan* init1, const TransportPlan* init2);

/// @brief Independent oracle: nested grid refinement over the full plan
/// polytope (row simplices filtered by the budget constraints).  Only for
/// tiny instances (n1 + n2 <= 3, i.e. at most 6 free parameters); throws
/// std::invalid_argument beyond that.  fw_gap of the result is NaN (no
/// certificate), iterations reports the number of refinement levels.
///
/// Ten levels shrink the spacing to ~5e-7 of a row's mass; since the best
/// grid point can sit a full spacing inside the active budget face, where the
/// objective still climbs at O(1) rate, that spacing is what bounds the
/// error, and it keeps the oracle comfortably inside the 1e-3 tolerance all
/// its consumers use.
LfdSolution brute_force(const LfdProblem& problem, int grid_depth = 10, int points_per_dim = 9);

}  // namespace wrht
