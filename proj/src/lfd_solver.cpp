#include "wrht/lfd_solver.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace wrht {

namespace {

constexpr double kMassFloor = 1e-12;  // gradient argument clamp
constexpr double kRowSumTol = 1e-10;
constexpr double kBudgetTol = 1e-9;

int side_count(const SupportPool& pool, int side) {
  if (side != 1 && side != 2) throw std::invalid_argument("plan side must be 1 or 2");
  return side == 1 ? pool.n1 : pool.n2;
}

/// Per-row outcome of the priced assignment at a fixed budget price.
struct PricedAssignment {
  std::vector<int> lo;   // cheapest score-optimal column per row
  std::vector<int> hi;   // most expensive score-tied column per row
  double lo_cost = 0.0;  // total spend when every row sits on its lo column
};

/// tie_rel > 0 widens the score-tie detection band (relative to the score
/// scale); tie_rel == 0 admits exact ties only.
PricedAssignment priced_assignment(const SupportPool& pool, const CostMatrix& costs, int side,
                                   const Eigen::VectorXd& g, double lambda, double tie_rel) {
  const int nk = side_count(pool, side);
  const int n = pool.size();
  const double mass = 1.0 / nk;
  PricedAssignment out;
  out.lo.resize(nk);
  out.hi.resize(nk);
  for (int l = 0; l < nk; ++l) {
    const int src = pool.source_index(side, l);
    double best = -std::numeric_limits<double>::infinity();
    double cmax = 0.0;
    for (int m = 0; m < n; ++m) {
      best = std::max(best, g[m] - lambda * costs.c(src, m));
      cmax = std::max(cmax, costs.c(src, m));
    }
    const double tie_abs = tie_rel * std::max(1.0, std::abs(best) + lambda * cmax);
    int lo = -1, hi = -1;
    for (int m = 0; m < n; ++m) {
      if (g[m] - lambda * costs.c(src, m) < best - tie_abs) continue;
      if (lo < 0 || costs.c(src, m) < costs.c(src, lo)) lo = m;
      if (hi < 0 || costs.c(src, m) > costs.c(src, hi)) hi = m;
    }
    out.lo[l] = lo;
    out.hi[l] = hi;
    out.lo_cost += mass * costs.c(src, lo);
  }
  return out;
}

TransportPlan plan_from_columns(const SupportPool& pool, int side, const std::vector<int>& cols) {
  const int nk = side_count(pool, side);
  TransportPlan plan;
  plan.k = side;
  plan.rows = Eigen::MatrixXd::Zero(nk, pool.size());
  const double mass = 1.0 / nk;
  for (int l = 0; l < nk; ++l) plan.rows(l, cols[l]) = mass;
  return plan;
}

double golden_max(const std::function<double(double)>& f, int iters) {
  const double inv_phi = 0.6180339887498948482;
  double a = 0.0, b = 1.0;
  double x1 = b - inv_phi * (b - a), x2 = a + inv_phi * (b - a);
  double f1 = f(x1), f2 = f(x2);
  for (int i = 0; i < iters; ++i) {
    if (f1 < f2) {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + inv_phi * (b - a);
      f2 = f(x2);
    } else {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - inv_phi * (b - a);
      f1 = f(x1);
    }
  }
  return 0.5 * (a + b);
}

double smoothed_sum(const PsiFamily& family, const Eigen::VectorXd& p1, const Eigen::VectorXd& p2) {
  double total = 0.0;
  for (Eigen::Index m = 0; m < p1.size(); ++m)
    total += pointwise_objective_smoothed(family, std::max(p1[m], 0.0), std::max(p2[m], 0.0));
  return total;
}

double exact_sum(const PsiFamily& family, const Eigen::VectorXd& p1, const Eigen::VectorXd& p2) {
  double total = 0.0;
  for (Eigen::Index m = 0; m < p1.size(); ++m)
    total += pointwise_objective(family, std::max(p1[m], 0.0), std::max(p2[m], 0.0));
  return total;
}

}  // namespace

LfdProblem make_problem(const EmpiricalDistribution& q1, const EmpiricalDistribution& q2,
                        const PsiFamily& family, Norm norm, double theta1, double theta2) {
  if (!(theta1 >= 0.0) || !(theta2 >= 0.0))
    throw std::invalid_argument("uncertainty radii must be nonnegative");
  auto check_uniform = [](const EmpiricalDistribution& q, const char* name) {
    const double w = 1.0 / q.size();
    for (Eigen::Index i = 0; i < q.weights.size(); ++i)
      if (std::abs(q.weights[i] - w) > 1e-12)
        throw std::invalid_argument(std::string(name) +
                                    ": the solver expects uniform empirical weights"
                                    " (represent multiplicity by repeating atoms)");
  };
  check_uniform(q1, "sample 1");
  check_uniform(q2, "sample 2");
  LfdProblem problem;
  problem.pool = merge_supports(q1, q2);
  problem.costs = cost_matrix(problem.pool, norm);
  problem.family = family;
  problem.theta1 = theta1;
  problem.theta2 = theta2;
  return problem;
}

TransportPlan diagonal_plan(const LfdProblem& problem, int side) {
  const int nk = side_count(problem.pool, side);
  TransportPlan plan;
  plan.k = side;
  plan.rows = Eigen::MatrixXd::Zero(nk, problem.pool.size());
  const double mass = 1.0 / nk;
  for (int l = 0; l < nk; ++l) plan.rows(l, problem.pool.source_index(side, l)) = mass;
  plan.budget_used = 0.0;
  return plan;
}

Eigen::VectorXd column_masses(const TransportPlan& plan, int pool_size) {
  if (plan.rows.cols() != pool_size)
    throw std::invalid_argument("plan width does not match the support pool");
  return plan.rows.colwise().sum().transpose();
}

double plan_cost(const LfdProblem& problem, const TransportPlan& plan) {
  const int nk = side_count(problem.pool, plan.k);
  double total = 0.0;
  for (int l = 0; l < nk; ++l) {
    const int src = problem.pool.source_index(plan.k, l);
    total += plan.rows.row(l).dot(problem.costs.c.row(src));
  }
  return total;
}

void check_plan_feasible(const LfdProblem& problem, const TransportPlan& plan) {
  const int nk = side_count(problem.pool, plan.k);
  if (plan.rows.rows() != nk || plan.rows.cols() != problem.pool.size())
    throw std::invalid_argument("transport plan has the wrong shape for this problem");
  const double mass = 1.0 / nk;
  for (int l = 0; l < nk; ++l) {
    double sum = 0.0;
    for (int m = 0; m < plan.rows.cols(); ++m) {
      if (plan.rows(l, m) < -1e-12)
        throw std::invalid_argument("transport plan has a negative entry");
      sum += plan.rows(l, m);
    }
    if (std::abs(sum - mass) > kRowSumTol)
      throw std::invalid_argument("transport plan row " + std::to_string(l) +
                                  " does not carry mass 1/n");
  }
  const double theta = plan.k == 1 ? problem.theta1 : problem.theta2;
  if (plan_cost(problem, plan) > theta + kBudgetTol)
    throw std::invalid_argument("transport plan exceeds its budget");
}

ObjectiveGradient objective_and_gradient(const LfdProblem& problem, const TransportPlan& plan1,
                                         const TransportPlan& plan2) {
  if (plan1.k != 1 || plan2.k != 2)
    throw std::invalid_argument("objective expects plans for sides 1 and 2 in that order");
  check_plan_feasible(problem, plan1);
  check_plan_feasible(problem, plan2);
  const int n = problem.pool.size();
  ObjectiveGradient out;
  out.p1 = column_masses(plan1, n);
  out.p2 = column_masses(plan2, n);
  out.objective = exact_sum(problem.family, out.p1, out.p2);
  out.smoothed = smoothed_sum(problem.family, out.p1, out.p2);
  out.grad1.resize(n);
  out.grad2.resize(n);
  for (int m = 0; m < n; ++m) {
    const double a = std::max(out.p1[m], kMassFloor);
    const double b = std::max(out.p2[m], kMassFloor);
    const auto [ga, gb] = pointwise_grad(problem.family, a, b);
    out.grad1[m] = ga;
    out.grad2[m] = gb;
  }
  return out;
}

TransportPlan lmo(const SupportPool& pool, const CostMatrix& costs, int side,
                  const Eigen::VectorXd& gradient, double theta) {
  if (!(theta >= 0.0)) throw std::invalid_argument("oracle budget must be nonnegative");
  if (gradient.size() != pool.size())
    throw std::invalid_argument("oracle gradient length does not match the pool");
  if (!gradient.allFinite()) throw std::invalid_argument("oracle gradient must be finite");
  const int nk = side_count(pool, side);
  const double mass = 1.0 / nk;

  // Unpriced optimum: every row on its best-score column, cheapest among
  // exact ties.  If that fits the budget nothing can beat it.
  const PricedAssignment free_pick = priced_assignment(pool, costs, side, gradient, 0.0, 0.0);
  if (free_pick.lo_cost <= theta) {
    TransportPlan plan = plan_from_columns(pool, side, free_pick.lo);
    plan.budget_used = free_pick.lo_cost;
    return plan;
  }

  // Bracket the budget price: beyond (max g - min g)/min positive cost every
  // positive-cost column scores no better than the row's own free column, so
  // the cheapest assignment costs nothing and certainly fits.  (A relative
  // nudge keeps the endpoint feasible under floating-point ties.)
  double min_pos_cost = std::numeric_limits<double>::infinity();
  for (int l = 0; l < nk; ++l) {
    const int src = pool.source_index(side, l);
    for (int m = 0; m < pool.size(); ++m)
      if (costs.c(src, m) > 0.0) min_pos_cost = std::min(min_pos_cost, costs.c(src, m));
  }
  const double spread = gradient.maxCoeff() - gradient.minCoeff();
  double lo_price = 0.0;
  double hi_price = (spread / min_pos_cost) * (1.0 + 1e-7) + 1e-12;
  for (int it = 0; it < 100; ++it) {
    const double mid = 0.5 * (lo_price + hi_price);
    const PricedAssignment a = priced_assignment(pool, costs, side, gradient, mid, 0.0);
    if (a.lo_cost <= theta) {
      hi_price = mid;
      if (theta - a.lo_cost <= 1e-12) break;  // budget already met tightly
    } else {
      lo_price = mid;
    }
  }

  // At the breakpoint price, spend the leftover budget by sliding rows from
  // their cheapest tied column toward their most expensive tied column, in
  // row order; at most one row ends up split.
  const PricedAssignment a = priced_assignment(pool, costs, side, gradient, hi_price, 1e-9);
  TransportPlan plan = plan_from_columns(pool, side, a.lo);
  double spent = a.lo_cost;
  double slack = theta - a.lo_cost;
  for (int l = 0; l < nk && slack > 0.0; ++l) {
    if (a.hi[l] == a.lo[l]) continue;
    const int src = pool.source_index(side, l);
    const double dc = mass * (costs.c(src, a.hi[l]) - costs.c(src, a.lo[l]));
    if (dc <= 0.0) continue;
    const double x = std::min(1.0, slack / dc);
    plan.rows(l, a.lo[l]) -= x * mass;
    plan.rows(l, a.hi[l]) += x * mass;
    spent += x * dc;
    slack -= x * dc;
  }
  plan.budget_used = spent;
  return plan;
}

LfdSolution solve(const LfdProblem& problem, const SolverConfig& config) {
  return solve_warm(problem, config, nullptr, nullptr);
}

LfdSolution solve_warm(const LfdProblem& problem, const SolverConfig& config,
                       const TransportPlan* init1, const TransportPlan* init2) {
  if (!(problem.theta1 >= 0.0) || !(problem.theta2 >= 0.0))
    throw std::invalid_argument("uncertainty radii must be nonnegative");
  if (problem.pool.n1 <= 0 || problem.pool.n2 <= 0)
    throw std::invalid_argument("both samples must contribute at least one atom");
  if (!problem.costs.c.allFinite())
    throw std::invalid_argument("cost matrix must be finite");
  if (config.max_iters < 0 || !(config.gap_tol >= 0.0))
    throw std::invalid_argument("solver configuration must have max_iters >= 0 and gap_tol >= 0");

  TransportPlan g1 = init1 ? *init1 : diagonal_plan(problem, 1);
  TransportPlan g2 = init2 ? *init2 : diagonal_plan(problem, 2);
  check_plan_feasible(problem, g1);
  check_plan_feasible(problem, g2);

  const int n = problem.pool.size();
  double gap = std::numeric_limits<double>::infinity();
  ObjectiveGradient og;
  int t = 0;
  for (;; ++t) {
    og = objective_and_gradient(problem, g1, g2);

    // The clamped gradient is a valid supergradient everywhere — exactly what
    // the gap certificate needs — but at columns carrying no mass on either
    // side it reports the 45-degree slope pair (1, 1) instead of the true
    // one-sided derivative 0 (mass arriving alone at an empty column is
    // worthless).  Steering by it makes the oracle chase empty columns and
    // stall, so the step direction uses a second gradient with both-empty
    // columns zeroed; the certificate keeps the conservative one.
    Eigen::VectorXd step_grad1 = og.grad1, step_grad2 = og.grad2;
    bool any_empty = false;
    for (int m = 0; m < n; ++m)
      if (og.p1[m] < kMassFloor && og.p2[m] < kMassFloor) {
        step_grad1[m] = 0.0;
        step_grad2[m] = 0.0;
        any_empty = true;
      }

    const TransportPlan s1 =
        lmo(problem.pool, problem.costs, 1, step_grad1, problem.theta1);
    const TransportPlan s2 =
        lmo(problem.pool, problem.costs, 2, step_grad2, problem.theta2);
    const Eigen::VectorXd q1 = column_masses(s1, n);
    const Eigen::VectorXd q2 = column_masses(s2, n);
    if (any_empty) {
      const TransportPlan c1 = lmo(problem.pool, problem.costs, 1, og.grad1, problem.theta1);
      const TransportPlan c2 = lmo(problem.pool, problem.costs, 2, og.grad2, problem.theta2);
      gap = og.grad1.dot(column_masses(c1, n) - og.p1) +
            og.grad2.dot(column_masses(c2, n) - og.p2);
    } else {
      gap = og.grad1.dot(q1 - og.p1) + og.grad2.dot(q2 - og.p2);
    }
    if (gap <= config.gap_tol || t >= config.max_iters) break;

    // The surrogate along the segment depends on the plans only through the
    // column masses, so each probe of the line search is O(pool).
    auto along = [&](double alpha) {
      return smoothed_sum(problem.family, (1.0 - alpha) * og.p1 + alpha * q1,
                          (1.0 - alpha) * og.p2 + alpha * q2);
    };
    const double alpha_default = 2.0 / (t + 2.0);
    const double alpha_golden = golden_max(along, 30);
    double alpha = 0.0;
    double best = og.smoothed;
    for (const double cand : {alpha_default, alpha_golden, 1.0}) {
      const double val = along(cand);
      if (val > best) {
        best = val;
        alpha = cand;
      }
    }
    if (alpha == 0.0) break;  // no ascent along the oracle direction; gap above is the certificate

    g1.rows = (1.0 - alpha) * g1.rows + alpha * s1.rows;
    g2.rows = (1.0 - alpha) * g2.rows + alpha * s2.rows;
    g1.budget_used = (1.0 - alpha) * g1.budget_used + alpha * s1.budget_used;
    g2.budget_used = (1.0 - alpha) * g2.budget_used + alpha * s2.budget_used;
  }

  // Consolidate duplicate columns.  Zero-cost column pairs are exact
  // duplicates of one another (the ground metric vanishes only between
  // identical points), so rows may shuttle allocation among them without
  // touching the spend, and superadditivity of the pointwise objective
  // (concave and 1-homogeneous) makes pooling a group's mass onto its first
  // column never worse.  Vertex steps cannot express this pairwise
  // rebalancing, so iterates otherwise stall with each duplicate group's
  // mass split at slightly misaligned ratios; pooling finishes the job
  // exactly — in particular, at zero radius the objective lands precisely on
  // the direct duplicate-grouped sum over the empiricals.
  bool pooled = false;
  std::vector<int> rep(n);
  for (int m = 0; m < n; ++m) {
    rep[m] = m;
    for (int j = 0; j < m; ++j)
      if (problem.costs.c(j, m) == 0.0) {
        rep[m] = j;
        break;
      }
  }
  for (auto* plan : {&g1, &g2})
    for (int l = 0; l < plan->rows.rows(); ++l)
      for (int m = 0; m < n; ++m)
        if (rep[m] != m && plan->rows(l, m) != 0.0) {
          plan->rows(l, rep[m]) += plan->rows(l, m);
          plan->rows(l, m) = 0.0;
          pooled = true;
        }
  if (pooled) og = objective_and_gradient(problem, g1, g2);

  LfdSolution sol;
  sol.pool = problem.pool;
  g1.budget_used = plan_cost(problem, g1);
  g2.budget_used = plan_cost(problem, g2);
  sol.gamma1 = std::move(g1);
  sol.gamma2 = std::move(g2);
  sol.p1 = og.p1;
  sol.p2 = og.p2;
  sol.objective = og.objective;
  sol.divergence = divergence_of_value(problem.family, std::min(sol.objective, 2.0 + 1e-9));
  sol.fw_gap = gap;
  sol.iterations = t;
  return sol;
}

LfdSolution brute_force(const LfdProblem& problem, int grid_depth, int points_per_dim) {
  const int n = problem.pool.size();
  if (problem.pool.n1 + problem.pool.n2 > 3)
    throw std::invalid_argument("brute-force oracle only supports n1 + n2 <= 3");
  if (grid_depth < 1 || points_per_dim < 3)
    throw std::invalid_argument("brute-force oracle needs at least one level and three grid points");
  const int rows_total = problem.pool.n1 + problem.pool.n2;
  const int free_per_row = n - 1;
  const int dims = rows_total * free_per_row;

  auto row_side = [&](int r) { return r < problem.pool.n1 ? 1 : 2; };
  auto row_index = [&](int r) { return r < problem.pool.n1 ? r : r - problem.pool.n1; };
  auto row_mass = [&](int r) { return 1.0 / (row_side(r) == 1 ? problem.pool.n1 : problem.pool.n2); };

  // Evaluate a candidate given per-(row, leading column) fractions; returns
  // the exact objective, or -inf if infeasible.
  Eigen::VectorXd p1(n), p2(n);
  Eigen::MatrixXd masses(rows_total, n);
  auto evaluate = [&](const std::vector<double>& x) {
    masses.setZero();
    for (int r = 0; r < rows_total; ++r) {
      double used = 0.0;
      for (int c = 0; c < free_per_row; ++c) {
        const double f = x[r * free_per_row + c];
        masses(r, c) = f * row_mass(r);
        used += f;
      }
      const double rest = 1.0 - used;
      if (rest < -1e-9) return -std::numeric_limits<double>::infinity();
      masses(r, n - 1) = std::max(rest, 0.0) * row_mass(r);
    }
    double cost1 = 0.0, cost2 = 0.0;
    for (int r = 0; r < rows_total; ++r) {
      const int src = problem.pool.source_index(row_side(r), row_index(r));
      const double c = masses.row(r).dot(problem.costs.c.row(src));
      (row_side(r) == 1 ? cost1 : cost2) += c;
    }
    if (cost1 > problem.theta1 + 1e-9 || cost2 > problem.theta2 + 1e-9)
      return -std::numeric_limits<double>::infinity();
    p1.setZero();
    p2.setZero();
    for (int r = 0; r < rows_total; ++r)
      (row_side(r) == 1 ? p1 : p2) += masses.row(r).transpose();
    return exact_sum(problem.family, p1, p2);
  };

  // Seed the incumbent with the identity plans (always feasible).
  std::vector<double> incumbent(dims, 0.0);
  for (int r = 0; r < rows_total; ++r) {
    const int own = problem.pool.source_index(row_side(r), row_index(r));
    if (own < free_per_row) incumbent[r * free_per_row + own] = 1.0;
  }
  double best_value = evaluate(incumbent);

  // Mesh-adaptive pattern search over shrinking boxes.  A level that improves
  // the incumbent re-centers WITHOUT shrinking (the optimum often lies along a
  // slanted budget face; geometric shrinking alone could never creep past
  // ~4/3 of the first window).  Only a stalled level refines the mesh, so each
  // resolution is exhausted before committing to it.
  double half_width = 0.5;
  int shrinks = 0;
  int levels = 0;
  int moves_at_width = 0;
  // Consecutive windows overlap, so ~8 translations per resolution already
  // cover the whole unit box; cap both per-resolution moves and total levels.
  const int level_cap = grid_depth + 64;
  while (shrinks < grid_depth && levels < level_cap) {
    ++levels;
    std::vector<double> lo(dims), hi(dims), step(dims);
    for (int d = 0; d < dims; ++d) {
      const double center = levels == 1 ? 0.5 : incumbent[d];
      lo[d] = std::max(0.0, center - half_width);
      hi[d] = std::min(1.0, center + half_width);
      step[d] = (hi[d] - lo[d]) / (points_per_dim - 1);
    }
    std::vector<int> idx(dims, 0);
    std::vector<double> x(dims);
    std::vector<double> level_best_x = incumbent;
    double level_best = best_value;
    for (;;) {
      for (int d = 0; d < dims; ++d) x[d] = lo[d] + step[d] * idx[d];
      const double v = evaluate(x);
      if (v > level_best + 1e-15) {
        level_best = v;
        level_best_x = x;
      }
      int d = 0;
      while (d < dims && ++idx[d] == points_per_dim) idx[d++] = 0;
      if (d == dims) break;
    }
    const bool improved = level_best > best_value + 1e-9;
    incumbent = level_best_x;
    best_value = level_best;
    if (improved && moves_at_width < 8) {
      ++moves_at_width;  // translate: recenter at the same width
      continue;
    }
    // Stalled (or creeped far enough): shrink to the coarsest spacing used,
    // so the refined box still covers the incumbent's grid cell.
    half_width = *std::max_element(step.begin(), step.end());
    ++shrinks;
    moves_at_width = 0;
  }

  // Polish with exact line searches.  The objective is concave in the
  // fraction vector and every constraint is linear, so the feasible segment
  // along any direction is an interval and its restriction is unimodal; the
  // tensor grid alone cannot represent the steep trade ratios required to
  // slide along a slanted budget face (it only offers integer step
  // combinations within one box), so we ascend along
  //   (a) coordinate directions (exact approach to each face),
  //   (b) same-side budget-preserving pair directions (slides along a face),
  //   (c) random directions projected onto the null space of near-active
  //       constraints (covers multi-face corners).
  {
    auto eval_at = [&](const std::vector<double>& base, const std::vector<double>& dir,
                       double t, std::vector<double>& out) {
      for (int d = 0; d < dims; ++d) {
        const double v = base[d] + t * dir[d];
        if (v < -1e-12 || v > 1.0 + 1e-12)
          return -std::numeric_limits<double>::infinity();
        out[d] = std::clamp(v, 0.0, 1.0);
      }
      return evaluate(out);
    };
    // Largest |t| along the feasible segment on one side of 0, by bisection
    // on the (convex) feasible set; t = 0 is always feasible.
    auto reach = [&](const std::vector<double>& dir, double sign, std::vector<double>& tmp) {
      double lo_t = 0.0, hi_t = sign * (std::sqrt(static_cast<double>(dims)) + 1.0);
      if (eval_at(incumbent, dir, hi_t, tmp) > -std::numeric_limits<double>::infinity())
        return hi_t;
      for (int it = 0; it < 60; ++it) {
        const double mid = 0.5 * (lo_t + hi_t);
        if (eval_at(incumbent, dir, mid, tmp) > -std::numeric_limits<double>::infinity())
          lo_t = mid;
        else
          hi_t = mid;
      }
      return lo_t;
    };
    std::vector<double> tmp(dims);
    // Exact golden-section line search from the incumbent along dir; applies
    // the improvement in place and reports whether it gained anything.
    auto line_search = [&](const std::vector<double>& dir) {
      const double t_hi = reach(dir, 1.0, tmp);
      const double t_lo = reach(dir, -1.0, tmp);
      if (t_hi - t_lo < 1e-14) return false;
      const double inv_phi = 0.6180339887498949;
      double a = t_lo, b = t_hi;
      double c = b - inv_phi * (b - a), e = a + inv_phi * (b - a);
      double fc = eval_at(incumbent, dir, c, tmp);
      double fe = eval_at(incumbent, dir, e, tmp);
      for (int it = 0; it < 80; ++it) {
        if (fc >= fe) {
          b = e;
          e = c;
          fe = fc;
          c = b - inv_phi * (b - a);
          fc = eval_at(incumbent, dir, c, tmp);
        } else {
          a = c;
          c = e;
          fc = fe;
          e = a + inv_phi * (b - a);
          fe = eval_at(incumbent, dir, e, tmp);
        }
      }
      const double t_best = fc >= fe ? c : e;
      const double v = eval_at(incumbent, dir, t_best, tmp);
      if (v <= best_value + 1e-13) return false;
      best_value = v;
      incumbent = tmp;
      return true;
    };

    // Gradient of each side's transport cost with respect to the fraction
    // vector: moving fraction x[(r,c)] shifts row mass from the residual
    // column n-1 to column c.
    std::vector<std::array<double, 2>> cost_grad(dims, {0.0, 0.0});
    for (int r = 0; r < rows_total; ++r) {
      const int src = problem.pool.source_index(row_side(r), row_index(r));
      for (int c = 0; c < free_per_row; ++c)
        cost_grad[r * free_per_row + c][row_side(r) - 1] =
            row_mass(r) * (problem.costs.c(src, c) - problem.costs.c(src, n - 1));
    }

    // Fixed direction set: coordinates, then same-side budget-preserving pairs.
    std::vector<std::vector<double>> fixed_dirs;
    for (int d = 0; d < dims; ++d) {
      std::vector<double> dir(dims, 0.0);
      dir[d] = 1.0;
      fixed_dirs.push_back(dir);
    }
    for (int k = 0; k < 2; ++k)
      for (int d1 = 0; d1 < dims; ++d1)
        for (int d2 = d1 + 1; d2 < dims; ++d2) {
          const double a1 = cost_grad[d1][k], a2 = cost_grad[d2][k];
          if (cost_grad[d1][1 - k] != 0.0 || cost_grad[d2][1 - k] != 0.0) continue;
          if (a1 == 0.0 && a2 == 0.0) continue;
          std::vector<double> dir(dims, 0.0);
          dir[d1] = a2;
          dir[d2] = -a1;
          const double norm = std::hypot(a1, a2);
          dir[d1] /= norm;
          dir[d2] /= norm;
          fixed_dirs.push_back(dir);
        }

    std::uint64_t state = 0x9E3779B97F4A7C15ull;  // fixed seed: deterministic oracle
    auto next_u64 = [&]() {
      state += 0x9E3779B97F4A7C15ull;
      std::uint64_t z = state;
      z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
      z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
      return z ^ (z >> 31);
    };
    auto random_dir = [&]() {
      std::vector<double> dir(dims);
      for (int d = 0; d < dims; ++d)
        dir[d] = static_cast<double>(next_u64()) / 9.2233720368547758e18 - 1.0;
      return dir;
    };
    // Orthonormal basis of the normals of constraints active at the
    // incumbent; used to project random directions onto the faces.
    auto active_normals = [&]() {
      std::vector<std::vector<double>> normals;
      for (int d = 0; d < dims; ++d)
        if (incumbent[d] < 1e-9 || incumbent[d] > 1.0 - 1e-9) {
          std::vector<double> nvec(dims, 0.0);
          nvec[d] = 1.0;
          normals.push_back(nvec);
        }
      for (int r = 0; r < rows_total; ++r) {
        double used = 0.0;
        for (int c = 0; c < free_per_row; ++c) used += incumbent[r * free_per_row + c];
        if (used > 1.0 - 1e-9) {
          std::vector<double> nvec(dims, 0.0);
          for (int c = 0; c < free_per_row; ++c) nvec[r * free_per_row + c] = 1.0;
          normals.push_back(nvec);
        }
      }
      double cost[2] = {0.0, 0.0};
      for (int r = 0; r < rows_total; ++r) {
        const int src = problem.pool.source_index(row_side(r), row_index(r));
        double used = 0.0;
        for (int c = 0; c < free_per_row; ++c) used += incumbent[r * free_per_row + c];
        double cc = std::max(1.0 - used, 0.0) * row_mass(r) * problem.costs.c(src, n - 1);
        for (int c = 0; c < free_per_row; ++c)
          cc += incumbent[r * free_per_row + c] * row_mass(r) * problem.costs.c(src, c);
        cost[row_side(r) - 1] += cc;
      }
      const double theta[2] = {problem.theta1, problem.theta2};
      for (int k = 0; k < 2; ++k)
        if (cost[k] > theta[k] - 1e-7 * std::max(1.0, theta[k])) {
          std::vector<double> nvec(dims);
          for (int d = 0; d < dims; ++d) nvec[d] = cost_grad[d][k];
          normals.push_back(nvec);
        }
      // Gram-Schmidt.
      std::vector<std::vector<double>> basis;
      for (auto& v : normals) {
        for (const auto& b : basis) {
          double dot = 0.0;
          for (int d = 0; d < dims; ++d) dot += v[d] * b[d];
          for (int d = 0; d < dims; ++d) v[d] -= dot * b[d];
        }
        double norm = 0.0;
        for (int d = 0; d < dims; ++d) norm += v[d] * v[d];
        norm = std::sqrt(norm);
        if (norm < 1e-10) continue;
        for (int d = 0; d < dims; ++d) v[d] /= norm;
        basis.push_back(v);
      }
      return basis;
    };

    int stale_passes = 0;
    for (int pass = 0; pass < 400 && stale_passes < 3; ++pass) {
      bool improved = false;
      for (const auto& dir : fixed_dirs)
        if (line_search(dir)) improved = true;
      const auto basis = active_normals();
      for (int round = 0; round < 24; ++round) {
        auto dir = random_dir();
        if (round % 2 == 1) {  // project onto the active faces
          for (const auto& b : basis) {
            double dot = 0.0;
            for (int d = 0; d < dims; ++d) dot += dir[d] * b[d];
            for (int d = 0; d < dims; ++d) dir[d] -= dot * b[d];
          }
        }
        double norm = 0.0;
        for (int d = 0; d < dims; ++d) norm += dir[d] * dir[d];
        norm = std::sqrt(norm);
        if (norm < 1e-9) continue;
        for (int d = 0; d < dims; ++d) dir[d] /= norm;
        if (line_search(dir)) improved = true;
      }
      stale_passes = improved ? 0 : stale_passes + 1;
    }
  }

  // Materialize the incumbent as a solution.  Line searches may ride the
  // 1e-9 row-sum slack; rescale such rows so the plan conserves mass exactly.
  for (int r = 0; r < rows_total; ++r) {
    double used = 0.0;
    for (int c = 0; c < free_per_row; ++c) used += incumbent[r * free_per_row + c];
    if (used > 1.0)
      for (int c = 0; c < free_per_row; ++c) incumbent[r * free_per_row + c] /= used;
  }
  const double obj = evaluate(incumbent);
  LfdSolution sol;
  sol.pool = problem.pool;
  sol.gamma1.k = 1;
  sol.gamma2.k = 2;
  sol.gamma1.rows = masses.topRows(problem.pool.n1);
  sol.gamma2.rows = masses.bottomRows(problem.pool.n2);
  sol.gamma1.budget_used = plan_cost(problem, sol.gamma1);
  sol.gamma2.budget_used = plan_cost(problem, sol.gamma2);
  sol.p1 = p1;
  sol.p2 = p2;
  sol.objective = obj;
  sol.divergence = divergence_of_value(problem.family, std::min(obj, 2.0 + 1e-9));
  sol.fw_gap = std::numeric_limits<double>::quiet_NaN();
  sol.iterations = levels;
  return sol;
}

}  // namespace wrht
