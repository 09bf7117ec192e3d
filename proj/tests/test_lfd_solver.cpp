#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>
#include <vector>

#include "test_util.hpp"
#include "wrht/lfd_solver.hpp"
#include "wrht/rng.hpp"

using namespace wrht;
using testutil::vec;

namespace {

const PsiFamily kExp{FamilyKind::Exp};
const PsiFamily kLog{FamilyKind::Log};
const PsiFamily kQuad{FamilyKind::Quad};
const PsiFamily kHinge{FamilyKind::Hinge};
const std::vector<PsiFamily> kSmooth{kExp, kLog, kQuad};
const std::vector<PsiFamily> kAll{kExp, kLog, kQuad, kHinge};

/// The two-atom instance of the closed form: Q1 = delta_0, Q2 = delta_1 in
/// one dimension.  With theta1 = theta2 = theta < 1/2, each LFD moves mass
/// alpha = theta across the unit gap, and the optimum is
/// sum h over both atoms = 2 * h(1-a, a) = 4 sqrt(a(1-a)) for Exp.
LfdProblem two_atom_problem(const PsiFamily& family, double theta) {
  const auto q1 = EmpiricalDistribution::uniform({vec({0.0})});
  const auto q2 = EmpiricalDistribution::uniform({vec({1.0})});
  return make_problem(q1, q2, family, Norm::L2, theta, theta);
}

LfdProblem random_problem(int n1, int n2, int d, const PsiFamily& family, double theta1,
                          double theta2, std::uint64_t seed) {
  CounterRng rng(seed, 77);
  const auto q1 = EmpiricalDistribution::uniform(testutil::random_points(n1, d, rng, 0));
  const auto q2 = EmpiricalDistribution::uniform(testutil::random_points(n2, d, rng, 5000));
  return make_problem(q1, q2, family, Norm::L2, theta1, theta2);
}

/// A strictly interior feasible plan: every entry positive, rows normalized.
TransportPlan random_interior_plan(const LfdProblem& problem, int side, std::uint64_t seed) {
  const int nk = side == 1 ? problem.pool.n1 : problem.pool.n2;
  CounterRng rng(seed, 123 + static_cast<std::uint64_t>(side));
  TransportPlan plan;
  plan.k = side;
  plan.rows.resize(nk, problem.pool.size());
  for (int l = 0; l < nk; ++l) {
    double sum = 0.0;
    for (int m = 0; m < problem.pool.size(); ++m) {
      plan.rows(l, m) = 0.05 + rng.uniform_at(static_cast<std::uint64_t>(l * 100 + m));
      sum += plan.rows(l, m);
    }
    plan.rows.row(l) /= sum * nk;
  }
  plan.budget_used = plan_cost(problem, plan);
  return plan;
}

/// Eq.-(5)-style direct evaluation on the empiricals: group pool points that
/// are exactly equal (duplicates represent the same omega), sum each side's
/// mass per group, and add up h.  This is the zero-radius oracle.
double grouped_direct_objective(const LfdProblem& problem) {
  std::vector<int> group(problem.pool.size(), -1);
  int groups = 0;
  for (int m = 0; m < problem.pool.size(); ++m) {
    for (int g = 0; g < m; ++g)
      if (problem.pool.points[g] == problem.pool.points[m]) {
        group[m] = group[g];
        break;
      }
    if (group[m] < 0) group[m] = groups++;
  }
  std::vector<double> mass1(groups, 0.0), mass2(groups, 0.0);
  for (int m = 0; m < problem.pool.size(); ++m) {
    if (m < problem.pool.n1) mass1[group[m]] += 1.0 / problem.pool.n1;
    else mass2[group[m]] += 1.0 / problem.pool.n2;
  }
  double total = 0.0;
  for (int g = 0; g < groups; ++g)
    total += pointwise_objective(problem.family, mass1[g], mass2[g]);
  return total;
}

/// Checks every LfdSolution invariant against its problem.
void check_solution_invariants(const LfdProblem& problem, const LfdSolution& sol) {
  check_plan_feasible(problem, sol.gamma1);
  check_plan_feasible(problem, sol.gamma2);
  const Eigen::VectorXd p1 = column_masses(sol.gamma1, problem.pool.size());
  const Eigen::VectorXd p2 = column_masses(sol.gamma2, problem.pool.size());
  CHECK((p1 - sol.p1).cwiseAbs().maxCoeff() <= 1e-10);
  CHECK((p2 - sol.p2).cwiseAbs().maxCoeff() <= 1e-10);
  CHECK(std::abs(sol.p1.sum() - 1.0) <= 1e-10);
  CHECK(std::abs(sol.p2.sum() - 1.0) <= 1e-10);
  double direct = 0.0;
  for (int m = 0; m < problem.pool.size(); ++m)
    direct += pointwise_objective(problem.family, std::max(0.0, sol.p1[m]),
                                  std::max(0.0, sol.p2[m]));
  CHECK(std::abs(sol.objective - direct) <= 1e-10);
  CHECK(sol.objective >= 0.0);
  CHECK(sol.objective <= 2.0 + 1e-9);
  CHECK(sol.divergence == doctest::Approx(1.0 - sol.objective / 2).epsilon(1e-12));
}

}  // namespace

TEST_SUITE("lfd_solver") {
  TEST_CASE("make_problem validates inputs") {
    const auto q1 = EmpiricalDistribution::uniform({vec({0.0})});
    const auto q2 = EmpiricalDistribution::uniform({vec({1.0})});
    CHECK_THROWS_AS(make_problem(q1, q2, kExp, Norm::L2, -0.1, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(make_problem(q1, q2, kExp, Norm::L2, 0.0, -0.1), std::invalid_argument);

    const auto q3 = EmpiricalDistribution::uniform({vec({0.0, 0.0})});
    CHECK_THROWS_AS(make_problem(q1, q3, kExp, Norm::L2, 0.1, 0.1), std::invalid_argument);

    // Non-uniform weights cannot be expressed as fixed 1/n_k row masses.
    Eigen::VectorXd w(2);
    w << 0.7, 0.3;
    const EmpiricalDistribution lopsided({vec({0.0}), vec({1.0})}, w);
    CHECK_THROWS_AS(make_problem(lopsided, q2, kExp, Norm::L2, 0.1, 0.1),
                    std::invalid_argument);

    const auto p = make_problem(q1, q2, kExp, Norm::L2, 0.25, 0.3);
    CHECK(p.pool.size() == 2);
    CHECK(p.theta1 == 0.25);
    CHECK(p.theta2 == 0.3);
    CHECK(p.costs.c(0, 1) == doctest::Approx(1.0));
  }

  TEST_CASE("diagonal plan, column masses, plan cost") {
    const auto problem = random_problem(3, 2, 2, kExp, 0.5, 0.5, 1);
    for (int side : {1, 2}) {
      const auto diag = diagonal_plan(problem, side);
      check_plan_feasible(problem, diag);
      CHECK(diag.budget_used == 0.0);
      CHECK(plan_cost(problem, diag) == 0.0);
      const auto p = column_masses(diag, problem.pool.size());
      const int nk = side == 1 ? 3 : 2;
      for (int m = 0; m < problem.pool.size(); ++m) {
        const bool own = side == 1 ? m < 3 : m >= 3;
        CHECK(p[m] == doctest::Approx(own ? 1.0 / nk : 0.0));
      }
    }
  }

  TEST_CASE("plan feasibility checker rejects each violation") {
    const auto problem = random_problem(2, 2, 2, kExp, 0.01, 0.01, 2);
    auto plan = diagonal_plan(problem, 1);

    auto bad_rows = plan;
    bad_rows.rows(0, 0) += 1e-3;  // row sum off
    CHECK_THROWS_AS(check_plan_feasible(problem, bad_rows), std::invalid_argument);

    auto negative = plan;
    negative.rows(0, 0) += 1e-3;
    negative.rows(0, 1) -= 1e-3;  // row sum fine, entry negative
    CHECK_THROWS_AS(check_plan_feasible(problem, negative), std::invalid_argument);

    // Move half of row 0's mass to the farthest pool point: busts theta=0.01.
    auto spendy = plan;
    int far = 0;
    for (int m = 0; m < problem.pool.size(); ++m)
      if (problem.costs.c(0, m) > problem.costs.c(0, far)) far = m;
    spendy.rows(0, far) += 0.25;
    spendy.rows(0, 0) -= 0.25;
    spendy.budget_used = plan_cost(problem, spendy);
    CHECK_THROWS_AS(check_plan_feasible(problem, spendy), std::invalid_argument);

    auto wrong_shape = plan;
    wrong_shape.rows.resize(1, problem.pool.size());
    CHECK_THROWS_AS(check_plan_feasible(problem, wrong_shape), std::invalid_argument);
  }

  TEST_CASE("objective_and_gradient pinned values") {
    // One atom per side, theta = 1: both plans may spread half-and-half, so
    // p1 = p2 = (0.5, 0.5) and the Exp objective is h(.5,.5)*2 = 2.
    const auto q1 = EmpiricalDistribution::uniform({vec({0.0})});
    const auto q2 = EmpiricalDistribution::uniform({vec({1.0})});
    const auto problem = make_problem(q1, q2, kExp, Norm::L2, 1.0, 1.0);
    TransportPlan g1{1, Eigen::MatrixXd(1, 2), 0.0};
    g1.rows << 0.5, 0.5;
    g1.budget_used = plan_cost(problem, g1);
    TransportPlan g2{2, Eigen::MatrixXd(1, 2), 0.0};
    g2.rows << 0.5, 0.5;
    g2.budget_used = plan_cost(problem, g2);
    const auto og = objective_and_gradient(problem, g1, g2);
    CHECK(og.objective == doctest::Approx(2.0));
    CHECK(og.p1[0] == doctest::Approx(0.5));
    CHECK(og.p2[1] == doctest::Approx(0.5));

    // Disjoint column supports: h(a, 0) = 0 everywhere.
    const auto problem0 = make_problem(q1, q2, kExp, Norm::L2, 0.0, 0.0);
    const auto og0 =
        objective_and_gradient(problem0, diagonal_plan(problem0, 1), diagonal_plan(problem0, 2));
    CHECK(og0.objective == 0.0);

    // Infeasible plans are rejected.
    auto bust = g1;
    bust.rows(0, 0) = 0.9;  // row sum 1.4
    CHECK_THROWS_AS(objective_and_gradient(problem, bust, g2), std::invalid_argument);
  }

  TEST_CASE("gradient matches finite differences along row-preserving directions") {
    // Perturbing gamma_k[l][m1] by +eps and gamma_k[l][m2] by -eps keeps the
    // row sum; the directional derivative must equal grad_k[m1] - grad_k[m2].
    const double eps = 1e-6;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      for (const auto& family : kSmooth) {
        auto problem = random_problem(3, 3, 2, family, 1.0, 1.0, 900 + seed);
        problem.theta1 = problem.theta2 = 1e6;  // keep perturbed plans feasible
        const auto g1 = random_interior_plan(problem, 1, seed);
        const auto g2 = random_interior_plan(problem, 2, seed + 50);
        const auto og = objective_and_gradient(problem, g1, g2);

        CounterRng pick(seed, 4242);
        for (int probe = 0; probe < 6; ++probe) {
          const int l = pick.pick_at(static_cast<std::uint64_t>(3 * probe), 3);
          const int m1 = pick.pick_at(static_cast<std::uint64_t>(3 * probe + 1),
                                      problem.pool.size());
          int m2 = pick.pick_at(static_cast<std::uint64_t>(3 * probe + 2),
                                problem.pool.size());
          if (m2 == m1) m2 = (m1 + 1) % problem.pool.size();

          auto plus = g1, minus = g1;
          plus.rows(l, m1) += eps;
          plus.rows(l, m2) -= eps;
          plus.budget_used = plan_cost(problem, plus);
          minus.rows(l, m1) -= eps;
          minus.rows(l, m2) += eps;
          minus.budget_used = plan_cost(problem, minus);
          const double fd = (objective_and_gradient(problem, plus, g2).smoothed -
                             objective_and_gradient(problem, minus, g2).smoothed) /
                            (2 * eps);
          const double analytic = og.grad1[m1] - og.grad1[m2];
          CHECK(analytic == doctest::Approx(fd).epsilon(1e-5));
        }
      }
    }
  }

  TEST_CASE("lmo pinned examples") {
    // One row, two columns, g=(0,1), costs (0,1), theta=0.3: spend the whole
    // budget on the better column -> plan (0.7, 0.3), value 0.3.
    const auto q1 = EmpiricalDistribution::uniform({vec({0.0})});
    const auto q2 = EmpiricalDistribution::uniform({vec({1.0})});
    const auto problem = make_problem(q1, q2, kExp, Norm::L2, 0.3, 0.0);
    Eigen::VectorXd g(2);
    g << 0.0, 1.0;
    const auto plan = lmo(problem.pool, problem.costs, 1, g, 0.3);
    CHECK(plan.rows(0, 0) == doctest::Approx(0.7));
    CHECK(plan.rows(0, 1) == doctest::Approx(0.3));
    CHECK(plan.budget_used == doctest::Approx(0.3));

    // Unbounded budget: all mass on the argmax column.
    const auto free = lmo(problem.pool, problem.costs, 1, g, 1e18);
    CHECK(free.rows(0, 1) == doctest::Approx(1.0));

    // Zero budget: only the zero-cost column (the source itself) is open.
    const auto stuck = lmo(problem.pool, problem.costs, 1, g, 0.0);
    CHECK(stuck.rows(0, 0) == doctest::Approx(1.0));
    CHECK(stuck.budget_used == 0.0);

    // Zero budget with an exact duplicate: moving to it is free, so the
    // better gradient among the zero-cost columns wins.
    const auto qd1 = EmpiricalDistribution::uniform({vec({2.0})});
    const auto qd2 = EmpiricalDistribution::uniform({vec({2.0})});
    const auto dup = make_problem(qd1, qd2, kExp, Norm::L2, 0.0, 0.0);
    const auto moved = lmo(dup.pool, dup.costs, 1, g, 0.0);
    CHECK(moved.rows(0, 1) == doctest::Approx(1.0));
  }

  TEST_CASE("lmo dominates random feasible plans and spends within budget") {
    for (std::uint64_t seed = 0; seed < 15; ++seed) {
      const auto problem = random_problem(4, 3, 2, kExp, 0.4, 0.3, 300 + seed);
      CounterRng rng(seed, 31);
      Eigen::VectorXd g(problem.pool.size());
      for (int m = 0; m < problem.pool.size(); ++m)
        g[m] = 4.0 * rng.uniform_at(static_cast<std::uint64_t>(m)) - 2.0;

      for (int side : {1, 2}) {
        const double theta = side == 1 ? problem.theta1 : problem.theta2;
        const auto best = lmo(problem.pool, problem.costs, side, g, theta);
        check_plan_feasible(problem, best);
        CHECK(std::abs(plan_cost(problem, best) - best.budget_used) <= 1e-12);
        const double best_value = g.dot(column_masses(best, problem.pool.size()));

        // The diagonal plan and budget-scaled random mixtures never beat it.
        const auto diag = diagonal_plan(problem, side);
        CHECK(best_value >= g.dot(column_masses(diag, problem.pool.size())) - 1e-10);
        for (int rep = 0; rep < 10; ++rep) {
          auto mix = random_interior_plan(problem, side, 1000 * seed + rep);
          // Blend toward the diagonal until the budget constraint holds.
          double lo = 0.0, hi = 1.0;
          for (int it = 0; it < 60; ++it) {
            const double mid = 0.5 * (lo + hi);
            TransportPlan cand{side, (1 - mid) * diag.rows + mid * mix.rows, 0.0};
            cand.budget_used = plan_cost(problem, cand);
            (cand.budget_used <= theta ? lo : hi) = mid;
          }
          TransportPlan cand{side, (1 - lo) * diag.rows + lo * mix.rows, 0.0};
          cand.budget_used = plan_cost(problem, cand);
          check_plan_feasible(problem, cand);
          CHECK(best_value >= g.dot(column_masses(cand, problem.pool.size())) - 1e-9);
        }
      }
    }
  }

  TEST_CASE("solve: two-atom closed form") {
    for (const double theta : {0.05, 0.1, 0.25, 0.4}) {
      const auto sol = solve(two_atom_problem(kExp, theta));
      const double expected = 4.0 * std::sqrt(theta * (1.0 - theta));
      CHECK(sol.objective == doctest::Approx(expected).epsilon(1e-9));
      // LFDs move exactly alpha = theta of mass to the opposite atom.
      CHECK(sol.p1[0] == doctest::Approx(1.0 - theta).epsilon(1e-7));
      CHECK(sol.p1[1] == doctest::Approx(theta).epsilon(1e-7));
      CHECK(sol.p2[0] == doctest::Approx(theta).epsilon(1e-7));
      CHECK(sol.p2[1] == doctest::Approx(1.0 - theta).epsilon(1e-7));
      check_solution_invariants(two_atom_problem(kExp, theta), sol);
    }
  }

  TEST_CASE("solve: saturated two-atom instance meets at the middle") {
    const auto sol = solve(two_atom_problem(kExp, 0.6));
    CHECK(sol.objective == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(sol.divergence == doctest::Approx(0.0).scale(1).epsilon(1e-9));
  }

  TEST_CASE("solve: zero radius with identical empiricals") {
    // Q1 == Q2 atom for atom: the pool holds each point twice, transport
    // between exact duplicates is free, so the LFDs coincide and the
    // objective hits 2 even with theta = 0.
    const auto q = EmpiricalDistribution::uniform({vec({0.5, -1.0}), vec({2.0, 0.25})});
    const auto problem = make_problem(q, q, kExp, Norm::L2, 0.0, 0.0);
    const auto sol = solve(problem);
    CHECK(sol.objective == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(sol.divergence == doctest::Approx(0.0).scale(1).epsilon(1e-9));
  }

  TEST_CASE("solve rejects invalid instances") {
    auto problem = two_atom_problem(kExp, 0.25);
    problem.theta1 = -1.0;
    CHECK_THROWS_AS(solve(problem), std::invalid_argument);
    problem.theta1 = 0.25;
    problem.costs.c(0, 1) = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(solve(problem), std::invalid_argument);
  }

  TEST_CASE("solve: invariants hold on random instances of every family") {
    for (std::uint64_t seed = 0; seed < 6; ++seed) {
      for (const auto& family : kAll) {
        const auto problem =
            random_problem(4, 5, 2, family, 0.05 + 0.1 * (seed % 3), 0.1, 500 + seed);
        const auto sol = solve(problem);
        check_solution_invariants(problem, sol);
        CHECK(sol.fw_gap >= -1e-12);
        CHECK(sol.iterations >= 0);
      }
    }
  }

  TEST_CASE("solve determinism: identical instances give identical bits") {
    const auto problem = random_problem(4, 4, 2, kLog, 0.2, 0.15, 321);
    const auto a = solve(problem);
    const auto b = solve(problem);
    CHECK(a.objective == b.objective);
    CHECK(a.fw_gap == b.fw_gap);
    CHECK(a.iterations == b.iterations);
    CHECK((a.p1 - b.p1).cwiseAbs().maxCoeff() == 0.0);
    CHECK((a.gamma1.rows - b.gamma1.rows).cwiseAbs().maxCoeff() == 0.0);
  }

  TEST_CASE("zero-radius identity: objective equals the direct empirical sum") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const auto& family = kAll[seed % 4];
      const auto problem = random_problem(3, 4, 2, family, 0.0, 0.0, 700 + seed);
      const auto sol = solve(problem);
      CHECK(std::abs(sol.objective - grouped_direct_objective(problem)) <= 1e-9);
    }
    // Shared atoms between the samples force actual duplicate grouping.
    const auto a = vec({1.0, 2.0}), b = vec({-1.0, 0.5}), c = vec({3.0, 3.0});
    const auto q1 = EmpiricalDistribution::uniform({a, b});
    const auto q2 = EmpiricalDistribution::uniform({a, b, c});
    const auto problem = make_problem(q1, q2, kQuad, Norm::L2, 0.0, 0.0);
    // Direct: h(1/2,1/3) at a and b, h(0,1/3) at c = 4*(1/6)/(5/6) * 2.
    const double expected = 2 * pointwise_objective(kQuad, 0.5, 1.0 / 3);
    CHECK(grouped_direct_objective(problem) == doctest::Approx(expected).epsilon(1e-12));
    CHECK(solve(problem).objective == doctest::Approx(expected).epsilon(1e-9));
  }

  TEST_CASE("saturation: overlapping balls reach objective 2") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const auto q1 = EmpiricalDistribution::uniform(
          testutil::random_points(4, 2, CounterRng(seed, 800), 0));
      const auto q2 = EmpiricalDistribution::uniform(
          testutil::random_points(3, 2, CounterRng(seed, 801), 0));
      const double w = wasserstein_distance(q1, q2, Norm::L2);
      const double t1 = 0.62 * w, t2 = 0.43 * w;  // t1 + t2 = 1.05 w >= w
      for (const auto& family : kSmooth) {
        const auto sol = solve(make_problem(q1, q2, family, Norm::L2, t1, t2));
        CHECK(sol.objective == doctest::Approx(2.0).epsilon(1e-6));
        CHECK(sol.divergence <= 1e-6);
      }
      const auto hinge_sol = solve(make_problem(q1, q2, kHinge, Norm::L2, t1, t2));
      CHECK(hinge_sol.objective == doctest::Approx(2.0).epsilon(1e-3));
    }
  }

  TEST_CASE("monotone in radius") {
    // Fresh solves on a tiny instance, where convergence is essentially
    // exact, must be nondecreasing in theta.
    std::vector<double> grid{0.0, 0.05, 0.1, 0.15, 0.2, 0.3, 0.4, 0.5};
    for (const auto& family : kSmooth) {
      double prev = -1.0;
      for (const double theta : grid) {
        const double obj = solve(two_atom_problem(family, theta)).objective;
        CHECK(obj >= prev - 1e-6);
        prev = obj;
      }
    }

    // Warm-started ascending sweep on larger random instances: monotone by
    // construction of the sweep, checked end to end.
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
      auto problem = random_problem(5, 5, 2, kLog, 0.0, 0.0, 1500 + seed);
      const TransportPlan* w1 = nullptr;
      const TransportPlan* w2 = nullptr;
      LfdSolution last;
      double prev = -1.0;
      for (const double theta : grid) {
        problem.theta1 = problem.theta2 = theta;
        const auto sol = solve_warm(problem, SolverConfig{}, w1, w2);
        CHECK(sol.objective >= prev - 1e-9);
        prev = sol.objective;
        last = sol;
        w1 = &last.gamma1;
        w2 = &last.gamma2;
      }
    }
  }

  TEST_CASE("oracle equivalence and gap certificate on tiny instances") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const auto& family = kAll[seed % 4];
      const int n1 = 1 + static_cast<int>(seed % 2);  // 1 or 2 atoms
      const int n2 = 3 - n1;                          // n1 + n2 = 3
      const double t1 = 0.05 + 0.05 * (seed % 5);
      const double t2 = 0.05 + 0.03 * (seed % 7);
      const auto problem = random_problem(n1, n2, 2, family, t1, t2, 2000 + seed);
      const auto fw = solve(problem);
      const auto oracle = brute_force(problem);
      // The hinge solver climbs the mu=200 surrogate, whose optimum can sit
      // up to 2 * 2 ln2 / mu = 0.014 away from the exact-h optimum; the
      // smooth families have no such offset.
      const double tol = family.kind == FamilyKind::Hinge ? 2e-2 : 1e-3;
      CHECK(std::abs(fw.objective - oracle.objective) <= tol);
      check_solution_invariants(problem, oracle);
      CHECK(std::isnan(oracle.fw_gap));

      // The oracle value is a feasible lower bound on the optimum, so the
      // Frank-Wolfe certificate must cover it (smooth families only: the
      // hinge gap certifies the smoothed surrogate, not exact h).  The
      // oracle's line searches may ride the 1e-9 absolute budget slack of
      // the feasibility check, worth up to ~1e-8 in objective, so the
      // certificate carries a small absolute cushion.
      if (family.kind != FamilyKind::Hinge)
        CHECK(oracle.objective <= fw.objective + fw.fw_gap + 1e-6);
    }
  }

  TEST_CASE("brute force pinned examples and size guard") {
    const auto sol = brute_force(two_atom_problem(kExp, 0.25));
    CHECK(std::abs(sol.objective - std::sqrt(3.0)) <= 1e-3);

    // Zero radius, distinct atoms: essentially only the diagonal is feasible.
    // The feasibility check allows an absolute budget slack of 1e-9, which h's
    // square root amplifies to ~sqrt(1e-9) * O(cost scale) in the objective,
    // so the brute-force value is near zero only at the ~1e-4 level.
    const auto zero = two_atom_problem(kExp, 0.0);
    CHECK(std::abs(brute_force(zero).objective) <= 1e-3);

    // Overlapping balls: saturation value 2.
    const auto sat = brute_force(two_atom_problem(kExp, 0.6));
    CHECK(std::abs(sat.objective - 2.0) <= 1e-3);

    CHECK_THROWS_AS(brute_force(random_problem(2, 2, 2, kExp, 0.1, 0.1, 1)),
                    std::invalid_argument);
  }

  TEST_CASE("permutation equivariance") {
    // Permuting Q1's atoms relabels the problem: permuting gamma1's rows and
    // the side-1 block of all column indices turns a solution of the base
    // instance into one of the permuted instance, with the objective exactly
    // preserved (within summation roundoff).
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      CounterRng rng(seed, 600);
      auto pts1 = testutil::random_points(4, 2, rng, 0);
      const auto pts2 = testutil::random_points(3, 2, rng, 1000);
      const auto problem = make_problem(EmpiricalDistribution::uniform(pts1),
                                        EmpiricalDistribution::uniform(pts2), kExp,
                                        Norm::L2, 0.15, 0.1);
      const auto base = solve(problem);

      // Rotate Q1's atom order by one; old atom l is new atom (l+3)%4 and
      // old pool column m<4 is new column (m+3)%4.
      std::rotate(pts1.begin(), pts1.begin() + 1, pts1.end());
      const auto rotated_problem = make_problem(EmpiricalDistribution::uniform(pts1),
                                                EmpiricalDistribution::uniform(pts2), kExp,
                                                Norm::L2, 0.15, 0.1);
      auto to_new = [](int m) { return m < 4 ? (m + 3) % 4 : m; };
      TransportPlan g1{1, Eigen::MatrixXd::Zero(4, base.pool.size()), base.gamma1.budget_used};
      for (int l = 0; l < 4; ++l)
        for (int m = 0; m < base.pool.size(); ++m)
          g1.rows(to_new(l), to_new(m)) = base.gamma1.rows(l, m);
      TransportPlan g2{2, Eigen::MatrixXd::Zero(3, base.pool.size()), base.gamma2.budget_used};
      for (int l = 0; l < 3; ++l)
        for (int m = 0; m < base.pool.size(); ++m)
          g2.rows(l, to_new(m)) = base.gamma2.rows(l, m);

      check_plan_feasible(rotated_problem, g1);
      check_plan_feasible(rotated_problem, g2);
      const auto og = objective_and_gradient(rotated_problem, g1, g2);
      CHECK(og.objective == doctest::Approx(base.objective).epsilon(1e-10));

      // Solving the relabeled instance from scratch lands on the same value
      // up to solver tolerance (the iteration path itself is not identical:
      // summation order changes at the last bit).
      const auto rotated = solve(rotated_problem);
      CHECK(rotated.objective == doctest::Approx(base.objective).epsilon(1e-6));
    }
  }
}
