#include "wrht/distributions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <utility>

namespace wrht {

Norm norm_from_string(std::string_view name) {
  if (name == "l1") return Norm::L1;
  if (name == "l2") return Norm::L2;
  if (name == "linf") return Norm::Linf;
  throw std::invalid_argument("unknown norm '" + std::string(name) + "' (expected l1, l2, or linf)");
}

std::string to_string(Norm norm) {
  switch (norm) {
    case Norm::L1: return "l1";
    case Norm::L2: return "l2";
    case Norm::Linf: return "linf";
  }
  throw std::invalid_argument("invalid norm enum value");
}

double point_norm(const Eigen::VectorXd& v, Norm norm) {
  switch (norm) {
    case Norm::L1: return v.lpNorm<1>();
    case Norm::L2: return v.norm();
    case Norm::Linf: return v.lpNorm<Eigen::Infinity>();
  }
  throw std::invalid_argument("invalid norm enum value");
}

EmpiricalDistribution::EmpiricalDistribution(std::vector<Eigen::VectorXd> pts, Eigen::VectorXd w)
    : points(std::move(pts)), weights(std::move(w)) {
  if (points.empty()) throw std::invalid_argument("empirical distribution needs at least one atom");
  if (weights.size() != static_cast<Eigen::Index>(points.size()))
    throw std::invalid_argument("weight count does not match atom count");
  const Eigen::Index d = points[0].size();
  for (const auto& p : points)
    if (p.size() != d) throw std::invalid_argument("atoms of an empirical distribution must share one dimension");
  double total = 0.0;
  for (Eigen::Index i = 0; i < weights.size(); ++i) {
    if (!(weights[i] >= 0.0)) throw std::invalid_argument("empirical weights must be nonnegative");
    total += weights[i];
  }
  if (std::abs(total - 1.0) > 1e-12)
    throw std::invalid_argument("empirical weights must sum to 1 (got " + std::to_string(total) + ")");
}

EmpiricalDistribution EmpiricalDistribution::uniform(std::vector<Eigen::VectorXd> pts) {
  const auto n = pts.size();
  if (n == 0) throw std::invalid_argument("empirical distribution needs at least one atom");
  return EmpiricalDistribution(std::move(pts), Eigen::VectorXd::Constant(static_cast<Eigen::Index>(n), 1.0 / static_cast<double>(n)));
}

SupportPool merge_supports(const EmpiricalDistribution& q1, const EmpiricalDistribution& q2) {
  if (q1.dimension() != q2.dimension())
    throw std::invalid_argument("cannot merge supports of dimension " + std::to_string(q1.dimension()) +
                                " and " + std::to_string(q2.dimension()));
  SupportPool pool;
  pool.points.reserve(q1.points.size() + q2.points.size());
  pool.points.insert(pool.points.end(), q1.points.begin(), q1.points.end());
  pool.points.insert(pool.points.end(), q2.points.begin(), q2.points.end());
  pool.n1 = q1.size();
  pool.n2 = q2.size();
  return pool;
}

CostMatrix cost_matrix(const SupportPool& pool, Norm norm) {
  const int n = pool.size();
  CostMatrix cm;
  cm.c = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const double v = point_norm(pool.points[i] - pool.points[j], norm);
      cm.c(i, j) = v;
      cm.c(j, i) = v;
    }
  return cm;
}

// Successive shortest paths with node potentials on the complete bipartite
// transportation graph.  Dense Dijkstra per augmentation; exact optimum at
// termination (dual feasibility plus complementary slackness are invariants).
double wasserstein_distance(const EmpiricalDistribution& p, const EmpiricalDistribution& q,
                            Norm norm) {
  if (p.dimension() != q.dimension())
    throw std::invalid_argument("transport distance requires equal dimensions");
  const int np = p.size(), nq = q.size();
  Eigen::MatrixXd cost(np, nq);
  for (int i = 0; i < np; ++i)
    for (int j = 0; j < nq; ++j) cost(i, j) = point_norm(p.points[i] - q.points[j], norm);

  std::vector<double> supply(p.weights.data(), p.weights.data() + np);
  std::vector<double> demand(q.weights.data(), q.weights.data() + nq);
  Eigen::MatrixXd flow = Eigen::MatrixXd::Zero(np, nq);
  std::vector<double> pot(np + nq, 0.0);  // node potentials keep reduced costs >= 0

  constexpr double kMassEps = 1e-15;
  constexpr double kInf = std::numeric_limits<double>::infinity();
  double remaining = 0.0;
  for (double s : supply) remaining += s;

  const int iter_cap = 100 * (np + nq) + 100;
  int iters = 0;
  while (remaining > kMassEps) {
    if (++iters > iter_cap)
      throw std::runtime_error("transport solver failed to terminate (degenerate instance)");

    // Multi-source Dijkstra over the residual graph.  Node ids: sources
    // 0..np-1, sinks np..np+nq-1.
    const int nn = np + nq;
    std::vector<double> dist(nn, kInf);
    std::vector<int> parent(nn, -1);  // for a sink: source it was reached from; for a source: sink
    std::vector<char> done(nn, 0);
    for (int i = 0; i < np; ++i)
      if (supply[i] > kMassEps) dist[i] = 0.0;

    for (int round = 0; round < nn; ++round) {
      int u = -1;
      double best = kInf;
      for (int v = 0; v < nn; ++v)
        if (!done[v] && dist[v] < best) { best = dist[v]; u = v; }
      if (u < 0) break;
      done[u] = 1;
      if (u < np) {
        for (int j = 0; j < nq; ++j) {
          const double rc = cost(u, j) + pot[u] - pot[np + j];  // forward arc, unbounded capacity
          if (dist[u] + rc < dist[np + j] - 1e-18) {
            dist[np + j] = dist[u] + rc;
            parent[np + j] = u;
          }
        }
      } else {
        const int j = u - np;
        for (int i = 0; i < np; ++i) {
          if (flow(i, j) <= kMassEps) continue;  // backward arc needs positive flow
          const double rc = -cost(i, j) - pot[i] + pot[np + j];
          if (dist[u] + rc < dist[i] - 1e-18) {
            dist[i] = dist[u] + rc;
            parent[i] = j;
          }
        }
      }
    }

    int sink = -1;
    double best = kInf;
    for (int j = 0; j < nq; ++j)
      if (demand[j] > kMassEps && dist[np + j] < best) { best = dist[np + j]; sink = j; }
    if (sink < 0) throw std::runtime_error("transport solver: no augmenting path (mass imbalance)");

    // Trace the alternating path sink <- source <- sink <- ... back to a
    // seeded source (parent == -1; seeded sources keep dist 0 because all
    // reduced costs are nonnegative).
    std::vector<std::pair<int, int>> fwd, bwd;  // (source, sink) arcs
    double delta = demand[sink];
    int start = -1;
    for (int node = np + sink;;) {
      const int i = parent[node];
      fwd.emplace_back(i, node - np);
      if (parent[i] == -1) { start = i; break; }
      const int j = parent[i];  // sink that relaxed source i via a backward arc
      bwd.emplace_back(i, j);
      delta = std::min(delta, flow(i, j));
      node = np + j;
    }
    delta = std::min(delta, supply[start]);
    if (!(delta > 0.0)) throw std::runtime_error("transport solver: degenerate augmentation");

    for (const auto& [i, j] : fwd) flow(i, j) += delta;
    for (const auto& [i, j] : bwd) flow(i, j) -= delta;
    supply[start] -= delta;
    demand[sink] -= delta;
    remaining -= delta;

    // Johnson update capped at the augmenting sink's distance keeps every
    // residual reduced cost nonnegative (including arcs touching nodes beyond
    // or outside the shortest-path tree).
    for (int v = 0; v < nn; ++v) pot[v] += std::min(dist[v], best);
  }

  double total = 0.0;
  for (int i = 0; i < np; ++i)
    for (int j = 0; j < nq; ++j) total += flow(i, j) * cost(i, j);
  return total;
}

}  // namespace wrht
