#pragma once

#include <vector>

#include <Eigen/Dense>

#include "wrht/distributions.hpp"
#include "wrht/rng.hpp"

namespace testutil {

inline Eigen::VectorXd vec(std::initializer_list<double> xs) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

/// n random points in [-span, span]^d, deterministic in (seed, stream).
inline std::vector<Eigen::VectorXd> random_points(int n, int d, wrht::CounterRng rng,
                                                  std::uint64_t offset = 0, double span = 2.0) {
  std::vector<Eigen::VectorXd> pts;
  pts.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd p(d);
    for (int j = 0; j < d; ++j)
      p[j] = span * (2.0 * rng.uniform_at(offset + static_cast<std::uint64_t>(i * d + j)) - 1.0);
    pts.push_back(std::move(p));
  }
  return pts;
}

/// Random strictly positive weights normalized to sum 1.
inline Eigen::VectorXd random_weights(int n, wrht::CounterRng rng, std::uint64_t offset = 0) {
  Eigen::VectorXd w(n);
  for (int i = 0; i < n; ++i)
    w[i] = 0.05 + rng.uniform_at(offset + static_cast<std::uint64_t>(i));
  return w / w.sum();
}

inline wrht::EmpiricalDistribution random_distribution(int n, int d, std::uint64_t seed,
                                                       std::uint64_t stream) {
  wrht::CounterRng rng(seed, stream);
  return {random_points(n, d, rng, 0), random_weights(n, rng, 10000)};
}

}  // namespace testutil
