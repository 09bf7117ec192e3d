#pragma once

#include <Eigen/Dense>
#include <string>
#include <string_view>
#include <vector>

namespace wrht {

/// Ground metric on the sample space: which p-norm measures the cost of
/// moving one unit of mass between two points.
enum class Norm { L1, L2, Linf };

Norm norm_from_string(std::string_view name);
std::string to_string(Norm norm);

/// ||v|| under the chosen ground norm.
double point_norm(const Eigen::VectorXd& v, Norm norm);

/// @brief A finitely supported probability distribution: a list of atoms and
/// a weight per atom.  Duplicate atoms are allowed and meaningful (their
/// masses are NOT merged).
struct EmpiricalDistribution {
  std::vector<Eigen::VectorXd> points;
  Eigen::VectorXd weights;

  /// Validates: nonempty, consistent dimension, nonnegative weights summing
  /// to 1 within 1e-12.  Throws std::invalid_argument otherwise.
  EmpiricalDistribution(std::vector<Eigen::VectorXd> pts, Eigen::VectorXd w);

  /// Uniform weights 1/n on the given atoms.
  static EmpiricalDistribution uniform(std::vector<Eigen::VectorXd> pts);

  int size() const { return static_cast<int>(points.size()); }
  int dimension() const { return static_cast<int>(points[0].size()); }
};

/// @brief The union of the supports of two samples, in order: the n1 atoms of
/// the first sample followed by the n2 atoms of the second.  Duplicates are
/// retained so that pool index k < n1 always refers to atom k of sample 1 and
/// pool index n1 + k to atom k of sample 2.
struct SupportPool {
  std::vector<Eigen::VectorXd> points;
  int n1 = 0;
  int n2 = 0;

  int size() const { return static_cast<int>(points.size()); }
  int dimension() const { return points.empty() ? 0 : static_cast<int>(points[0].size()); }

  /// Pool index of source atom `row` of sample `side` (1 or 2).
  int source_index(int side, int row) const { return side == 1 ? row : n1 + row; }
};

/// Concatenates the two supports (first sample then second), preserving order
/// and duplicates.  Throws std::invalid_argument on dimension mismatch.
SupportPool merge_supports(const EmpiricalDistribution& q1, const EmpiricalDistribution& q2);

/// @brief Pairwise ground-metric costs over a support pool.
struct CostMatrix {
  Eigen::MatrixXd c;  // size() x size(), symmetric, zero diagonal
};

CostMatrix cost_matrix(const SupportPool& pool, Norm norm);

/// @brief Exact order-1 transportation distance between two finitely
/// supported distributions under the chosen ground norm.
///
/// Solved as a minimum-cost flow by successive shortest paths with node
/// potentials (exact LP optimum, not an approximation).  Intended for the
/// desk scale used here (supports up to a few hundred atoms).
double wasserstein_distance(const EmpiricalDistribution& p, const EmpiricalDistribution& q,
                            Norm norm);

}  // namespace wrht
