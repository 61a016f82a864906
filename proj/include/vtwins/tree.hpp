#pragma once

#include "vtwins/common.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

namespace vtwins {

/// Node of a step-2 subgroup tree. Internal nodes send x[var] <= threshold to
/// `left`. Every node keeps the mean and count of the training rows reaching it.
struct TreeNode {
  int var = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double mean = 0.0;
  int count = 0;
  int depth = 0;
  /// Split score (regression tree) or test statistic (conditional tree).
  double score = 0.0;

  bool is_leaf() const { return var < 0; }
};

struct TreeModel {
  std::vector<TreeNode> nodes;
  double penalty_used = 0.0;
  int n_features = 0;

  int depth() const;
  bool root_only() const { return nodes.size() <= 1; }
  /// Leaf reached by a row, stopping early at max_depth when it is >= 0.
  int route(const Matrix& X, Index row, int max_depth = -1) const;
  Vector predict(const Matrix& X, int max_depth = -1) const;
  /// Distinct split variables in ascending order.
  std::vector<int> variables() const;
  std::vector<int> leaves() const;
};

struct SplitCandidate {
  int var = -1;
  double threshold = 0.0;
  double score = 0.0;
};

/// Best variance-reduction split of `rows` over all variables and midpoints
/// between consecutive distinct values, both children holding >= min_leaf
/// rows. score = SSE_parent - SSE_left - SSE_right; var = -1 when no
/// admissible split exists. Ties go to the lowest variable, then the smallest
/// threshold.
SplitCandidate best_variance_split(const Matrix& X, const Vector& z, const std::vector<int>& rows, int min_leaf);

struct RegressionTreeGrowth {
  int max_depth = 5;
  int min_leaf = 20;
  /// A split is kept only when score / SSE_root exceeds this value.
  double min_improvement = 0.0;
};

TreeModel grow_regression_tree(const Matrix& X, const Vector& z, const RegressionTreeGrowth& growth);

/// Standardized linear association statistics c_j = |r_j| sqrt(m - 1) of each
/// covariate with z over `rows` (zero for constant columns or constant z).
std::vector<double> association_statistics(const Matrix& X, const Vector& z, const std::vector<int>& rows);

/// Two-sided normal p-value of a standardized statistic.
double normal_two_sided_p(double statistic);

struct ConditionalTreeGrowth {
  int max_depth = 5;
  int min_leaf = 20;
  double alpha = 0.05;
  /// Test-statistic mode: split when the largest statistic is >= this value.
  std::optional<double> statistic_threshold;
};

TreeModel grow_conditional_tree(const Matrix& X, const Vector& z, const ConditionalTreeGrowth& growth);

/// Copy of the tree with every node at `depth` turned into a leaf.
TreeModel truncate_tree(const TreeModel& tree, int depth);

/// Picks the depth with the lowest repeated k-fold CV MSE. `grow` builds a
/// tree of depth max(depth_grid) on a training subset; shallower candidates
/// are evaluated by truncation. Ties go to the smaller depth.
int tune_depth_by_cv(const Matrix& X, const Vector& z,
                     const std::function<TreeModel(const Matrix&, const Vector&)>& grow, int folds, int repeats,
                     const std::vector<int>& depth_grid, std::uint64_t seed);

}  // namespace vtwins
