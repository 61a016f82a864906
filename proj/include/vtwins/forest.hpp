#pragma once

#include "vtwins/common.hpp"

#include <cstdint>
#include <vector>

namespace vtwins {

struct ForestSpec {
  int n_trees = 500;
  /// Empty means {floor(p/3), floor(sqrt(p)), floor(2p/3)}, clamped to [1, p].
  std::vector<int> mtry_grid;
  std::vector<int> nodesize_grid = {5, 15, 30};
  /// Trees grown per grid point while tuning; the winner is refit with
  /// n_trees. Ignored when the grid has a single point.
  int tune_trees = 100;
};

/// Axis-aligned regression tree stored as a flat node array. A row goes left
/// when x[var] <= threshold. Thresholds are observed training values, so
/// routing depends only on the order of each covariate.
struct RegressionTreeNodes {
  struct Node {
    int var = -1;
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;
  };
  std::vector<Node> nodes;

  double predict_row(const Matrix& X, Index row) const;
  int leaf_of(const Matrix& X, Index row) const;
};

struct ForestTree {
  RegressionTreeNodes tree;
  std::vector<int> bootstrap_rows;
};

struct ForestFit {
  std::vector<ForestTree> trees;
  int mtry = 1;
  int nodesize = 1;
  double oob_mse = 0.0;
  int n_features = 0;
  /// OOB MSE of every grid point evaluated while tuning (mtry, nodesize, mse).
  struct GridScore {
    int mtry;
    int nodesize;
    double oob_mse;
  };
  std::vector<GridScore> grid;

  Vector predict(const Matrix& X) const;
};

std::vector<int> default_mtry_grid(int p);

ForestFit fit_forest(const Matrix& X, const Vector& y, const ForestSpec& spec, std::uint64_t seed);

}  // namespace vtwins
