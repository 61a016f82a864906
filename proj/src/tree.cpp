#include "vtwins/tree.hpp"

#include "vtwins/random.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace vtwins {

int TreeModel::depth() const {
  int d = 0;
  for (const auto& n : nodes) d = std::max(d, n.depth);
  return d;
}

int TreeModel::route(const Matrix& X, Index row, int max_depth) const {
  int id = 0;
  while (true) {
    const auto& node = nodes[static_cast<std::size_t>(id)];
    if (node.is_leaf() || (max_depth >= 0 && node.depth >= max_depth)) return id;
    id = X(row, node.var) <= node.threshold ? node.left : node.right;
  }
}

Vector TreeModel::predict(const Matrix& X, int max_depth) const {
  require(X.cols() == n_features, "tree predict: column mismatch");
  Vector out(X.rows());
  for (Index i = 0; i < X.rows(); ++i) out(i) = nodes[static_cast<std::size_t>(route(X, i, max_depth))].mean;
  return out;
}

std::vector<int> TreeModel::variables() const {
  std::vector<int> vars;
  for (const auto& n : nodes)
    if (!n.is_leaf()) vars.push_back(n.var);
  std::sort(vars.begin(), vars.end());
  vars.erase(std::unique(vars.begin(), vars.end()), vars.end());
  return vars;
}

std::vector<int> TreeModel::leaves() const {
  std::vector<int> out;
  for (std::size_t i = 0; i < nodes.size(); ++i)
    if (nodes[i].is_leaf()) out.push_back(static_cast<int>(i));
  return out;
}

namespace {

struct NodeStats {
  double mean = 0.0;
  double sse = 0.0;
};

NodeStats node_stats(const Vector& z, const std::vector<int>& rows) {
  NodeStats s;
  if (rows.empty()) return s;
  for (int r : rows) s.mean += z(r);
  s.mean /= static_cast<double>(rows.size());
  for (int r : rows) s.sse += (z(r) - s.mean) * (z(r) - s.mean);
  return s;
}

// Best split of one variable. Scores use node-centered responses.
SplitCandidate best_split_on(const Matrix& X, const Vector& z, const std::vector<int>& rows, int var, int min_leaf,
                             double node_mean, std::vector<int>& order) {
  SplitCandidate best;
  const auto m = static_cast<int>(rows.size());
  order = rows;
  std::sort(order.begin(), order.end(),
            [&](int a, int b) { return X(a, var) < X(b, var) || (X(a, var) == X(b, var) && a < b); });
  double total = 0.0;
  for (int r : order) total += z(r) - node_mean;
  double left = 0.0;
  for (int k = 0; k + 1 < m; ++k) {
    left += z(order[static_cast<std::size_t>(k)]) - node_mean;
    const double x_here = X(order[static_cast<std::size_t>(k)], var);
    const double x_next = X(order[static_cast<std::size_t>(k) + 1], var);
    if (x_here == x_next) continue;
    const int nl = k + 1;
    const int nr = m - nl;
    if (nl < min_leaf || nr < min_leaf) continue;
    const double right = total - left;
    const double score = left * left / nl + right * right / nr - total * total / m;
    if (score > best.score) {
      best.var = var;
      best.score = score;
      best.threshold = x_here + (x_next - x_here) / 2.0;
    }
  }
  return best;
}

void partition_rows(const Matrix& X, const std::vector<int>& rows, int var, double threshold, std::vector<int>& left,
                    std::vector<int>& right) {
  left.clear();
  right.clear();
  for (int r : rows) (X(r, var) <= threshold ? left : right).push_back(r);
}

template <class Decide>
TreeModel grow_tree(const Matrix& X, const Vector& z, int max_depth, Decide decide) {
  TreeModel tree;
  tree.n_features = static_cast<int>(X.cols());
  std::vector<int> all(static_cast<std::size_t>(X.rows()));
  std::iota(all.begin(), all.end(), 0);
  struct Job {
    int node;
    std::vector<int> rows;
  };
  std::vector<Job> stack;
  tree.nodes.emplace_back();
  stack.push_back({0, std::move(all)});
  while (!stack.empty()) {
    Job job = std::move(stack.back());
    stack.pop_back();
    const NodeStats stats = node_stats(z, job.rows);
    {
      auto& node = tree.nodes[static_cast<std::size_t>(job.node)];
      node.mean = stats.mean;
      node.count = static_cast<int>(job.rows.size());
    }
    const int depth = tree.nodes[static_cast<std::size_t>(job.node)].depth;
    if (depth >= max_depth) continue;
    const SplitCandidate split = decide(job.rows, stats);
    if (split.var < 0) continue;
    std::vector<int> left, right;
    partition_rows(X, job.rows, split.var, split.threshold, left, right);
    if (left.empty() || right.empty()) continue;
    const int left_id = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    tree.nodes.emplace_back();
    auto& node = tree.nodes[static_cast<std::size_t>(job.node)];
    node.var = split.var;
    node.threshold = split.threshold;
    node.score = split.score;
    node.left = left_id;
    node.right = left_id + 1;
    tree.nodes[static_cast<std::size_t>(left_id)].depth = depth + 1;
    tree.nodes[static_cast<std::size_t>(left_id) + 1].depth = depth + 1;
    stack.push_back({left_id + 1, std::move(right)});
    stack.push_back({left_id, std::move(left)});
  }
  return tree;
}

}  // namespace

SplitCandidate best_variance_split(const Matrix& X, const Vector& z, const std::vector<int>& rows, int min_leaf) {
  SplitCandidate best;
  if (static_cast<int>(rows.size()) < 2 * std::max(1, min_leaf)) return best;
  const double mean = node_stats(z, rows).mean;
  std::vector<int> order;
  for (Index j = 0; j < X.cols(); ++j) {
    const SplitCandidate c = best_split_on(X, z, rows, static_cast<int>(j), std::max(1, min_leaf), mean, order);
    if (c.var >= 0 && c.score > best.score) best = c;
  }
  return best;
}

TreeModel grow_regression_tree(const Matrix& X, const Vector& z, const RegressionTreeGrowth& growth) {
  require(X.rows() == z.size(), "regression tree: row mismatch");
  require(X.rows() >= 2 * growth.min_leaf, "regression tree: fewer rows than 2 * min_leaf");
  std::vector<int> all(static_cast<std::size_t>(X.rows()));
  std::iota(all.begin(), all.end(), 0);
  const double root_sse = node_stats(z, all).sse;
  const double scale = std::max(1e-300, z.cwiseAbs().maxCoeff());
  const bool degenerate = root_sse <= 1e-24 * scale * scale * static_cast<double>(z.size());
  TreeModel tree = grow_tree(X, z, growth.max_depth, [&](const std::vector<int>& rows, const NodeStats&) {
    if (degenerate) return SplitCandidate{};
    SplitCandidate s = best_variance_split(X, z, rows, growth.min_leaf);
    if (s.var >= 0 && !(s.score / root_sse > growth.min_improvement)) s.var = -1;
    return s;
  });
  tree.penalty_used = growth.min_improvement;
  return tree;
}

std::vector<double> association_statistics(const Matrix& X, const Vector& z, const std::vector<int>& rows) {
  const auto m = static_cast<double>(rows.size());
  std::vector<double> stats(static_cast<std::size_t>(X.cols()), 0.0);
  if (rows.size() < 2) return stats;
  double zm = 0.0, zz_raw = 0.0;
  for (int r : rows) {
    zm += z(r);
    zz_raw += z(r) * z(r);
  }
  zm /= m;
  double szz = 0.0;
  for (int r : rows) szz += (z(r) - zm) * (z(r) - zm);
  if (szz <= 1e-24 * std::max(zz_raw, 1e-300)) return stats;
  for (Index j = 0; j < X.cols(); ++j) {
    double xm = 0.0, xx_raw = 0.0;
    for (int r : rows) {
      xm += X(r, j);
      xx_raw += X(r, j) * X(r, j);
    }
    xm /= m;
    double sxx = 0.0, sxz = 0.0;
    for (int r : rows) {
      const double dx = X(r, j) - xm;
      sxx += dx * dx;
      sxz += dx * (z(r) - zm);
    }
    if (sxx <= 1e-24 * std::max(xx_raw, 1e-300)) continue;
    stats[static_cast<std::size_t>(j)] = std::abs(sxz) / std::sqrt(sxx * szz / (m - 1.0));
  }
  return stats;
}

double normal_two_sided_p(double statistic) { return std::erfc(std::abs(statistic) / std::sqrt(2.0)); }

TreeModel grow_conditional_tree(const Matrix& X, const Vector& z, const ConditionalTreeGrowth& growth) {
  require(X.rows() == z.size(), "conditional tree: row mismatch");
  require(X.rows() >= 2 * growth.min_leaf, "conditional tree: fewer rows than 2 * min_leaf");
  require(growth.alpha > 0.0 && growth.alpha <= 1.0, "conditional tree: alpha must be in (0, 1]");
  const auto p = static_cast<double>(X.cols());
  const int min_leaf = std::max(1, growth.min_leaf);
  std::vector<int> order;
  TreeModel tree = grow_tree(X, z, growth.max_depth, [&](const std::vector<int>& rows, const NodeStats& stats) {
    SplitCandidate none;
    if (static_cast<int>(rows.size()) < 2 * min_leaf) return none;
    const auto c = association_statistics(X, z, rows);
    const auto top = std::max_element(c.begin(), c.end());
    const double stat = *top;
    if (!(stat > 0.0)) return none;
    if (growth.statistic_threshold) {
      if (stat < *growth.statistic_threshold) return none;
    } else {
      const double adjusted = std::min(1.0, normal_two_sided_p(stat) * p);
      if (adjusted > growth.alpha) return none;
    }
    const int var = static_cast<int>(top - c.begin());
    SplitCandidate s = best_split_on(X, z, rows, var, min_leaf, stats.mean, order);
    s.score = stat;
    return s;
  });
  tree.penalty_used = growth.statistic_threshold.value_or(growth.alpha);
  return tree;
}

TreeModel truncate_tree(const TreeModel& tree, int depth) {
  TreeModel out;
  out.penalty_used = tree.penalty_used;
  out.n_features = tree.n_features;
  if (tree.nodes.empty()) return out;
  std::vector<std::pair<int, int>> stack{{0, 0}};
  out.nodes.push_back(tree.nodes[0]);
  while (!stack.empty()) {
    const auto [src, dst] = stack.back();
    stack.pop_back();
    const TreeNode& node = tree.nodes[static_cast<std::size_t>(src)];
    if (node.is_leaf() || node.depth >= depth) {
      auto& leaf = out.nodes[static_cast<std::size_t>(dst)];
      leaf.var = -1;
      leaf.left = leaf.right = -1;
      leaf.threshold = 0.0;
      leaf.score = 0.0;
      continue;
    }
    const int left = static_cast<int>(out.nodes.size());
    out.nodes.push_back(tree.nodes[static_cast<std::size_t>(node.left)]);
    out.nodes.push_back(tree.nodes[static_cast<std::size_t>(node.right)]);
    out.nodes[static_cast<std::size_t>(dst)].left = left;
    out.nodes[static_cast<std::size_t>(dst)].right = left + 1;
    stack.push_back({node.right, left + 1});
    stack.push_back({node.left, left});
  }
  return out;
}

int tune_depth_by_cv(const Matrix& X, const Vector& z,
                     const std::function<TreeModel(const Matrix&, const Vector&)>& grow, int folds, int repeats,
                     const std::vector<int>& depth_grid, std::uint64_t seed) {
  require(!depth_grid.empty(), "depth grid is empty");
  require(folds >= 2 && repeats >= 1, "invalid cross-validation settings");
  const Index n = X.rows();
  require(n >= folds, "fewer rows than folds");
  std::vector<double> sse(depth_grid.size(), 0.0);
  for (int rep = 0; rep < repeats; ++rep) {
    Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(rep)}));
    const auto fold = fold_assignment(static_cast<int>(n), folds, rng);
    for (int f = 0; f < folds; ++f) {
      std::vector<Index> train, test;
      for (Index i = 0; i < n; ++i) (fold[static_cast<std::size_t>(i)] == f ? test : train).push_back(i);
      Matrix Xtr(static_cast<Index>(train.size()), X.cols()), Xte(static_cast<Index>(test.size()), X.cols());
      Vector ztr(static_cast<Index>(train.size())), zte(static_cast<Index>(test.size()));
      for (std::size_t r = 0; r < train.size(); ++r) {
        Xtr.row(static_cast<Index>(r)) = X.row(train[r]);
        ztr(static_cast<Index>(r)) = z(train[r]);
      }
      for (std::size_t r = 0; r < test.size(); ++r) {
        Xte.row(static_cast<Index>(r)) = X.row(test[r]);
        zte(static_cast<Index>(r)) = z(test[r]);
      }
      const TreeModel tree = grow(Xtr, ztr);
      for (std::size_t d = 0; d < depth_grid.size(); ++d)
        sse[d] += (tree.predict(Xte, depth_grid[d]) - zte).squaredNorm();
    }
  }
  std::size_t best = 0;
  for (std::size_t d = 1; d < depth_grid.size(); ++d) {
    if (sse[d] < sse[best] * (1.0 - 1e-12) ||
        (std::abs(sse[d] - sse[best]) <= 1e-12 * sse[best] && depth_grid[d] < depth_grid[best]))
      best = d;
  }
  return depth_grid[best];
}

}  // namespace vtwins
