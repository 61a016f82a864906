#include "vtwins/forest.hpp"

#include "vtwins/random.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace vtwins {

double RegressionTreeNodes::predict_row(const Matrix& X, Index row) const {
  return nodes[static_cast<std::size_t>(leaf_of(X, row))].value;
}

int RegressionTreeNodes::leaf_of(const Matrix& X, Index row) const {
  int id = 0;
  while (nodes[static_cast<std::size_t>(id)].var >= 0) {
    const auto& node = nodes[static_cast<std::size_t>(id)];
    id = X(row, node.var) <= node.threshold ? node.left : node.right;
  }
  return id;
}

std::vector<int> default_mtry_grid(int p) {
  std::vector<int> grid = {p / 3, static_cast<int>(std::floor(std::sqrt(static_cast<double>(p)))), 2 * p / 3};
  for (int& m : grid) m = std::clamp(m, 1, p);
  return grid;
}

namespace {

// Per-covariate ranks of the training rows; splits only look at ranks.
struct RankedData {
  std::vector<std::vector<int>> rank;      // [var][row]
  std::vector<std::vector<double>> value;  // [var][rank] -> observed value
};

RankedData rank_columns(const Matrix& X) {
  const Index n = X.rows();
  RankedData data;
  data.rank.resize(static_cast<std::size_t>(X.cols()));
  data.value.resize(static_cast<std::size_t>(X.cols()));
  std::vector<int> order(static_cast<std::size_t>(n));
  for (Index j = 0; j < X.cols(); ++j) {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return X(a, j) < X(b, j); });
    auto& rank = data.rank[static_cast<std::size_t>(j)];
    auto& value = data.value[static_cast<std::size_t>(j)];
    rank.assign(static_cast<std::size_t>(n), 0);
    for (std::size_t k = 0; k < order.size(); ++k) {
      const double v = X(order[k], j);
      if (value.empty() || v != value.back()) value.push_back(v);
      rank[static_cast<std::size_t>(order[k])] = static_cast<int>(value.size()) - 1;
    }
  }
  return data;
}

class TreeGrower {
 public:
  TreeGrower(const RankedData& data, const Vector& y, int mtry, int nodesize)
      : data_(data), y_(y), mtry_(mtry), nodesize_(nodesize), p_(static_cast<int>(data.rank.size())) {}

  RegressionTreeNodes grow(std::vector<int> rows, Rng& rng) {
    RegressionTreeNodes tree;
    samples_ = std::move(rows);
    struct Pending {
      int node;
      std::size_t begin;
      std::size_t end;
    };
    std::vector<Pending> stack;
    tree.nodes.emplace_back();
    stack.push_back({0, 0, samples_.size()});
    std::vector<int> candidates(static_cast<std::size_t>(p_));
    while (!stack.empty()) {
      const Pending job = stack.back();
      stack.pop_back();
      const std::size_t m = job.end - job.begin;
      double sum = 0.0;
      bool pure = true;
      const double first = y_(samples_[job.begin]);
      for (std::size_t k = job.begin; k < job.end; ++k) {
        const double v = y_(samples_[k]);
        sum += v;
        pure = pure && v == first;
      }
      tree.nodes[static_cast<std::size_t>(job.node)].value = pure ? first : sum / static_cast<double>(m);
      if (static_cast<int>(m) <= nodesize_ || pure) continue;

      // mtry distinct covariates, scanned in ascending index order.
      std::iota(candidates.begin(), candidates.end(), 0);
      for (int k = 0; k < mtry_; ++k) {
        const auto pick = k + static_cast<int>(rng.below(static_cast<std::uint64_t>(p_ - k)));
        std::swap(candidates[static_cast<std::size_t>(k)], candidates[static_cast<std::size_t>(pick)]);
      }
      std::sort(candidates.begin(), candidates.begin() + mtry_);

      int best_var = -1;
      int best_rank = -1;
      double best_score = 0.0;
      for (int c = 0; c < mtry_; ++c) {
        const int j = candidates[static_cast<std::size_t>(c)];
        const auto& rank = data_.rank[static_cast<std::size_t>(j)];
        const auto levels = data_.value[static_cast<std::size_t>(j)].size();
        const double parent = sum * sum / static_cast<double>(m);
        auto consider = [&](double left_sum, std::size_t nl_count, int at_rank) {
          const auto nl = static_cast<double>(nl_count);
          const auto nr = static_cast<double>(m - nl_count);
          const double right_sum = sum - left_sum;
          const double score = left_sum * left_sum / nl + right_sum * right_sum / nr - parent;
          if (score > best_score) {
            best_score = score;
            best_var = j;
            best_rank = at_rank;
          }
        };
        if (4 * m >= levels) {
          // Dense node: accumulate by rank instead of sorting.
          bucket_sum_.assign(levels, 0.0);
          bucket_count_.assign(levels, 0);
          for (std::size_t k = job.begin; k < job.end; ++k) {
            const int row = samples_[k];
            const auto r = static_cast<std::size_t>(rank[static_cast<std::size_t>(row)]);
            bucket_sum_[r] += y_(row);
            ++bucket_count_[r];
          }
          double left_sum = 0.0;
          std::size_t left_count = 0;
          for (std::size_t r = 0; r < levels && left_count < m; ++r) {
            if (bucket_count_[r] == 0) continue;
            left_sum += bucket_sum_[r];
            left_count += static_cast<std::size_t>(bucket_count_[r]);
            if (left_count < m) consider(left_sum, left_count, static_cast<int>(r));
          }
          continue;
        }
        scratch_.clear();
        for (std::size_t k = job.begin; k < job.end; ++k) {
          const int row = samples_[k];
          scratch_.push_back({rank[static_cast<std::size_t>(row)], y_(row)});
        }
        std::sort(scratch_.begin(), scratch_.end(),
                  [](const RankY& a, const RankY& b) { return a.rank < b.rank; });
        double left_sum = 0.0;
        for (std::size_t k = 0; k + 1 < m; ++k) {
          left_sum += scratch_[k].y;
          if (scratch_[k].rank == scratch_[k + 1].rank) continue;
          consider(left_sum, k + 1, scratch_[k].rank);
        }
      }
      if (best_var < 0) continue;

      const auto& rank = data_.rank[static_cast<std::size_t>(best_var)];
      const auto mid = std::stable_partition(samples_.begin() + static_cast<std::ptrdiff_t>(job.begin),
                                             samples_.begin() + static_cast<std::ptrdiff_t>(job.end),
                                             [&](int row) { return rank[static_cast<std::size_t>(row)] <= best_rank; });
      const auto split = static_cast<std::size_t>(mid - samples_.begin());
      const int left = static_cast<int>(tree.nodes.size());
      tree.nodes.emplace_back();
      tree.nodes.emplace_back();
      auto& node = tree.nodes[static_cast<std::size_t>(job.node)];
      node.var = best_var;
      node.threshold = data_.value[static_cast<std::size_t>(best_var)][static_cast<std::size_t>(best_rank)];
      node.left = left;
      node.right = left + 1;
      stack.push_back({left + 1, split, job.end});
      stack.push_back({left, job.begin, split});
    }
    return tree;
  }

 private:
  struct RankY {
    int rank;
    double y;
  };
  const RankedData& data_;
  const Vector& y_;
  int mtry_;
  int nodesize_;
  int p_;
  std::vector<int> samples_;
  std::vector<RankY> scratch_;
  std::vector<double> bucket_sum_;
  std::vector<int> bucket_count_;
};

struct GrownForest {
  std::vector<ForestTree> trees;
  double oob_mse = 0.0;
};

GrownForest grow_forest(const Matrix& X, const RankedData& data, const Vector& y, int n_trees, int mtry,
                        int nodesize, std::uint64_t seed) {
  const Index n = X.rows();
  GrownForest forest;
  forest.trees.reserve(static_cast<std::size_t>(n_trees));
  TreeGrower grower(data, y, mtry, nodesize);
  Vector oob_sum = Vector::Zero(n);
  std::vector<int> oob_count(static_cast<std::size_t>(n), 0);
  std::vector<char> in_bag(static_cast<std::size_t>(n));
  for (int t = 0; t < n_trees; ++t) {
    Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(t)}));
    std::vector<int> rows(static_cast<std::size_t>(n));
    std::fill(in_bag.begin(), in_bag.end(), 0);
    for (auto& r : rows) {
      r = static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
      in_bag[static_cast<std::size_t>(r)] = 1;
    }
    ForestTree tree{grower.grow(rows, rng), std::move(rows)};
    for (Index i = 0; i < n; ++i) {
      if (in_bag[static_cast<std::size_t>(i)]) continue;
      oob_sum(i) += tree.tree.predict_row(X, i);
      ++oob_count[static_cast<std::size_t>(i)];
    }
    forest.trees.push_back(std::move(tree));
  }
  double sse = 0.0;
  int counted = 0;
  for (Index i = 0; i < n; ++i) {
    const int c = oob_count[static_cast<std::size_t>(i)];
    if (c == 0) continue;
    const double r = oob_sum(i) / c - y(i);
    sse += r * r;
    ++counted;
  }
  forest.oob_mse = counted > 0 ? sse / counted : std::numeric_limits<double>::quiet_NaN();
  return forest;
}

}  // namespace

Vector ForestFit::predict(const Matrix& X) const {
  require(X.cols() == n_features, "forest predict: column mismatch");
  Vector out = Vector::Zero(X.rows());
  for (const auto& t : trees)
    for (Index i = 0; i < X.rows(); ++i) out(i) += t.tree.predict_row(X, i);
  return out / static_cast<double>(trees.size());
}

ForestFit fit_forest(const Matrix& X, const Vector& y, const ForestSpec& spec, std::uint64_t seed) {
  const auto n = static_cast<int>(X.rows());
  const auto p = static_cast<int>(X.cols());
  require(n >= 2, "forest: need at least 2 rows");
  require(p >= 1, "forest: no covariates");
  require(y.size() == X.rows(), "forest: row mismatch");
  require(spec.n_trees >= 1, "forest: n_trees must be positive");
  require(X.allFinite() && y.allFinite(), "forest: non-finite input");

  std::vector<int> mtry_grid = spec.mtry_grid.empty() ? default_mtry_grid(p) : spec.mtry_grid;
  for (int& m : mtry_grid) m = std::clamp(m, 1, p);
  std::vector<int> mtry_unique;
  for (int m : mtry_grid)
    if (std::find(mtry_unique.begin(), mtry_unique.end(), m) == mtry_unique.end()) mtry_unique.push_back(m);
  require(!mtry_unique.empty() && !spec.nodesize_grid.empty(), "forest: tuning grid is empty");
  for (int s : spec.nodesize_grid) require(s >= 1, "forest: nodesize must be positive");

  const RankedData data = rank_columns(X);
  ForestFit fit;
  fit.n_features = p;
  fit.mtry = mtry_unique.front();
  fit.nodesize = spec.nodesize_grid.front();

  const bool tune = mtry_unique.size() * spec.nodesize_grid.size() > 1;
  if (tune) {
    double best = std::numeric_limits<double>::infinity();
    std::uint64_t point = 0;
    for (int m : mtry_unique) {
      for (int s : spec.nodesize_grid) {
        const auto trial = grow_forest(X, data, y, std::max(1, spec.tune_trees), m, s,
                                       derive_seed(seed, {1, point++}));
        fit.grid.push_back({m, s, trial.oob_mse});
        if (trial.oob_mse < best) {
          best = trial.oob_mse;
          fit.mtry = m;
          fit.nodesize = s;
        }
      }
    }
  }
  auto forest = grow_forest(X, data, y, spec.n_trees, fit.mtry, fit.nodesize, derive_seed(seed, {2}));
  fit.trees = std::move(forest.trees);
  fit.oob_mse = forest.oob_mse;
  if (!tune) fit.grid.push_back({fit.mtry, fit.nodesize, fit.oob_mse});
  return fit;
}

}  // namespace vtwins
