#include "vtwins/subgroup.hpp"

#include "vtwins/lasso.hpp"
#include "vtwins/random.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace vtwins {

std::string step2_name(StepTwoKind kind) {
  switch (kind) {
    case StepTwoKind::None: return "none";
    case StepTwoKind::Linear: return "linear";
    case StepTwoKind::RegressionTree: return "rtree";
    case StepTwoKind::ConditionalTree: return "ctree";
  }
  return "none";
}

StepTwoKind step2_from_name(const std::string& name) {
  if (name == "none") return StepTwoKind::None;
  if (name == "linear" || name == "lm") return StepTwoKind::Linear;
  if (name == "rtree" || name == "tree" || name == "regression_tree") return StepTwoKind::RegressionTree;
  if (name == "ctree" || name == "conditional_tree") return StepTwoKind::ConditionalTree;
  throw Error("unknown step-2 model: " + name);
}

void validate_step2(const StepTwoSpec& spec) {
  require(spec.min_leaf >= 1, "step 2: min_leaf must be >= 1");
  require(spec.alpha_split > 0.0 && spec.alpha_split <= 1.0, "step 2: alpha_split must be in (0, 1]");
  require(spec.max_depth >= 0, "step 2: max_depth must be >= 0");
  require(spec.lasso_folds >= 2, "step 2: lasso_folds must be >= 2");
  if (const auto* cv = std::get_if<RepeatedCV>(&spec.tuning)) {
    require(!cv->depth_grid.empty(), "step 2: depth_grid is empty");
    require(cv->folds >= 2 && cv->repeats >= 1, "step 2: invalid cross-validation settings");
    for (int d : cv->depth_grid) require(d >= 0, "step 2: negative depth in grid");
  } else {
    const double v = std::get<FixedPenalty>(spec.tuning).value;
    require(std::isfinite(v) && v >= 0.0, "step 2: fixed penalty must be finite and >= 0");
  }
}

namespace {

int max_grid_depth(const RepeatedCV& cv) { return *std::max_element(cv.depth_grid.begin(), cv.depth_grid.end()); }

template <class Grow>
TreeModel tuned_tree(const Matrix& X, const Vector& z, const RepeatedCV& cv, std::uint64_t seed, Grow grow) {
  const TreeModel full = grow(X, z);
  if (full.root_only()) return full;
  const int depth = tune_depth_by_cv(X, z, grow, cv.folds, cv.repeats, cv.depth_grid, seed);
  return truncate_tree(full, depth);
}

}  // namespace

TreeModel fit_regression_tree(const Matrix& X, const Vector& z, const StepTwoSpec& spec, std::uint64_t seed) {
  validate_step2(spec);
  RegressionTreeGrowth growth;
  growth.min_leaf = spec.min_leaf;
  if (const auto* cv = std::get_if<RepeatedCV>(&spec.tuning)) {
    growth.max_depth = max_grid_depth(*cv);
    growth.min_improvement = spec.complexity;
    TreeModel tree = tuned_tree(X, z, *cv, seed, [&](const Matrix& A, const Vector& b) {
      return grow_regression_tree(A, b, growth);
    });
    tree.penalty_used = spec.complexity;
    return tree;
  }
  growth.max_depth = spec.max_depth;
  growth.min_improvement = std::get<FixedPenalty>(spec.tuning).value;
  return grow_regression_tree(X, z, growth);
}

TreeModel fit_conditional_tree(const Matrix& X, const Vector& z, const StepTwoSpec& spec, std::uint64_t seed) {
  validate_step2(spec);
  ConditionalTreeGrowth growth;
  growth.min_leaf = spec.min_leaf;
  growth.alpha = spec.alpha_split;
  if (const auto* cv = std::get_if<RepeatedCV>(&spec.tuning)) {
    growth.max_depth = max_grid_depth(*cv);
    return tuned_tree(X, z, *cv, seed, [&](const Matrix& A, const Vector& b) {
      return grow_conditional_tree(A, b, growth);
    });
  }
  growth.max_depth = spec.max_depth;
  growth.statistic_threshold = std::get<FixedPenalty>(spec.tuning).value;
  return grow_conditional_tree(X, z, growth);
}

SubgroupModel fit_step2(const Matrix& X, const Vector& z, const StepTwoSpec& spec, std::uint64_t seed,
                        const std::vector<ColumnKind>& kinds) {
  require(X.rows() == z.size(), "step 2: row mismatch");
  require(z.allFinite(), "step 2: non-finite effect estimates");
  switch (spec.kind) {
    case StepTwoKind::RegressionTree: return fit_regression_tree(X, z, spec, seed);
    case StepTwoKind::ConditionalTree: return fit_conditional_tree(X, z, spec, seed);
    case StepTwoKind::Linear: {
      validate_step2(spec);
      if (const auto* fixed = std::get_if<FixedPenalty>(&spec.tuning))
        return fit_sparse_linear_fixed(X, z, fixed->value, kinds);
      int k = spec.linear_k;
      if (k < 0) {
        StepTwoSpec companion = spec;
        companion.kind = StepTwoKind::RegressionTree;
        k = static_cast<int>(fit_regression_tree(X, z, companion, derive_seed(seed, {1})).variables().size());
      }
      k = std::min<int>(k, static_cast<int>(std::min<Index>(X.cols(), X.rows() - 2)));
      return fit_sparse_linear(X, z, k, spec.lasso_folds, derive_seed(seed, {2}), kinds);
    }
    case StepTwoKind::None: break;
  }
  throw Error("step 2: kind None has no model");
}

std::vector<int> selected_variables(const SubgroupModel& model) {
  if (const auto* tree = std::get_if<TreeModel>(&model)) return tree->variables();
  std::vector<int> vars = std::get<SparseLinearModel>(model).selected;
  std::sort(vars.begin(), vars.end());
  vars.erase(std::unique(vars.begin(), vars.end()), vars.end());
  return vars;
}

Vector predict_effect(const SubgroupModel& model, const Matrix& X) {
  return std::visit([&](const auto& m) { return m.predict(X); }, model);
}

double null_penalty(const Matrix& X, const Vector& z, const StepTwoSpec& spec, const std::vector<ColumnKind>& kinds) {
  require(X.rows() == z.size(), "null penalty: row mismatch");
  require(z.allFinite(), "null penalty: non-finite effects");
  std::vector<int> rows(static_cast<std::size_t>(X.rows()));
  std::iota(rows.begin(), rows.end(), 0);
  switch (spec.kind) {
    case StepTwoKind::Linear: return lasso_lambda_max(X, z, kinds);
    case StepTwoKind::RegressionTree: {
      const double mean = z.mean();
      const double sse = (z.array() - mean).square().sum();
      const double scale = std::max(1e-300, z.cwiseAbs().maxCoeff());
      if (sse <= 1e-24 * scale * scale * static_cast<double>(z.size())) return 0.0;
      const SplitCandidate s = best_variance_split(X, z, rows, spec.min_leaf);
      return s.var < 0 ? 0.0 : s.score / sse;
    }
    case StepTwoKind::ConditionalTree: {
      const auto c = association_statistics(X, z, rows);
      return c.empty() ? 0.0 : *std::max_element(c.begin(), c.end());
    }
    case StepTwoKind::None: break;
  }
  return 0.0;
}

}  // namespace vtwins
