#pragma once

#include "vtwins/common.hpp"
#include "vtwins/dataset.hpp"
#include "vtwins/sparse_linear.hpp"
#include "vtwins/tree.hpp"

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

namespace vtwins {

enum class StepTwoKind { None, Linear, RegressionTree, ConditionalTree };

struct RepeatedCV {
  int folds = 10;
  int repeats = 3;
  std::vector<int> depth_grid = {1, 2, 3};
};

/// Fixed complexity: relative error improvement (regression tree), test
/// statistic (conditional tree) or lambda (linear).
struct FixedPenalty {
  double value = 0.0;
};

struct StepTwoSpec {
  StepTwoKind kind = StepTwoKind::RegressionTree;
  std::variant<RepeatedCV, FixedPenalty> tuning = RepeatedCV{};
  int min_leaf = 20;
  double alpha_split = 0.05;
  /// Minimum relative improvement of a regression-tree split under RepeatedCV.
  double complexity = 0.01;
  /// Depth limit under FixedPenalty.
  int max_depth = 5;
  /// Number of linear-model terms; negative takes it from a companion
  /// regression tree.
  int linear_k = -1;
  int lasso_folds = 10;
};

using SubgroupModel = std::variant<TreeModel, SparseLinearModel>;

std::string step2_name(StepTwoKind kind);
StepTwoKind step2_from_name(const std::string& name);
void validate_step2(const StepTwoSpec& spec);

TreeModel fit_regression_tree(const Matrix& X, const Vector& z, const StepTwoSpec& spec, std::uint64_t seed);
TreeModel fit_conditional_tree(const Matrix& X, const Vector& z, const StepTwoSpec& spec, std::uint64_t seed);

/// Fits the step-2 model named by spec.kind (which must not be None).
SubgroupModel fit_step2(const Matrix& X, const Vector& z, const StepTwoSpec& spec, std::uint64_t seed,
                        const std::vector<ColumnKind>& kinds = {});

/// Split variables of a tree or the selected terms of a linear model, sorted
/// and deduplicated.
std::vector<int> selected_variables(const SubgroupModel& model);

Vector predict_effect(const SubgroupModel& model, const Matrix& X);

/// Smallest penalty for which the step-2 model of this kind keeps no
/// covariates: lambda_max (linear), best root relative improvement
/// (regression tree) or largest root statistic (conditional tree).
double null_penalty(const Matrix& X, const Vector& z, const StepTwoSpec& spec,
                    const std::vector<ColumnKind>& kinds = {});

}  // namespace vtwins
