#pragma once

#include "vtwins/common.hpp"
#include "vtwins/dataset.hpp"
#include "vtwins/forest.hpp"
#include "vtwins/lasso.hpp"
#include "vtwins/mars.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <variant>
#include <vector>

namespace vtwins {

// Superlearner candidates are restricted to base learners by type, so a
// nested superlearner cannot be expressed.
using BaseLearnerSpec = std::variant<LassoSpec, ForestSpec, MarsSpec>;
using BaseLearnerFit = std::variant<LassoFit, ForestFit, MarsFit>;

struct SuperLearnerSpec {
  std::vector<BaseLearnerSpec> candidates = {LassoSpec{}, ForestSpec{}, MarsSpec{}};
  int folds = 10;
};

using RegressorSpec = std::variant<LassoSpec, ForestSpec, MarsSpec, SuperLearnerSpec>;

struct StackFit {
  std::vector<BaseLearnerFit> candidate_fits;
  /// Nonnegative, sums to one.
  Vector weights;
  /// Cross-validated MSE of each candidate.
  Vector cv_risk;
  /// Cross-validated MSE of the weighted combination.
  double stack_risk = 0.0;
  /// n x K matrix of out-of-fold predictions.
  Matrix cv_predictions;

  Vector predict(const Matrix& X) const;
};

/// A regression function supplied by the caller, used to inject known
/// conditional means in place of a learned model.
struct FunctionFit {
  std::function<Vector(const Matrix&)> fn;
  int n_features = 0;
};

struct FittedRegressor {
  std::variant<LassoFit, ForestFit, MarsFit, StackFit, FunctionFit> model;
  int n_features = 0;

  Vector predict(const Matrix& X) const;
};

std::string regressor_name(const RegressorSpec& spec);
/// Default spec for "lasso", "forest", "mars" or "superlearner".
RegressorSpec regressor_from_name(const std::string& name);
/// Throws Error when a spec invariant is violated.
void validate_spec(const RegressorSpec& spec);

Vector predict_base(const BaseLearnerFit& fit, const Matrix& X);
BaseLearnerFit fit_base(const BaseLearnerSpec& spec, const Matrix& X, const Vector& y, std::uint64_t seed,
                        const std::vector<ColumnKind>& kinds);

/// Weights on the probability simplex minimizing ||y - Z w||^2, solved
/// exactly by enumerating supports (K is small).
Vector simplex_least_squares(const Matrix& Z, const Vector& y);

StackFit fit_superlearner(const Matrix& X, const Vector& y, const SuperLearnerSpec& spec, std::uint64_t seed,
                          const std::vector<ColumnKind>& kinds = {});

FittedRegressor fit_regressor(const RegressorSpec& spec, const Matrix& X, const Vector& y, std::uint64_t seed,
                              const std::vector<ColumnKind>& kinds = {});

FittedRegressor function_regressor(std::function<Vector(const Matrix&)> fn, int n_features);

}  // namespace vtwins
