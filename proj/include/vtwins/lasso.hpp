#pragma once

#include "vtwins/common.hpp"
#include "vtwins/dataset.hpp"

#include <cstdint>
#include <vector>

namespace vtwins {

enum class LambdaRule { LambdaMin, Lambda1SE };

struct LassoSpec {
  int folds = 10;
  LambdaRule rule = LambdaRule::Lambda1SE;
  int n_lambda = 100;
  /// Smallest lambda as a fraction of lambda_max; <= 0 picks 1e-3 when n > p
  /// and 1e-2 otherwise.
  double lambda_min_ratio = 0.0;
};

/// Coefficients along a decreasing lambda sequence. `beta` is on the original
/// covariate scale, `beta_std` on the internal standardized scale.
struct LassoPath {
  Vector lambdas;
  Vector intercepts;
  Matrix beta;
  Matrix beta_std;

  /// First path position at which each coefficient is nonzero, -1 if never.
  std::vector<int> entry_index() const;
};

struct LassoFit {
  double intercept = 0.0;
  Vector coefficients;
  Vector lambda_path;
  double lambda_chosen = 0.0;
  int chosen_index = 0;
  Vector cv_mean;
  Vector cv_se;
  StandardizationParams standardization;
  LassoPath path;

  Vector predict(const Matrix& X) const;
};

/// max_j |<x_j, y - mean(y)>| / n over standardized columns: the smallest
/// penalty at which every coefficient is zero.
double lasso_lambda_max(const Matrix& X, const Vector& y, const std::vector<ColumnKind>& kinds = {});

/// Fits the full path for the given lambdas (decreasing) with warm starts.
LassoPath lasso_path(const Matrix& X, const Vector& y, const Vector& lambdas,
                     const std::vector<ColumnKind>& kinds = {});

/// Log-spaced sequence from lambda_max down to ratio * lambda_max.
Vector lasso_lambda_sequence(double lambda_max, int count, double ratio);

/// Cross-validated LASSO; the chosen lambda follows spec.rule.
LassoFit fit_lasso(const Matrix& X, const Vector& y, const LassoSpec& spec, std::uint64_t seed,
                   const std::vector<ColumnKind>& kinds = {});

/// Soft-thresholding operator S(v, t) = sign(v) max(|v| - t, 0).
inline double soft_threshold(double v, double t) {
  if (v > t) return v - t;
  if (v < -t) return v + t;
  return 0.0;
}

}  // namespace vtwins
