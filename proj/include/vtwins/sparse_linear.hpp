#pragma once

#include "vtwins/common.hpp"
#include "vtwins/dataset.hpp"

#include <cstdint>
#include <vector>

namespace vtwins {

/// Ordinary least squares on a few selected covariates.
struct SparseLinearModel {
  /// Selected variables in ranking order.
  std::vector<int> selected;
  double intercept = 0.0;
  Vector coefficients;
  /// True when fewer variables than requested ever entered the LASSO path.
  bool shortfall = false;
  int n_features = 0;

  Vector predict(const Matrix& X) const;
};

/// OLS with intercept on the given columns.
SparseLinearModel ols_refit(const Matrix& X, const Vector& z, const std::vector<int>& selected);

/// Cross-validated LASSO on (X, z); variables are ranked by the path position
/// at which they enter, then by the standardized |coefficient| at the chosen
/// lambda, then by index. The top k are refit by OLS.
SparseLinearModel fit_sparse_linear(const Matrix& X, const Vector& z, int k, int folds, std::uint64_t seed,
                                    const std::vector<ColumnKind>& kinds = {});

/// LASSO active set at a fixed penalty, refit by OLS.
SparseLinearModel fit_sparse_linear_fixed(const Matrix& X, const Vector& z, double lambda,
                                          const std::vector<ColumnKind>& kinds = {});

}  // namespace vtwins
