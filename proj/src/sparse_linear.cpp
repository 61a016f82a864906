#include "vtwins/sparse_linear.hpp"

#include "vtwins/lasso.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace vtwins {

Vector SparseLinearModel::predict(const Matrix& X) const {
  require(X.cols() == n_features, "sparse linear predict: column mismatch");
  Vector out = Vector::Constant(X.rows(), intercept);
  for (std::size_t k = 0; k < selected.size(); ++k) out += coefficients(static_cast<Index>(k)) * X.col(selected[k]);
  return out;
}

SparseLinearModel ols_refit(const Matrix& X, const Vector& z, const std::vector<int>& selected) {
  require(X.rows() == z.size(), "ols: row mismatch");
  const Index n = X.rows();
  const auto k = static_cast<Index>(selected.size());
  require(n > k + 1, "ols: need more rows than selected variables plus one");
  SparseLinearModel model;
  model.selected = selected;
  model.n_features = static_cast<int>(X.cols());
  Matrix A(n, k + 1);
  A.col(0).setOnes();
  for (Index j = 0; j < k; ++j) A.col(j + 1) = X.col(selected[static_cast<std::size_t>(j)]);
  const Vector b = A.colPivHouseholderQr().solve(z);
  model.intercept = b(0);
  model.coefficients = b.tail(k);
  require(model.coefficients.allFinite() && std::isfinite(model.intercept), "ols: non-finite coefficients");
  return model;
}

SparseLinearModel fit_sparse_linear(const Matrix& X, const Vector& z, int k, int folds, std::uint64_t seed,
                                    const std::vector<ColumnKind>& kinds) {
  require(k >= 0 && k <= X.cols(), "sparse linear: k must be in [0, p]");
  require(X.rows() > k + 1, "sparse linear: need n > k + 1");
  if (k == 0) return ols_refit(X, z, {});
  LassoSpec spec;
  spec.folds = folds;
  const LassoFit fit = fit_lasso(X, z, spec, seed, kinds);
  const std::vector<int> entry = fit.path.entry_index();
  std::vector<int> entered;
  for (std::size_t j = 0; j < entry.size(); ++j)
    if (entry[j] >= 0) entered.push_back(static_cast<int>(j));
  std::sort(entered.begin(), entered.end(), [&](int a, int b) {
    const auto ua = static_cast<std::size_t>(a), ub = static_cast<std::size_t>(b);
    if (entry[ua] != entry[ub]) return entry[ua] < entry[ub];
    const double ca = std::abs(fit.path.beta_std(a, fit.chosen_index));
    const double cb = std::abs(fit.path.beta_std(b, fit.chosen_index));
    if (ca != cb) return ca > cb;
    return a < b;
  });
  const bool shortfall = static_cast<int>(entered.size()) < k;
  if (!shortfall) entered.resize(static_cast<std::size_t>(k));
  SparseLinearModel model = ols_refit(X, z, entered);
  model.shortfall = shortfall;
  return model;
}

SparseLinearModel fit_sparse_linear_fixed(const Matrix& X, const Vector& z, double lambda,
                                          const std::vector<ColumnKind>& kinds) {
  require(lambda >= 0.0 && std::isfinite(lambda), "sparse linear: penalty must be finite and >= 0");
  const double lmax = lasso_lambda_max(X, z, kinds);
  std::vector<int> active;
  if (lambda < lmax) {
    Vector lambdas = lasso_lambda_sequence(lmax, 20, std::max(lambda / lmax, 1e-6));
    lambdas(lambdas.size() - 1) = lambda;
    const LassoPath path = lasso_path(X, z, lambdas, kinds);
    const Index last = path.beta.cols() - 1;
    for (Index j = 0; j < path.beta.rows(); ++j)
      if (path.beta(j, last) != 0.0) active.push_back(static_cast<int>(j));
  }
  if (X.rows() <= static_cast<Index>(active.size()) + 1) active.resize(static_cast<std::size_t>(X.rows() - 2));
  return ols_refit(X, z, active);
}

}  // namespace vtwins
