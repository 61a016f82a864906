#include "vtwins/random.hpp"
#include "vtwins/regressor.hpp"

#include <limits>

namespace vtwins {

Vector simplex_least_squares(const Matrix& Z, const Vector& y) {
  const auto K = static_cast<int>(Z.cols());
  require(K >= 1, "simplex weights: no candidates");
  require(K <= 20, "simplex weights: too many candidates for exact enumeration");
  const Matrix gram = Z.transpose() * Z;
  const Vector zty = Z.transpose() * y;
  Vector best = Vector::Zero(K);
  double best_risk = std::numeric_limits<double>::infinity();
  for (unsigned mask = 1; mask < (1u << K); ++mask) {
    std::vector<int> support;
    for (int k = 0; k < K; ++k)
      if (mask & (1u << k)) support.push_back(k);
    const auto s = static_cast<Index>(support.size());
    // Equality-constrained least squares on the support via its KKT system.
    Matrix kkt = Matrix::Zero(s + 1, s + 1);
    Vector rhs(s + 1);
    for (Index a = 0; a < s; ++a) {
      for (Index b = 0; b < s; ++b) kkt(a, b) = gram(support[a], support[b]);
      kkt(a, s) = 1.0;
      kkt(s, a) = 1.0;
      rhs(a) = zty(support[a]);
    }
    rhs(s) = 1.0;
    Eigen::FullPivLU<Matrix> lu(kkt);
    if (!lu.isInvertible()) continue;
    const Vector sol = lu.solve(rhs);
    bool feasible = true;
    for (Index a = 0; a < s; ++a) feasible = feasible && sol(a) >= -1e-12;
    if (!feasible) continue;
    Vector w = Vector::Zero(K);
    for (Index a = 0; a < s; ++a) w(support[a]) = std::max(0.0, sol(a));
    w /= w.sum();
    const double risk = (y - Z * w).squaredNorm();
    if (risk < best_risk * (1.0 - 1e-14)) {
      best_risk = risk;
      best = w;
    }
  }
  return best;
}

StackFit fit_superlearner(const Matrix& X, const Vector& y, const SuperLearnerSpec& spec, std::uint64_t seed,
                          const std::vector<ColumnKind>& kinds) {
  require(spec.folds >= 2, "superlearner: folds must be at least 2");
  require(!spec.candidates.empty(), "superlearner: no candidates");
  const Index n = X.rows();
  require(n >= spec.folds, "superlearner: fewer rows than folds");
  const auto K = static_cast<Index>(spec.candidates.size());

  Rng rng(derive_seed(seed, {0}));
  const std::vector<int> fold = fold_assignment(static_cast<int>(n), spec.folds, rng);
  StackFit stack;
  stack.cv_predictions = Matrix::Zero(n, K);
  for (int f = 0; f < spec.folds; ++f) {
    std::vector<int> train, test;
    for (Index i = 0; i < n; ++i) (fold[static_cast<std::size_t>(i)] == f ? test : train).push_back(static_cast<int>(i));
    Matrix Xtr(static_cast<Index>(train.size()), X.cols()), Xte(static_cast<Index>(test.size()), X.cols());
    Vector ytr(static_cast<Index>(train.size()));
    for (std::size_t r = 0; r < train.size(); ++r) {
      Xtr.row(static_cast<Index>(r)) = X.row(train[r]);
      ytr(static_cast<Index>(r)) = y(train[r]);
    }
    for (std::size_t r = 0; r < test.size(); ++r) Xte.row(static_cast<Index>(r)) = X.row(test[r]);
    for (Index k = 0; k < K; ++k) {
      BaseLearnerFit model;
      try {
        model = fit_base(spec.candidates[static_cast<std::size_t>(k)], Xtr, ytr,
                         derive_seed(seed, {1, static_cast<std::uint64_t>(f), static_cast<std::uint64_t>(k)}), kinds);
      } catch (const Error& e) {
        throw Error("superlearner: candidate " + std::to_string(k) + " failed on fold " + std::to_string(f) + ": " +
                    e.what());
      }
      const Vector pred = predict_base(model, Xte);
      for (std::size_t r = 0; r < test.size(); ++r) stack.cv_predictions(test[r], k) = pred(static_cast<Index>(r));
    }
  }

  stack.cv_risk = (stack.cv_predictions.colwise() - y).array().square().colwise().mean().transpose();
  stack.weights = simplex_least_squares(stack.cv_predictions, y);
  stack.stack_risk = (stack.cv_predictions * stack.weights - y).squaredNorm() / static_cast<double>(n);
  for (Index k = 0; k < K; ++k) {
    stack.candidate_fits.push_back(fit_base(spec.candidates[static_cast<std::size_t>(k)], X, y,
                                            derive_seed(seed, {2, static_cast<std::uint64_t>(k)}), kinds));
  }
  return stack;
}

Vector StackFit::predict(const Matrix& X) const {
  Vector out = Vector::Zero(X.rows());
  for (std::size_t k = 0; k < candidate_fits.size(); ++k) {
    const double w = weights(static_cast<Index>(k));
    if (w == 0.0) continue;
    out += w * predict_base(candidate_fits[k], X);
  }
  return out;
}

}  // namespace vtwins
