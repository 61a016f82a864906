#include "vtwins/random.hpp"
#include "vtwins/regressor.hpp"

#include <doctest.h>

#include <cmath>

using namespace vtwins;

namespace {

Matrix gaussian(Index n, Index p, Rng& rng) {
  Matrix X(n, p);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < p; ++j) X(i, j) = rng.normal();
  return X;
}

double risk(const Matrix& Z, const Vector& y, const Vector& w) {
  return (y - Z * w).squaredNorm() / static_cast<double>(y.size());
}

// Grid search over the simplex with step 1/steps.
double grid_oracle(const Matrix& Z, const Vector& y, int steps) {
  double best = std::numeric_limits<double>::infinity();
  const auto K = Z.cols();
  if (K == 2) {
    for (int a = 0; a <= steps; ++a) {
      Vector w(2);
      w << a / static_cast<double>(steps), 1.0 - a / static_cast<double>(steps);
      best = std::min(best, risk(Z, y, w));
    }
  } else {
    for (int a = 0; a <= steps; ++a)
      for (int b = 0; a + b <= steps; ++b) {
        Vector w(3);
        w << a / static_cast<double>(steps), b / static_cast<double>(steps), (steps - a - b) / static_cast<double>(steps);
        best = std::min(best, risk(Z, y, w));
      }
  }
  return best;
}

ForestSpec quick_forest() {
  ForestSpec f;
  f.n_trees = 50;
  f.tune_trees = 20;
  f.nodesize_grid = {5};
  return f;
}

}  // namespace

TEST_SUITE("superlearner") {

TEST_CASE("simplex least squares matches a grid search") {
  Rng rng(1);
  for (int rep = 0; rep < 30; ++rep) {
    const Index K = rep % 2 == 0 ? 2 : 3;
    const Matrix Z = gaussian(50, K, rng);
    const Vector y = Z * Vector::LinSpaced(K, -0.5, 1.0) + gaussian(50, 1, rng).col(0);
    const Vector w = simplex_least_squares(Z, y);
    CHECK(std::abs(w.sum() - 1.0) < 1e-10);
    CHECK(w.minCoeff() >= 0.0);
    const double oracle = grid_oracle(Z, y, K == 2 ? 1000 : 300);
    CHECK(risk(Z, y, w) <= oracle + 1e-12);
    CHECK(risk(Z, y, w) >= oracle - 0.01);
  }
}

TEST_CASE("single candidate gets all the weight") {
  Rng rng(2);
  const Matrix X = gaussian(60, 3, rng);
  const Vector y = X.col(0) + gaussian(60, 1, rng).col(0);
  SuperLearnerSpec spec;
  spec.candidates = {LassoSpec{}};
  spec.folds = 5;
  const StackFit fit = fit_superlearner(X, y, spec, 3);
  REQUIRE(fit.weights.size() == 1);
  CHECK(fit.weights(0) == 1.0);
}

TEST_CASE("identical candidates") {
  Rng rng(3);
  const Matrix X = gaussian(80, 4, rng);
  const Vector y = X.col(1) + gaussian(80, 1, rng).col(0);
  SuperLearnerSpec spec;
  spec.candidates = {MarsSpec{}, MarsSpec{}};
  spec.folds = 5;
  const StackFit fit = fit_superlearner(X, y, spec, 4);
  CHECK(fit.cv_risk(0) == fit.cv_risk(1));
  CHECK(std::abs(fit.weights.sum() - 1.0) < 1e-10);
  CHECK(fit.weights.minCoeff() >= 0.0);
  const Vector a = predict_base(fit.candidate_fits[0], X);
  CHECK((fit.predict(X) - a).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("LASSO dominates on a noiseless linear response") {
  Rng rng(4);
  const Matrix X = gaussian(400, 5, rng);
  Vector beta(5);
  beta << 1.0, -2.0, 0.5, 0.0, 0.0;
  const Vector y = X * beta;
  SuperLearnerSpec spec;
  spec.candidates = {LassoSpec{}, quick_forest()};
  const StackFit fit = fit_superlearner(X, y, spec, 5);
  CHECK(fit.weights(0) >= 0.9);
  const double oracle = grid_oracle(fit.cv_predictions, y, 1000);
  CHECK(std::abs(risk(fit.cv_predictions, y, fit.weights) - oracle) <= 0.01);
  CHECK(fit.stack_risk <= fit.cv_risk.minCoeff() + 1e-9);
}

TEST_CASE("stack prediction is the weighted candidate sum") {
  Rng rng(5);
  const Matrix X = gaussian(120, 4, rng);
  Vector y(120);
  for (Index i = 0; i < 120; ++i) y(i) = std::abs(X(i, 0)) + X(i, 1) + 0.3 * rng.normal();
  SuperLearnerSpec spec;
  spec.candidates = {LassoSpec{}, quick_forest(), MarsSpec{}};
  spec.folds = 5;
  const StackFit fit = fit_superlearner(X, y, spec, 6);
  const Matrix test = gaussian(30, 4, rng);
  Vector manual = Vector::Zero(30);
  for (std::size_t k = 0; k < fit.candidate_fits.size(); ++k)
    manual += fit.weights(static_cast<Index>(k)) * predict_base(fit.candidate_fits[k], test);
  CHECK((fit.predict(test) - manual).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(fit.stack_risk <= fit.cv_risk.minCoeff() + 1e-9);
  CHECK(std::abs(fit.weights.sum() - 1.0) < 1e-10);
}

TEST_CASE("regressor facade") {
  CHECK(regressor_name(regressor_from_name("lasso")) == "lasso");
  CHECK(regressor_name(regressor_from_name("forest")) == "forest");
  CHECK(regressor_name(regressor_from_name("mars")) == "mars");
  CHECK(regressor_name(regressor_from_name("superlearner")) == "superlearner");
  CHECK_THROWS_AS(regressor_from_name("boosting"), Error);

  LassoSpec bad;
  bad.folds = 1;
  CHECK_THROWS_AS(validate_spec(bad), Error);
  SuperLearnerSpec empty;
  empty.candidates.clear();
  CHECK_THROWS_AS(validate_spec(empty), Error);
  MarsSpec m;
  m.max_terms = 0;
  CHECK_THROWS_AS(validate_spec(m), Error);

  Rng rng(6);
  const Matrix X = gaussian(40, 2, rng);
  const FittedRegressor f = function_regressor([](const Matrix& A) { Vector v = A.col(0); return v; }, 2);
  CHECK(f.predict(X) == X.col(0));
  const Matrix wrong = gaussian(5, 3, rng);
  CHECK_THROWS_AS(f.predict(wrong), Error);

  const Vector zero_y = Vector::Constant(40, 2.0);
  const FittedRegressor lasso = fit_regressor(LassoSpec{}, X, zero_y, 1);
  CHECK((lasso.predict(X).array() - 2.0).abs().maxCoeff() < 1e-12);
}

}
