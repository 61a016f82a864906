#include "vtwins/lasso.hpp"
#include "vtwins/random.hpp"

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

// Columns with mean zero, population SD one and X'X = nI, so standardization
// is the identity and the solution is coordinatewise.
Matrix orthonormal_design(Index n, Index p, Rng& rng) {
  Matrix A(n, p + 1);
  A.col(0).setOnes();
  A.rightCols(p) = gaussian(n, p, rng);
  const Eigen::HouseholderQR<Matrix> qr(A);
  const Matrix Q = qr.householderQ() * Matrix::Identity(n, p + 1);
  return Q.rightCols(p) * std::sqrt(static_cast<double>(n));
}

}  // namespace

TEST_SUITE("lasso") {

TEST_CASE("soft threshold") {
  CHECK(soft_threshold(3.0, 1.0) == 2.0);
  CHECK(soft_threshold(-3.0, 1.0) == -2.0);
  CHECK(soft_threshold(0.5, 1.0) == 0.0);
  CHECK(soft_threshold(-1.0, 1.0) == 0.0);
}

TEST_CASE("orthonormal design matches the closed form") {
  Rng rng(21);
  for (int rep = 0; rep < 5; ++rep) {
    const Index n = 120, p = 8;
    const Matrix X = orthonormal_design(n, p, rng);
    Vector y = gaussian(n, 1, rng).col(0);
    y += 1.5 * X.col(0) - 0.7 * X.col(3) + 0.2 * X.col(5);
    const Vector lambdas = lasso_lambda_sequence(lasso_lambda_max(X, y), 30, 0.01);
    const LassoPath path = lasso_path(X, y, lambdas);
    const Vector yc = y.array() - y.mean();
    for (Index l = 0; l < lambdas.size(); ++l)
      for (Index j = 0; j < p; ++j) {
        const double expected = soft_threshold(X.col(j).dot(yc) / n, lambdas(l));
        CHECK(std::abs(path.beta(j, l) - expected) < 1e-8);
      }
  }
}

TEST_CASE("lambda_max agrees with a bisection on active-set emptiness") {
  Rng rng(4);
  for (int rep = 0; rep < 5; ++rep) {
    const Matrix X = gaussian(80, 12, rng);
    const Vector y = X.col(2) * 0.8 + gaussian(80, 1, rng).col(0);
    auto empty_at = [&](double lambda) {
      Vector l(1);
      l(0) = lambda;
      return lasso_path(X, y, l).beta.col(0).isZero(0.0);
    };
    double lo = 0.0, hi = 10.0;
    REQUIRE(empty_at(hi));
    for (int it = 0; it < 80; ++it) {
      const double mid = 0.5 * (lo + hi);
      (empty_at(mid) ? hi : lo) = mid;
    }
    CHECK(std::abs(hi - lasso_lambda_max(X, y)) < 1e-6);
  }
}

TEST_CASE("all coefficients vanish at lambda_max") {
  Rng rng(8);
  const Matrix X = gaussian(60, 7, rng);
  const Vector y = X.col(0) - X.col(1) + gaussian(60, 1, rng).col(0);
  Vector l(1);
  l(0) = lasso_lambda_max(X, y);
  CHECK(lasso_path(X, y, l).beta.isZero(0.0));
}

TEST_CASE("constant response gives an intercept-only fit") {
  Rng rng(1);
  const Matrix X = gaussian(50, 4, rng);
  const Vector y = Vector::Constant(50, 3.25);
  const LassoFit fit = fit_lasso(X, y, LassoSpec{}, 7);
  CHECK(fit.coefficients.isZero(0.0));
  CHECK(fit.intercept == doctest::Approx(3.25));
  const Vector pred = fit.predict(X);
  for (Index i = 0; i < pred.size(); ++i) CHECK(pred(i) == doctest::Approx(3.25));
}

TEST_CASE("KKT conditions hold for every inactive coordinate") {
  Rng rng(17);
  for (int rep = 0; rep < 20; ++rep) {
    const Index n = 100, p = 30;
    Matrix X = gaussian(n, p, rng);
    for (Index j = 0; j < p; ++j) X.col(j) = X.col(j) * (0.5 + j % 4) + Vector::Constant(n, j % 3);
    Vector y = gaussian(n, 1, rng).col(0) + 2.0 * X.col(1) - X.col(4) + 0.5 * X.col(9);
    const Vector lambdas = lasso_lambda_sequence(lasso_lambda_max(X, y), 50, 1e-3);
    const LassoPath path = lasso_path(X, y, lambdas);
    // Independent standardization with the population SD.
    Matrix Z = X.rowwise() - X.colwise().mean();
    for (Index j = 0; j < p; ++j) Z.col(j) /= std::sqrt(Z.col(j).squaredNorm() / n);
    const Vector yc = y.array() - y.mean();
    for (Index l = 0; l < lambdas.size(); ++l) {
      const Vector r = yc - Z * path.beta_std.col(l);
      for (Index j = 0; j < p; ++j) {
        if (path.beta_std(j, l) != 0.0) continue;
        CHECK(std::abs(Z.col(j).dot(r)) / n <= lambdas(l) + 1e-6);
      }
    }
  }
}

TEST_CASE("active sets mostly grow along the path") {
  Rng rng(23);
  int monotone = 0;
  const int problems = 100;
  for (int rep = 0; rep < problems; ++rep) {
    const Matrix X = gaussian(100, 20, rng);
    const Vector y = X.leftCols(3).rowwise().sum() + gaussian(100, 1, rng).col(0);
    const Vector lambdas = lasso_lambda_sequence(lasso_lambda_max(X, y), 40, 1e-2);
    const LassoPath path = lasso_path(X, y, lambdas);
    bool ok = true;
    for (Index l = 1; l < lambdas.size(); ++l) {
      const auto before = (path.beta.col(l - 1).array() != 0.0).count();
      const auto after = (path.beta.col(l).array() != 0.0).count();
      if (before > after) ok = false;
    }
    monotone += ok ? 1 : 0;
  }
  CHECK(monotone >= 95);
}

TEST_CASE("cross-validated fit invariants") {
  Rng rng(2);
  const Matrix X = gaussian(150, 10, rng);
  const Vector y = 2.0 * X.col(0) + gaussian(150, 1, rng).col(0);
  LassoSpec one_se;
  LassoSpec min_rule;
  min_rule.rule = LambdaRule::LambdaMin;
  const LassoFit a = fit_lasso(X, y, one_se, 5);
  const LassoFit b = fit_lasso(X, y, min_rule, 5);
  CHECK(a.lambda_chosen >= b.lambda_chosen);
  CHECK(a.lambda_chosen == a.lambda_path(a.chosen_index));
  CHECK(a.coefficients.allFinite());
  CHECK(a.lambda_path.size() == 100);
  CHECK(a.coefficients(0) > 1.5);

  const LassoFit again = fit_lasso(X, y, one_se, 5);
  CHECK(again.coefficients == a.coefficients);
  CHECK(again.intercept == a.intercept);
}

TEST_CASE("fit errors") {
  Rng rng(3);
  const Matrix X = gaussian(5, 2, rng);
  const Vector y = gaussian(5, 1, rng).col(0);
  CHECK_THROWS_AS(fit_lasso(X, y, LassoSpec{}, 1), Error);
  Matrix bad = gaussian(40, 2, rng);
  bad(3, 1) = std::nan("");
  CHECK_THROWS_AS(fit_lasso(bad, gaussian(40, 1, rng).col(0), LassoSpec{}, 1), Error);
}

}
