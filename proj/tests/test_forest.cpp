#include "vtwins/forest.hpp"
#include "vtwins/random.hpp"

#include <doctest.h>

#include <cmath>
#include <set>

using namespace vtwins;

namespace {

Matrix gaussian(Index n, Index p, Rng& rng) {
  Matrix X(n, p);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < p; ++j) X(i, j) = rng.normal();
  return X;
}

ForestSpec small_spec() {
  ForestSpec s;
  s.n_trees = 60;
  s.tune_trees = 30;
  return s;
}

}  // namespace

TEST_SUITE("forest") {

TEST_CASE("default mtry grid") {
  CHECK(default_mtry_grid(110) == std::vector<int>{36, 10, 73});
  for (int m : default_mtry_grid(1)) CHECK(m == 1);
  for (int p = 1; p < 30; ++p)
    for (int m : default_mtry_grid(p)) CHECK((m >= 1 && m <= p));
}

TEST_CASE("nodesize at least n gives root leaves") {
  Rng rng(1);
  const Matrix X = gaussian(30, 3, rng);
  const Vector y = gaussian(30, 1, rng).col(0);
  ForestSpec spec;
  spec.n_trees = 20;
  spec.nodesize_grid = {30};
  spec.mtry_grid = {2};
  const ForestFit fit = fit_forest(X, y, spec, 3);
  for (const auto& t : fit.trees) CHECK(t.tree.nodes.size() == 1);
  // Each root predicts its bootstrap mean; the forest average is close to ybar.
  const Vector pred = fit.predict(X);
  CHECK(pred.maxCoeff() - pred.minCoeff() < 1e-12);
}

TEST_CASE("step function is learned out of bag") {
  Rng rng(2);
  const Matrix X = gaussian(200, 5, rng);
  Vector y(200);
  for (Index i = 0; i < 200; ++i) y(i) = X(i, 0) > 0 ? 1.0 : 0.0;
  const ForestFit fit = fit_forest(X, y, ForestSpec{}, 9);
  CHECK(fit.oob_mse < 0.05);
  CHECK(fit.grid.size() == 9);
  CHECK(fit.trees.size() == 500);
}

TEST_CASE("a single fully grown tree interpolates its bootstrap rows") {
  Rng rng(3);
  const Matrix X = gaussian(80, 4, rng);
  const Vector y = X.col(0) + X.col(1).array().square().matrix();
  ForestSpec spec;
  spec.n_trees = 1;
  spec.mtry_grid = {4};
  spec.nodesize_grid = {1};
  const ForestFit fit = fit_forest(X, y, spec, 4);
  const auto& tree = fit.trees.front();
  const std::set<int> in_bag(tree.bootstrap_rows.begin(), tree.bootstrap_rows.end());
  for (int i : in_bag) CHECK(tree.tree.predict_row(X, i) == y(i));
  const Vector pred = fit.predict(X);
  for (int i : in_bag) CHECK(pred(i) == y(i));
}

TEST_CASE("leaves partition the covariate space") {
  Rng rng(4);
  const Matrix X = gaussian(120, 6, rng);
  const Vector y = X.col(2) + 0.3 * gaussian(120, 1, rng).col(0);
  const ForestFit fit = fit_forest(X, y, small_spec(), 5);
  CHECK((fit.mtry >= 1 && fit.mtry <= 6));
  const Matrix probe = gaussian(200, 6, rng);
  for (const auto& t : fit.trees) {
    const auto& nodes = t.tree.nodes;
    for (Index i = 0; i < probe.rows(); ++i) {
      const int leaf = t.tree.leaf_of(probe, i);
      REQUIRE((leaf >= 0 && leaf < static_cast<int>(nodes.size())));
      CHECK(nodes[static_cast<std::size_t>(leaf)].var < 0);
    }
    // Every node except the root has exactly one parent.
    std::vector<int> parents(nodes.size(), 0);
    for (const auto& node : nodes)
      if (node.var >= 0) {
        ++parents[static_cast<std::size_t>(node.left)];
        ++parents[static_cast<std::size_t>(node.right)];
      }
    CHECK(parents[0] == 0);
    for (std::size_t k = 1; k < nodes.size(); ++k) CHECK(parents[k] == 1);
  }
}

TEST_CASE("predictions are invariant to a monotone transform of one covariate") {
  Rng rng(5);
  Matrix X = gaussian(150, 5, rng);
  const Vector y = X.col(1) + X.col(3).cwiseAbs() + 0.5 * gaussian(150, 1, rng).col(0);
  Matrix test = gaussian(40, 5, rng);
  const ForestFit base = fit_forest(X, y, small_spec(), 77);
  const Vector p_base = base.predict(test);
  Matrix Xt = X, testt = test;
  Xt.col(3) = X.col(3).array().exp() * 2.0 + 1.0;
  testt.col(3) = test.col(3).array().exp() * 2.0 + 1.0;
  const ForestFit moved = fit_forest(Xt, y, small_spec(), 77);
  CHECK(moved.mtry == base.mtry);
  CHECK(moved.nodesize == base.nodesize);
  CHECK(moved.predict(testt) == p_base);
  CHECK(moved.oob_mse == base.oob_mse);
}

TEST_CASE("fits are reproducible from the seed") {
  Rng rng(6);
  const Matrix X = gaussian(90, 4, rng);
  const Vector y = gaussian(90, 1, rng).col(0);
  const ForestFit a = fit_forest(X, y, small_spec(), 11);
  const ForestFit b = fit_forest(X, y, small_spec(), 11);
  CHECK(a.predict(X) == b.predict(X));
  const ForestFit c = fit_forest(X, y, small_spec(), 12);
  CHECK(c.predict(X) != a.predict(X));
}

TEST_CASE("forest errors") {
  Matrix X(1, 2);
  X << 1, 2;
  CHECK_THROWS_AS(fit_forest(X, Vector::Ones(1), ForestSpec{}, 1), Error);
  Rng rng(1);
  const Matrix Y = gaussian(10, 2, rng);
  ForestSpec empty;
  empty.nodesize_grid.clear();
  CHECK_THROWS_AS(fit_forest(Y, Vector::Ones(10), empty, 1), Error);
}

}
