#include "vtwins/random.hpp"
#include "vtwins/simgen.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <numeric>

using namespace vtwins;

namespace {

double corr(const Vector& a, const Vector& b) {
  const Vector ac = a.array() - a.mean();
  const Vector bc = b.array() - b.mean();
  return ac.dot(bc) / std::sqrt(ac.squaredNorm() * bc.squaredNorm());
}

ScenarioConfig config(Linearity l, Structure s, bool teh, std::uint64_t seed) {
  ScenarioConfig c;
  c.linearity = l;
  c.structure = s;
  c.teh = teh;
  c.seed = seed;
  return c;
}

// Row at the population means with chosen covariates moved off them.
Matrix row_at_mu(const Vector& mu) {
  Matrix X = Matrix::Zero(1, kCovariates);
  X.leftCols(kContinuousCovariates) = mu.transpose();
  return X;
}

}  // namespace

TEST_SUITE("simgen") {

TEST_CASE("covariate layout and determinism") {
  const auto a = draw_covariates(Structure::Regular, 50, 3);
  CHECK(a.X.cols() == 110);
  CHECK(a.columns.size() == 110);
  CHECK(a.mu.size() == 100);
  CHECK(a.columns[99].kind == ColumnKind::Continuous);
  CHECK(a.columns[100].kind == ColumnKind::Binary);
  for (Index i = 0; i < 50; ++i)
    for (Index j = 100; j < 110; ++j) CHECK((a.X(i, j) == 0.0 || a.X(i, j) == 1.0));
  const auto b = draw_covariates(Structure::Regular, 50, 3);
  CHECK(a.X == b.X);
  CHECK(a.mu == b.mu);
}

TEST_CASE("correlated block") {
  const auto d = draw_covariates(Structure::Correlated, 10000, 8);
  CHECK(std::abs(corr(d.X.col(0), d.X.col(1)) - 0.7) <= 0.03);
  CHECK(std::abs(corr(d.X.col(2), d.X.col(3)) - 0.7) <= 0.03);
  CHECK(std::abs(corr(d.X.col(0), d.X.col(4))) <= 0.03);
  const auto r = draw_covariates(Structure::Regular, 10000, 8);
  CHECK(std::abs(corr(r.X.col(0), r.X.col(1))) <= 0.03);
  // Binary columns have mean 0.7.
  CHECK(std::abs(d.X.col(105).mean() - 0.7) <= 0.02);
}

TEST_CASE("fair treatment coin") {
  const auto T = assign_treatment(10000, 5);
  const double mean = std::accumulate(T.begin(), T.end(), 0.0) / 10000.0;
  CHECK(std::abs(mean - 0.5) <= 0.02);
  for (int t : T) CHECK((t == 0 || t == 1));
  CHECK(assign_treatment(10000, 5) == T);
}

TEST_CASE("linear effect is the coefficient difference") {
  const auto d = draw_covariates(Structure::Regular, 300, 2);
  const auto [m0, m1] = conditional_means(Linearity::Linear, true, d.X, d.mu);
  for (Index i = 0; i < 300; ++i) {
    const double expected = d.X(i, 0) + d.X(i, 16) + d.X(i, 17) + d.X(i, 18) + d.X(i, 19) + d.X(i, 102) +
                            d.X(i, 103) + d.X(i, 104);
    CHECK(std::abs(m1(i) - m0(i) - expected) < 1e-12);
    // Control mean: ones on covariates 2..16 and 101, 102 (1-based).
    double y0 = d.X(i, 100) + d.X(i, 101);
    for (Index j = 1; j <= 15; ++j) y0 += d.X(i, j);
    CHECK(std::abs(m0(i) - y0) < 1e-12);
  }
  const auto [n0, n1] = conditional_means(Linearity::Linear, false, d.X, d.mu);
  CHECK(((n1 - n0).array() - 2.0).abs().maxCoeff() < 1e-12);
}

TEST_CASE("nonlinear cells") {
  const auto d = draw_covariates(Structure::Regular, 10, 4);
  Matrix X = row_at_mu(d.mu);
  X(0, 0) = d.mu(0) + 1.0;
  X(0, 1) = d.mu(1) - 1.0;
  auto [a0, a1] = conditional_means(Linearity::Nonlinear, true, X, d.mu);
  CHECK(a1(0) - a0(0) == -3.0);
  for (double x2 : {-1.0, 1.0}) {
    X = row_at_mu(d.mu);
    X(0, 0) = d.mu(0) - 1.0;
    X(0, 4) = d.mu(4) + 1.0;
    X(0, 1) = d.mu(1) + x2;
    auto [b0, b1] = conditional_means(Linearity::Nonlinear, true, X, d.mu);
    CHECK(b1(0) - b0(0) == 0.0);
  }
  const auto [c0, c1] = conditional_means(Linearity::Nonlinear, false, d.X, d.mu);
  CHECK(((c1 - c0).array() - 2.0).abs().maxCoeff() == 0.0);
}

TEST_CASE("true predictive sets") {
  CHECK(true_predictive_set(config(Linearity::Linear, Structure::Regular, true, 0)) ==
        std::vector<int>{0, 16, 17, 18, 19, 102, 103, 104});
  CHECK(true_predictive_set(config(Linearity::Nonlinear, Structure::Regular, true, 0)) == std::vector<int>{0, 1, 4});
  CHECK(true_predictive_set(config(Linearity::Linear, Structure::Regular, false, 0)).empty());
  // The linear set agrees with the columns that move the effect.
  const auto d = draw_covariates(Structure::Regular, 5, 6);
  const auto [m0, m1] = conditional_means(Linearity::Linear, true, d.X, d.mu);
  std::vector<int> moved;
  for (int j = 0; j < kCovariates; ++j) {
    Matrix bumped = d.X;
    bumped.col(j).array() += 1.0;
    const auto [b0, b1] = conditional_means(Linearity::Linear, true, bumped, d.mu);
    if (std::abs((b1 - b0)(0) - (m1 - m0)(0)) > 1e-9) moved.push_back(j);
  }
  CHECK(moved == true_predictive_set(config(Linearity::Linear, Structure::Regular, true, 0)));
}

TEST_CASE("generated scenarios satisfy their invariants") {
  for (auto l : {Linearity::Linear, Linearity::Nonlinear})
    for (auto s : {Structure::Regular, Structure::Correlated, Structure::SelectionBias})
      for (bool teh : {true, false}) {
        ScenarioConfig c = config(l, s, teh, 31);
        c.n_test = 500;
        const SimulatedData sim = generate(c);
        CHECK(sim.train.rows() == 600);
        CHECK(sim.test.rows() == 500);
        CHECK(sim.train.cols() == 110);
        for (const auto* part : {&sim.train, &sim.test}) {
          const RowTruth& truth = part == &sim.train ? sim.train_truth : sim.test_truth;
          for (Index i = 0; i < part->rows(); ++i) {
            const int t = part->T[static_cast<std::size_t>(i)];
            CHECK(part->Y(i) == (t ? truth.y1(i) : truth.y0(i)));
            CHECK(truth.z_true(i) == truth.y1_mean(i) - truth.y0_mean(i));
          }
          if (!teh) {
            CHECK((truth.z_true.array() - 2.0).abs().maxCoeff() < 1e-12);
            for (int a : truth.optimal_arm_noiseless) CHECK(a == 1);
          }
        }
        CHECK(sim.predictive_set.empty() == !teh);
        const SimulatedData again = generate(c);
        CHECK(again.train.X == sim.train.X);
        CHECK(again.train.Y == sim.train.Y);
        CHECK(again.test_truth.y1 == sim.test_truth.y1);
      }
}

TEST_CASE("true effect does not depend on the noise seed") {
  const auto d = draw_covariates(Structure::Regular, 200, 9);
  for (auto l : {Linearity::Linear, Linearity::Nonlinear}) {
    const RowTruth a = attach_outcomes(l, true, d.X, d.mu, 1);
    const RowTruth b = attach_outcomes(l, true, d.X, d.mu, 2);
    CHECK(a.z_true == b.z_true);
    CHECK(a.y0 != b.y0);
  }
}

TEST_CASE("noise scales") {
  const auto d = draw_covariates(Structure::Regular, 20000, 10);
  const RowTruth lin = attach_outcomes_linear(d.X, true, 11);
  const RowTruth non = attach_outcomes_nonlinear(d.X, d.mu, true, 11);
  auto sd = [](const Vector& v) { return std::sqrt((v.array() - v.mean()).square().mean()); };
  CHECK(std::abs(sd(lin.y0 - lin.y0_mean) - kLinearNoiseSd) < 0.05);
  CHECK(std::abs(sd(non.y1 - non.y1_mean) - kNonlinearNoiseSd) < 0.02);
}

TEST_CASE("selection-bias sampler") {
  const auto d = draw_covariates(Structure::Regular, 1000, 12);
  const Vector S = selection_score(Linearity::Linear, d.X);
  for (Index i = 0; i < 5; ++i) CHECK(S(i) == d.X(i, 14) + d.X(i, 15) + d.X(i, 16) + d.X(i, 17));
  std::vector<int> candidates(1000);
  std::iota(candidates.begin(), candidates.end(), 0);
  const auto rows = selection_bias_sample(S, candidates, 200, 13);
  CHECK(rows.size() == 200);
  std::vector<double> sorted(S.data(), S.data() + S.size());
  std::sort(sorted.begin(), sorted.end());
  const double median_cut = sorted[499];
  int low = 0;
  double mean_train = 0.0;
  for (int r : rows) {
    low += S(r) <= median_cut ? 1 : 0;
    mean_train += S(r) / 200.0;
  }
  CHECK(low == 50);
  CHECK(mean_train > S.mean());
  CHECK_THROWS_AS(selection_bias_sample(Vector::Ones(1000), candidates, 200, 1), Error);
  CHECK_THROWS_AS(selection_bias_sample(S, std::vector<int>(candidates.begin(), candidates.begin() + 100), 200, 1),
                  Error);

  const SimulatedData sim = generate(config(Linearity::Nonlinear, Structure::SelectionBias, true, 14));
  const Vector train_s = selection_score(Linearity::Nonlinear, sim.train.X);
  const Vector test_s = selection_score(Linearity::Nonlinear, sim.test.X);
  CHECK(train_s.mean() > test_s.mean());
}

TEST_CASE("simulation files") {
  ScenarioConfig c = config(Linearity::Linear, Structure::Regular, true, 15);
  c.n_train = 50;
  c.n_test = 20;
  const auto dir = std::filesystem::temp_directory_path() / "vtwins_sim";
  write_simulation(generate(c), dir.string());
  for (const char* f : {"train.csv", "test.csv", "train_truth.csv", "test_truth.csv"})
    CHECK(std::filesystem::exists(dir / f));
}

TEST_CASE("scenario names") {
  CHECK(config(Linearity::Nonlinear, Structure::SelectionBias, false, 0).name() == "nonlinear-selection_bias-noteh-n600");
  CHECK(structure_from_name("correlated") == Structure::Correlated);
  CHECK(linearity_from_name("linear") == Linearity::Linear);
  CHECK_THROWS_AS(linearity_from_name("cubic"), Error);
}

}
