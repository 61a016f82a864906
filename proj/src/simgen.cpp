#include "vtwins/simgen.hpp"

#include "vtwins/random.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <numeric>

namespace vtwins {

namespace {

enum Stream : std::uint64_t { kMu = 1, kContinuous, kBinary, kTreatment, kNoise0, kNoise1, kSampling };

}  // namespace

std::string linearity_name(Linearity l) { return l == Linearity::Linear ? "linear" : "nonlinear"; }

std::string structure_name(Structure s) {
  switch (s) {
    case Structure::Regular: return "regular";
    case Structure::Correlated: return "correlated";
    case Structure::SelectionBias: return "selection_bias";
  }
  return "regular";
}

Linearity linearity_from_name(const std::string& name) {
  if (name == "linear") return Linearity::Linear;
  if (name == "nonlinear") return Linearity::Nonlinear;
  throw Error("unknown linearity: " + name);
}

Structure structure_from_name(const std::string& name) {
  if (name == "regular") return Structure::Regular;
  if (name == "correlated") return Structure::Correlated;
  if (name == "selection_bias" || name == "selection-bias") return Structure::SelectionBias;
  throw Error("unknown structure: " + name);
}

std::string ScenarioConfig::name() const {
  return linearity_name(linearity) + "-" + structure_name(structure) + (teh ? "-teh" : "-noteh") + "-n" +
         std::to_string(n_train);
}

RowTruth RowTruth::subset(const std::vector<int>& rows) const {
  RowTruth out;
  const auto n = static_cast<Index>(rows.size());
  out.y0_mean.resize(n);
  out.y1_mean.resize(n);
  out.y0.resize(n);
  out.y1.resize(n);
  out.z_true.resize(n);
  for (Index i = 0; i < n; ++i) {
    const int r = rows[static_cast<std::size_t>(i)];
    out.y0_mean(i) = y0_mean(r);
    out.y1_mean(i) = y1_mean(r);
    out.y0(i) = y0(r);
    out.y1(i) = y1(r);
    out.z_true(i) = z_true(r);
    out.optimal_arm_noiseless.push_back(optimal_arm_noiseless[static_cast<std::size_t>(r)]);
    out.optimal_arm_realized.push_back(optimal_arm_realized[static_cast<std::size_t>(r)]);
  }
  return out;
}

CovariateDraw draw_covariates(Structure structure, int n, std::uint64_t seed) {
  require(n >= 1, "draw_covariates: n must be >= 1");
  CovariateDraw draw;
  draw.columns = default_columns(kCovariates, kContinuousCovariates);
  draw.mu.resize(kContinuousCovariates);
  Rng mu_rng(derive_seed(seed, {kMu}));
  for (Index j = 0; j < kContinuousCovariates; ++j) draw.mu(j) = mu_rng.normal(0.0, kMuSd);

  draw.X.resize(n, kCovariates);
  Rng x_rng(derive_seed(seed, {kContinuous}));
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < kContinuousCovariates; ++j) draw.X(i, j) = x_rng.normal();
  if (structure == Structure::Correlated) {
    Matrix sigma = Matrix::Constant(4, 4, 0.7);
    sigma.diagonal().setOnes();
    const Matrix L = sigma.llt().matrixL();
    draw.X.leftCols(4) = draw.X.leftCols(4) * L.transpose();
  }
  draw.X.leftCols(kContinuousCovariates).rowwise() += draw.mu.transpose();

  Rng c_rng(derive_seed(seed, {kBinary}));
  for (Index i = 0; i < n; ++i)
    for (Index j = kContinuousCovariates; j < kCovariates; ++j) draw.X(i, j) = c_rng.bernoulli(0.7) ? 1.0 : 0.0;
  return draw;
}

std::vector<int> assign_treatment(int n, std::uint64_t seed) {
  Rng rng(derive_seed(seed, {kTreatment}));
  std::vector<int> t(static_cast<std::size_t>(n));
  for (auto& v : t) v = rng.bernoulli(0.5) ? 1 : 0;
  return t;
}

std::pair<Vector, Vector> conditional_means(Linearity linearity, bool teh, const Matrix& X, const Vector& mu) {
  require(X.cols() == kCovariates, "conditional_means: expected 110 covariates");
  const Index n = X.rows();
  Vector m0(n), m1(n);
  if (linearity == Linearity::Linear) {
    // 1-based index sets: beta1 on 1..20 and 101..105, beta0 on 2..16, 101, 102.
    Vector b1 = Vector::Zero(kCovariates), b0 = Vector::Zero(kCovariates);
    b1.head(20).setOnes();
    b1.segment(100, 5).setOnes();
    b0.segment(1, 15).setOnes();
    b0.segment(100, 2).setOnes();
    if (teh) {
      m0 = X * b0;
      m1 = X * b1;
    } else {
      m0 = X * b1;
      m1 = m0.array() + 2.0;
    }
    return {m0, m1};
  }
  require(mu.size() >= 6, "conditional_means: mu too short");
  for (Index i = 0; i < n; ++i) {
    const bool x1 = X(i, 0) > mu(0);
    if (teh) {
      if (x1) {
        const bool x2 = X(i, 1) > mu(1);
        m0(i) = x2 ? 20.0 : 23.0;
        m1(i) = x2 ? 22.0 : 20.0;
      } else {
        const bool x5 = X(i, 4) > mu(4);
        m0(i) = x5 ? 25.0 : 22.0;
        m1(i) = x5 ? 25.0 : 23.0;
      }
    } else {
      const double k = x1 ? (X(i, 4) > mu(4) ? 22.0 : 20.0) : (X(i, 5) > mu(5) ? 25.0 : 23.0);
      m0(i) = k;
      m1(i) = k + 2.0;
    }
  }
  return {m0, m1};
}

RowTruth attach_outcomes(Linearity linearity, bool teh, const Matrix& X, const Vector& mu, std::uint64_t seed) {
  auto [m0, m1] = conditional_means(linearity, teh, X, mu);
  const double sd = linearity == Linearity::Linear ? kLinearNoiseSd : kNonlinearNoiseSd;
  RowTruth t;
  const Index n = X.rows();
  t.y0.resize(n);
  t.y1.resize(n);
  Rng r0(derive_seed(seed, {kNoise0})), r1(derive_seed(seed, {kNoise1}));
  for (Index i = 0; i < n; ++i) t.y0(i) = m0(i) + sd * r0.normal();
  for (Index i = 0; i < n; ++i) t.y1(i) = m1(i) + sd * r1.normal();
  t.y0_mean = std::move(m0);
  t.y1_mean = std::move(m1);
  t.z_true = t.y1_mean - t.y0_mean;
  for (Index i = 0; i < n; ++i) {
    t.optimal_arm_noiseless.push_back(t.z_true(i) > 0.0 ? 1 : 0);
    t.optimal_arm_realized.push_back(t.y1(i) > t.y0(i) ? 1 : 0);
  }
  return t;
}

RowTruth attach_outcomes_linear(const Matrix& X, bool teh, std::uint64_t seed) {
  return attach_outcomes(Linearity::Linear, teh, X, Vector(), seed);
}

RowTruth attach_outcomes_nonlinear(const Matrix& X, const Vector& mu, bool teh, std::uint64_t seed) {
  return attach_outcomes(Linearity::Nonlinear, teh, X, mu, seed);
}

std::vector<int> true_predictive_set(const ScenarioConfig& config) {
  if (!config.teh) return {};
  if (config.linearity == Linearity::Linear) return {0, 16, 17, 18, 19, 102, 103, 104};
  return {0, 1, 4};
}

Vector selection_score(Linearity linearity, const Matrix& X) {
  if (linearity == Linearity::Linear) return X.middleCols(14, 4).rowwise().sum();
  return X.col(0) + X.col(4);
}

std::vector<int> selection_bias_sample(const Vector& score, const std::vector<int>& candidates, int n_train,
                                       std::uint64_t seed) {
  const auto m = static_cast<int>(candidates.size());
  const int low_quota = n_train / 4;
  const int high_quota = n_train - low_quota;
  const int half = m / 2;
  require(low_quota <= half && high_quota <= m - half, "selection bias: quota exceeds half size");
  double lo = score(candidates[0]), hi = lo;
  for (int r : candidates) {
    lo = std::min(lo, score(r));
    hi = std::max(hi, score(r));
  }
  require(hi > lo, "selection bias: score is constant");
  std::vector<int> ranked = candidates;
  std::stable_sort(ranked.begin(), ranked.end(), [&](int a, int b) { return score(a) < score(b); });
  std::vector<int> bottom(ranked.begin(), ranked.begin() + half);
  std::vector<int> top(ranked.begin() + half, ranked.end());
  Rng rng(derive_seed(seed, {kSampling, 1}));
  rng.shuffle(bottom);
  rng.shuffle(top);
  std::vector<int> out(bottom.begin(), bottom.begin() + low_quota);
  out.insert(out.end(), top.begin(), top.begin() + high_quota);
  std::sort(out.begin(), out.end());
  return out;
}

SimulatedData generate(const ScenarioConfig& config) {
  require(config.n_train >= 1 && config.n_test >= 1, "scenario: n_train and n_test must be >= 1");
  const bool biased = config.structure == Structure::SelectionBias;
  const int population = config.n_test + (biased ? 2 * config.n_train : config.n_train);
  CovariateDraw draw = draw_covariates(config.structure, population, config.seed);
  const std::vector<int> T = assign_treatment(population, config.seed);
  const RowTruth truth = attach_outcomes(config.linearity, config.teh, draw.X, draw.mu, config.seed);

  Rng rng(derive_seed(config.seed, {kSampling, 0}));
  const std::vector<int> order = permutation(population, rng);
  std::vector<int> test_rows(order.begin(), order.begin() + config.n_test);
  std::vector<int> rest(order.begin() + config.n_test, order.end());
  std::sort(test_rows.begin(), test_rows.end());
  std::sort(rest.begin(), rest.end());
  std::vector<int> train_rows =
      biased ? selection_bias_sample(selection_score(config.linearity, draw.X), rest, config.n_train, config.seed)
             : rest;

  Dataset all;
  all.columns = draw.columns;
  all.X = std::move(draw.X);
  all.T = T;
  all.Y.resize(population);
  for (Index i = 0; i < population; ++i) all.Y(i) = T[static_cast<std::size_t>(i)] ? truth.y1(i) : truth.y0(i);

  SimulatedData sim;
  sim.config = config;
  sim.train = all.subset(train_rows);
  sim.test = all.subset(test_rows);
  sim.train_truth = truth.subset(train_rows);
  sim.test_truth = truth.subset(test_rows);
  sim.predictive_set = true_predictive_set(config);
  sim.mu = draw.mu;
  const auto [c, t] = arm_rows(sim.train.T);
  require(!c.empty() && !t.empty(), "scenario " + config.name() + ": a training arm is empty");
  return sim;
}

namespace {

void write_truth(const RowTruth& t, const std::string& path) {
  std::ofstream out(path);
  require(static_cast<bool>(out), "cannot write " + path);
  out.precision(17);
  out << "y0_mean,y1_mean,y0,y1,z_true,optimal_arm_noiseless,optimal_arm_realized\n";
  for (Index i = 0; i < t.z_true.size(); ++i)
    out << t.y0_mean(i) << ',' << t.y1_mean(i) << ',' << t.y0(i) << ',' << t.y1(i) << ',' << t.z_true(i) << ','
        << t.optimal_arm_noiseless[static_cast<std::size_t>(i)] << ','
        << t.optimal_arm_realized[static_cast<std::size_t>(i)] << '\n';
}

}  // namespace

void write_simulation(const SimulatedData& sim, const std::string& directory) {
  std::filesystem::create_directories(directory);
  const std::filesystem::path dir(directory);
  write_csv(sim.train, (dir / "train.csv").string());
  write_csv(sim.test, (dir / "test.csv").string());
  write_truth(sim.train_truth, (dir / "train_truth.csv").string());
  write_truth(sim.test_truth, (dir / "test_truth.csv").string());
}

}  // namespace vtwins
