#pragma once

#include "vtwins/common.hpp"
#include "vtwins/dataset.hpp"

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace vtwins {

enum class Linearity { Linear, Nonlinear };
enum class Structure { Regular, Correlated, SelectionBias };

struct ScenarioConfig {
  Linearity linearity = Linearity::Linear;
  Structure structure = Structure::Regular;
  bool teh = true;
  int n_train = 600;
  int n_test = 2000;
  std::uint64_t seed = 0;

  std::string name() const;
};

inline constexpr int kContinuousCovariates = 100;
inline constexpr int kBinaryCovariates = 10;
inline constexpr int kCovariates = kContinuousCovariates + kBinaryCovariates;
/// Outcome noise standard deviations.
inline constexpr double kLinearNoiseSd = 3.0;
inline constexpr double kNonlinearNoiseSd = 1.0;
/// Standard deviation of the covariate means.
inline const double kMuSd = std::sqrt(3.0);

std::string linearity_name(Linearity l);
std::string structure_name(Structure s);
Linearity linearity_from_name(const std::string& name);
Structure structure_from_name(const std::string& name);

/// Per-row ground truth for one split.
struct RowTruth {
  Vector y0_mean;
  Vector y1_mean;
  Vector y0;
  Vector y1;
  Vector z_true;
  std::vector<int> optimal_arm_noiseless;
  std::vector<int> optimal_arm_realized;

  RowTruth subset(const std::vector<int>& rows) const;
};

struct SimulatedData {
  ScenarioConfig config;
  Dataset train;
  Dataset test;
  RowTruth train_truth;
  RowTruth test_truth;
  std::vector<int> predictive_set;
  Vector mu;
};

struct CovariateDraw {
  Matrix X;
  std::vector<ColumnMeta> columns;
  Vector mu;
};

/// n rows of 100 normal covariates (mean mu, identity or block-correlated
/// covariance) followed by 10 Bernoulli(0.7) columns. mu is drawn from `seed`.
CovariateDraw draw_covariates(Structure structure, int n, std::uint64_t seed);

std::vector<int> assign_treatment(int n, std::uint64_t seed);

/// Conditional means (y0_mean, y1_mean) of each row.
std::pair<Vector, Vector> conditional_means(Linearity linearity, bool teh, const Matrix& X, const Vector& mu);

/// Potential outcomes: means from conditional_means plus independent normal
/// noise drawn from `seed`.
RowTruth attach_outcomes(Linearity linearity, bool teh, const Matrix& X, const Vector& mu, std::uint64_t seed);
RowTruth attach_outcomes_linear(const Matrix& X, bool teh, std::uint64_t seed);
RowTruth attach_outcomes_nonlinear(const Matrix& X, const Vector& mu, bool teh, std::uint64_t seed);

/// Variables whose coefficients or cells differ between the two arms
/// (0-based column indices).
std::vector<int> true_predictive_set(const ScenarioConfig& config);

/// Biased-sampling score: sum of columns 15..18 (linear) or of columns 1 and
/// 5 (nonlinear), 1-based.
Vector selection_score(Linearity linearity, const Matrix& X);

/// Picks floor(n_train / 4) rows from the lower half of `candidates` ranked
/// by score and the remainder from the upper half.
std::vector<int> selection_bias_sample(const Vector& score, const std::vector<int>& candidates, int n_train,
                                       std::uint64_t seed);

SimulatedData generate(const ScenarioConfig& config);

/// Writes train.csv and test.csv (covariates, trt, y) plus truth columns in
/// train_truth.csv and test_truth.csv.
void write_simulation(const SimulatedData& sim, const std::string& directory);

}  // namespace vtwins
