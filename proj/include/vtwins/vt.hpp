#pragma once

#include "vtwins/common.hpp"
#include "vtwins/dataset.hpp"
#include "vtwins/regressor.hpp"
#include "vtwins/subgroup.hpp"

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

namespace vtwins {

struct CounterfactualPredictions {
  Vector y0_hat;
  Vector y1_hat;
  /// y1_hat - y0_hat.
  Vector z_hat;
};

struct VtSpec {
  RegressorSpec step1 = LassoSpec{};
  StepTwoSpec step2;
  std::uint64_t seed = 0;
};

struct VtFit {
  FittedRegressor f0;
  FittedRegressor f1;
  /// Predictions on the training rows.
  CounterfactualPredictions cf;
  /// Absent when the step-2 kind is None.
  std::optional<SubgroupModel> step2_model;
};

struct CalibrationResult {
  double threshold = 0.0;
  Vector samples;
  int M = 0;
  double alpha = 0.0;
};

/// Fits the control-arm and treated-arm models on their own rows. The two
/// fits use seeds derived from `seed`.
std::pair<FittedRegressor, FittedRegressor> fit_step1(const Dataset& d, const RegressorSpec& spec,
                                                      std::uint64_t seed);

CounterfactualPredictions compute_twins(const FittedRegressor& f0, const FittedRegressor& f1, const Matrix& X);

/// Step 1, counterfactual predictions, then step 2 on (X, z_hat).
VtFit run_vt(const Dataset& d, const VtSpec& spec);

/// Same as run_vt with the step-1 models supplied by the caller.
VtFit run_vt(const Dataset& d, FittedRegressor f0, FittedRegressor f1, const StepTwoSpec& step2,
             std::uint64_t seed);

/// Effect estimates for new rows: the step-2 prediction when a step-2 model
/// exists, the counterfactual difference otherwise.
Vector estimated_effect(const VtFit& fit, const Matrix& X);

/// Arm 1 where the estimated effect is > 0, arm 0 otherwise (ties included).
std::vector<int> predict_optimal_arm(const VtFit& fit, const Matrix& X);

/// Permutation calibration of the step-2 penalty. Each repetition permutes
/// the treatment labels, refits step 1 and records the null penalty of the
/// resulting effect estimates; the threshold is the ceil((1 - alpha) M)-th
/// smallest sample.
CalibrationResult calibrate_step2_penalty(const Dataset& d, const RegressorSpec& step1, const StepTwoSpec& step2,
                                          int M, double alpha, std::uint64_t seed, int workers = 1);

/// Empirical quantile used by the calibration.
double upper_quantile(std::vector<double> samples, double alpha);

}  // namespace vtwins
