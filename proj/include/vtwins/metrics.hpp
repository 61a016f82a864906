#pragma once

#include "vtwins/common.hpp"
#include "vtwins/simgen.hpp"
#include "vtwins/vt.hpp"

#include <optional>
#include <string>
#include <vector>

namespace vtwins {

enum class GroundTruthMode { Noiseless, Realized };

std::string truth_mode_name(GroundTruthMode mode);
GroundTruthMode truth_mode_from_name(const std::string& name);

double classification_accuracy(const std::vector<int>& predicted, const std::vector<int>& truth);

double ite_mse(const Vector& z_hat, const Vector& z_true);

/// Sum of true selections over sum of selections, pooled across replicates;
/// empty when nothing was selected.
std::optional<double> pooled_selection_precision(const std::vector<std::vector<int>>& selected,
                                                 const std::vector<int>& truth);

struct ReplicateMetrics {
  /// Accuracy under the requested mode, followed by both modes.
  double accuracy = 0.0;
  double accuracy_noiseless = 0.0;
  double accuracy_realized = 0.0;
  double ite_mse = 0.0;
  std::vector<int> selected;
  /// False when the method has no step-2 model; such replicates are left out
  /// of precision pooling.
  bool has_selection = false;
  int n_eval = 0;
};

/// Metrics on the test rows of `sim`.
ReplicateMetrics evaluate_replicate(const VtFit& fit, const SimulatedData& sim, GroundTruthMode mode);

struct AggregateMetrics {
  double mean_accuracy = 0.0;
  double mc_se_accuracy = 0.0;
  double mean_mse = 0.0;
  double mc_se_mse = 0.0;
  std::optional<double> pooled_precision;
  int replicates = 0;
};

/// Means, Monte Carlo standard errors (sample SD / sqrt(R)) and pooled
/// precision against `truth` (not computed when truth is empty).
AggregateMetrics aggregate(const std::vector<ReplicateMetrics>& reps, const std::vector<int>& truth);

/// Mean and sample SD / sqrt(R) of a sample; SE is 0 for fewer than 2 values.
std::pair<double, double> mean_and_se(const std::vector<double>& values);

}  // namespace vtwins
