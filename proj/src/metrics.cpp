#include "vtwins/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

namespace vtwins {

std::string truth_mode_name(GroundTruthMode mode) {
  return mode == GroundTruthMode::Noiseless ? "noiseless" : "realized";
}

GroundTruthMode truth_mode_from_name(const std::string& name) {
  if (name == "noiseless") return GroundTruthMode::Noiseless;
  if (name == "realized") return GroundTruthMode::Realized;
  throw Error("unknown ground truth mode: " + name);
}

double classification_accuracy(const std::vector<int>& predicted, const std::vector<int>& truth) {
  require(predicted.size() == truth.size(), "accuracy: length mismatch");
  require(!truth.empty(), "accuracy: empty input");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) hits += predicted[i] == truth[i] ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(truth.size());
}

double ite_mse(const Vector& z_hat, const Vector& z_true) {
  require(z_hat.size() == z_true.size(), "ite_mse: length mismatch");
  require(z_true.size() > 0, "ite_mse: empty input");
  return (z_hat - z_true).squaredNorm() / static_cast<double>(z_true.size());
}

std::optional<double> pooled_selection_precision(const std::vector<std::vector<int>>& selected,
                                                 const std::vector<int>& truth) {
  std::vector<int> t = truth;
  std::sort(t.begin(), t.end());
  std::size_t hits = 0, total = 0;
  for (const auto& s : selected) {
    total += s.size();
    for (int v : s) hits += std::binary_search(t.begin(), t.end(), v) ? 1 : 0;
  }
  if (total == 0) return std::nullopt;
  return static_cast<double>(hits) / static_cast<double>(total);
}

ReplicateMetrics evaluate_replicate(const VtFit& fit, const SimulatedData& sim, GroundTruthMode mode) {
  const Matrix& X = sim.test.X;
  require(X.cols() == fit.f0.n_features, "evaluate: column layout mismatch");
  ReplicateMetrics m;
  const Vector effect = estimated_effect(fit, X);
  std::vector<int> arm(static_cast<std::size_t>(effect.size()));
  for (Index i = 0; i < effect.size(); ++i) arm[static_cast<std::size_t>(i)] = effect(i) > 0.0 ? 1 : 0;
  m.accuracy_noiseless = classification_accuracy(arm, sim.test_truth.optimal_arm_noiseless);
  m.accuracy_realized = classification_accuracy(arm, sim.test_truth.optimal_arm_realized);
  m.accuracy = mode == GroundTruthMode::Noiseless ? m.accuracy_noiseless : m.accuracy_realized;
  m.ite_mse = ite_mse(effect, sim.test_truth.z_true);
  m.n_eval = static_cast<int>(X.rows());
  if (fit.step2_model) {
    m.has_selection = true;
    m.selected = selected_variables(*fit.step2_model);
  }
  return m;
}

std::pair<double, double> mean_and_se(const std::vector<double>& values) {
  if (values.empty()) return {0.0, 0.0};
  const auto R = static_cast<double>(values.size());
  double sum = 0.0;
  for (double v : values) sum += v;
  const double mean = sum / R;
  if (values.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / (R - 1.0)) / std::sqrt(R)};
}

AggregateMetrics aggregate(const std::vector<ReplicateMetrics>& reps, const std::vector<int>& truth) {
  AggregateMetrics a;
  a.replicates = static_cast<int>(reps.size());
  std::vector<double> acc, mse;
  std::vector<std::vector<int>> selections;
  for (const auto& r : reps) {
    acc.push_back(r.accuracy);
    mse.push_back(r.ite_mse);
    if (r.has_selection) selections.push_back(r.selected);
  }
  std::tie(a.mean_accuracy, a.mc_se_accuracy) = mean_and_se(acc);
  std::tie(a.mean_mse, a.mc_se_mse) = mean_and_se(mse);
  if (!truth.empty()) a.pooled_precision = pooled_selection_precision(selections, truth);
  return a;
}

}  // namespace vtwins
