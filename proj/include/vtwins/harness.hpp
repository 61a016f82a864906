#pragma once

#include "vtwins/metrics.hpp"
#include "vtwins/simgen.hpp"
#include "vtwins/vt.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace vtwins {

/// Invalid benchmark configuration (CLI exit code 2).
class ConfigError : public Error {
 public:
  using Error::Error;
};

struct BenchmarkConfig {
  std::vector<ScenarioConfig> scenarios;
  std::vector<VtSpec> method_grid;
  int replicates = 100;
  int workers = 1;
  GroundTruthMode ground_truth_mode = GroundTruthMode::Realized;
  std::string output_dir = "results";
  std::uint64_t seed = 1;
  /// Write the step-2 tree of replicate 0 of every cell.
  bool export_trees = true;
};

/// Every step-1 learner crossed with every step-2 model (16 methods).
std::vector<VtSpec> default_method_grid();
VtSpec method_from_names(const std::string& step1, const std::string& step2);

/// Throws ConfigError when an invariant is violated.
void validate_config(const BenchmarkConfig& config);
BenchmarkConfig config_from_json(const std::string& text);
BenchmarkConfig load_config(const std::string& path);

/// Seeds. Data depend on (scenario, replicate) only, so every method sees the
/// same datasets; step-1 fits are keyed by learner name and shared by the
/// methods that use it.
std::uint64_t data_seed(std::uint64_t master, int scenario, int replicate);
std::uint64_t step1_seed(std::uint64_t master, int scenario, int replicate, const std::string& learner);
std::uint64_t step2_seed(std::uint64_t master, int scenario, int method, int replicate);

struct ReplicateFailure {
  int replicate = 0;
  std::uint64_t seed = 0;
  std::string message;
};

struct ResultCell {
  int scenario = 0;
  int method = 0;
  std::string scenario_name;
  std::string step1;
  std::string step2;
  AggregateMetrics metrics;
  /// Successful replicates in replicate order.
  std::vector<ReplicateMetrics> reps;
  std::vector<ReplicateFailure> failures;
  std::string tree_json;
  std::string tree_dot;

  bool partial() const { return !failures.empty(); }
};

struct ResultsTable {
  BenchmarkConfig config;
  std::vector<ResultCell> cells;
  double seconds = 0.0;

  bool partial() const;
  const ResultCell& cell(int scenario, int method) const;
};

ResultsTable run_benchmark(const BenchmarkConfig& config);

/// Writes results.csv, results.md, run_info.json and trees/ under `directory`.
void render_report(const ResultsTable& table, const std::string& directory);

/// results.csv contents: one row per (cell, metric).
std::string results_csv(const ResultsTable& table);
std::string results_markdown(const ResultsTable& table);

struct Subgroup {
  std::string rule;
  int size = 0;
  double mean_effect = 0.0;
};

struct AnalysisReport {
  std::string step1;
  std::string step2;
  std::optional<CalibrationResult> calibration;
  std::vector<Subgroup> subgroups;
  std::vector<std::string> selected;
  std::string tree_json;
  /// Linear step 2: (name, coefficient) with the intercept first.
  std::vector<std::pair<std::string, double>> linear_terms;
  int n = 0;

  std::string to_json() const;
  std::string to_text() const;
};

struct CalibrationRequest {
  int M = 100;
  double alpha = 0.05;
};

AnalysisReport analyze(const Dataset& data, const VtSpec& spec, const std::optional<CalibrationRequest>& calibration,
                       int workers = 1);

}  // namespace vtwins
