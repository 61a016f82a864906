#pragma once

#include "vtwins/common.hpp"

#include <string>
#include <utility>
#include <vector>

namespace vtwins {

enum class ColumnKind { Continuous, Binary };

struct ColumnMeta {
  std::string name;
  ColumnKind kind = ColumnKind::Continuous;
  int index = 0;
};

/// Covariates, treatment indicator and continuous outcome for n subjects.
/// Treatment is stored as 0/1 integers.
struct Dataset {
  std::vector<ColumnMeta> columns;
  Matrix X;
  std::vector<int> T;
  Vector Y;

  Index rows() const { return X.rows(); }
  Index cols() const { return X.cols(); }
  std::vector<ColumnKind> kinds() const;
  std::vector<std::string> names() const;

  /// Throws Error when any structural invariant is broken.
  void validate() const;
  /// Rows selected by index, same column layout.
  Dataset subset(const std::vector<int>& rows) const;
};

/// Builds continuous column metadata named x1..xp.
std::vector<ColumnMeta> default_columns(int p, int binary_from = -1);

struct CsvSchema {
  std::vector<ColumnMeta> covariates;
  std::string treatment;
  std::string outcome;
};

Dataset load_csv(const std::string& path, const CsvSchema& schema);

/// Reads the header and values of a CSV and types each covariate column:
/// Binary when every value is 0 or 1, Continuous otherwise.
CsvSchema infer_schema(const std::string& path, const std::string& treatment,
                       const std::string& outcome);

/// Writes covariates, then treatment and outcome columns. Doubles are printed
/// with max_digits10 so a reload is bit-exact.
void write_csv(const Dataset& d, const std::string& path, const std::string& treatment = "trt",
               const std::string& outcome = "y");

/// Control rows (T = 0) and treated rows (T = 1), each in original order.
std::pair<Dataset, Dataset> split_by_arm(const Dataset& d);
/// Row indices of each arm, in original order.
std::pair<std::vector<int>, std::vector<int>> arm_rows(const std::vector<int>& T);

struct StandardizationParams {
  Vector means;
  Vector scales;
  std::vector<bool> constant;
};

/// Population-SD standardization of continuous columns. Binary columns get
/// mean 0 and scale 1; constant columns get scale 1 and are flagged.
StandardizationParams standardize_fit(const Matrix& X, const std::vector<ColumnKind>& kinds = {});
Matrix standardize_apply(const StandardizationParams& params, const Matrix& X);

}  // namespace vtwins
