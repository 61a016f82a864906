#pragma once

#include "vtwins/common.hpp"

#include <vector>

namespace vtwins {

struct MarsSpec {
  /// Maximum number of terms including the intercept.
  int max_terms = 21;
  int degree = 1;
  /// Knot spacing in data points; <= 0 uses the Friedman (1991) rules with
  /// alpha = 0.05.
  int minspan = 0;
  int endspan = 0;
  /// Forward pass stops when a step adds less than this to R^2.
  double threshold = 1e-3;
};

/// max(0, x[var] - knot) for direction +1, max(0, knot - x[var]) for -1.
struct Hinge {
  int var = 0;
  double knot = 0.0;
  int direction = 1;

  double operator()(double x) const {
    const double v = direction > 0 ? x - knot : knot - x;
    return v > 0.0 ? v : 0.0;
  }
};

struct MarsTerm {
  std::vector<Hinge> factors;
};

struct MarsFit {
  double intercept = 0.0;
  std::vector<MarsTerm> basis;
  Vector coefficients;
  double rss = 0.0;
  double gcv = 0.0;
  int n_features = 0;
  /// Training RSS after each forward step (index 0 is the intercept-only model).
  std::vector<double> forward_rss;

  Vector predict(const Matrix& X) const;
  std::vector<int> variables() const;
};

/// Effective parameter count C(M) = M + penalty * (M - 1) / 2.
double mars_effective_params(int terms, double penalty);
/// GCV = RSS / (n * (1 - C(M)/n)^2); infinite when C(M) >= n.
double mars_gcv(double rss, int n, int terms, double penalty);
/// 2 for additive models, 3 otherwise.
double mars_default_penalty(int degree);

MarsFit fit_mars(const Matrix& X, const Vector& y, const MarsSpec& spec);

}  // namespace vtwins
