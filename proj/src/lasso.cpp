#include "vtwins/lasso.hpp"

#include "vtwins/random.hpp"

#include <algorithm>
#include <cmath>

namespace vtwins {

namespace {

// Uncentered cross products of shifted data. Fold problems are formed by
// subtracting a fold's sums from the full-data sums.
struct CrossProducts {
  Matrix xtx;
  Vector sx;
  Vector xty;
  double sy = 0.0;
  double n = 0.0;
};

CrossProducts cross_products(const Matrix& X0, const Vector& y0) {
  CrossProducts cp;
  cp.xtx = X0.transpose() * X0;
  cp.sx = X0.colwise().sum().transpose();
  cp.xty = X0.transpose() * y0;
  cp.sy = y0.sum();
  cp.n = static_cast<double>(X0.rows());
  return cp;
}

CrossProducts minus(const CrossProducts& a, const CrossProducts& b) {
  return {a.xtx - b.xtx, a.sx - b.sx, a.xty - b.xty, a.sy - b.sy, a.n - b.n};
}

// Least-squares problem on centered, scaled columns in Gram form:
// minimize 1/2 b'Gb - c'b + lambda |b|_1.
struct GramProblem {
  Matrix gram;
  Vector c;
  Vector means;
  Vector scales;
  std::vector<bool> usable;
  double ybar = 0.0;
};

GramProblem make_problem(const CrossProducts& cp, const Vector& shift_x, double shift_y,
                         const std::vector<ColumnKind>& kinds) {
  const Index p = cp.sx.size();
  const double n = cp.n;
  GramProblem P;
  const Vector m0 = cp.sx / n;
  Matrix centered = cp.xtx - n * m0 * m0.transpose();
  const Vector cy = cp.xty - cp.sx * (cp.sy / n);
  P.scales = Vector::Ones(p);
  P.usable.assign(static_cast<std::size_t>(p), false);
  for (Index j = 0; j < p; ++j) {
    const double var = centered(j, j) / n;
    const double reference = std::max(1.0, cp.xtx(j, j) / n);
    if (var > 1e-13 * reference) {
      P.usable[static_cast<std::size_t>(j)] = true;
      const bool binary = !kinds.empty() && kinds[static_cast<std::size_t>(j)] == ColumnKind::Binary;
      if (!binary) P.scales(j) = std::sqrt(var);
    }
  }
  P.gram.resize(p, p);
  P.c.resize(p);
  for (Index j = 0; j < p; ++j) {
    P.c(j) = P.usable[static_cast<std::size_t>(j)] ? cy(j) / (n * P.scales(j)) : 0.0;
    for (Index k = 0; k < p; ++k) P.gram(j, k) = centered(j, k) / (n * P.scales(j) * P.scales(k));
  }
  P.means = shift_x + m0;
  P.ybar = shift_y + cp.sy / n;
  return P;
}

double max_abs_score(const GramProblem& P) {
  double best = 0.0;
  for (Index j = 0; j < P.c.size(); ++j)
    if (P.usable[static_cast<std::size_t>(j)]) best = std::max(best, std::abs(P.c(j)));
  return best;
}

// Covariance-update coordinate descent with warm starts and active-set
// iterations. Returns standardized coefficients, one column per lambda.
Matrix solve_path(const GramProblem& P, const Vector& lambdas) {
  const Index p = P.c.size();
  Matrix out = Matrix::Zero(p, lambdas.size());
  Vector b = Vector::Zero(p);
  Vector grad = P.c;
  std::vector<char> active(static_cast<std::size_t>(p), 0);
  const double scale = std::max(1e-300, P.c.cwiseAbs().maxCoeff());
  const double tol = 1e-10 * scale * scale;

  auto update = [&](Index j, double lambda) {
    if (!P.usable[static_cast<std::size_t>(j)]) return 0.0;
    const double gjj = P.gram(j, j);
    const double old = b(j);
    const double fresh = soft_threshold(grad(j) + gjj * old, lambda) / gjj;
    if (fresh == old) return 0.0;
    const double delta = fresh - old;
    grad.noalias() -= P.gram.col(j) * delta;
    b(j) = fresh;
    if (fresh != 0.0) active[static_cast<std::size_t>(j)] = 1;
    return gjj * delta * delta;
  };

  for (Index l = 0; l < lambdas.size(); ++l) {
    const double lambda = lambdas(l);
    for (int outer = 0; outer < 1000; ++outer) {
      double change = 0.0;
      for (Index j = 0; j < p; ++j) change = std::max(change, update(j, lambda));
      if (change <= tol) break;
      for (int inner = 0; inner < 100000; ++inner) {
        double inner_change = 0.0;
        for (Index j = 0; j < p; ++j)
          if (active[static_cast<std::size_t>(j)]) inner_change = std::max(inner_change, update(j, lambda));
        if (inner_change <= tol) break;
      }
    }
    out.col(l) = b;
  }
  return out;
}

void to_original_scale(const GramProblem& P, const Matrix& beta_std, Matrix& beta, Vector& intercepts) {
  beta = beta_std;
  for (Index j = 0; j < beta.rows(); ++j) beta.row(j) /= P.scales(j);
  intercepts.resize(beta.cols());
  for (Index l = 0; l < beta.cols(); ++l) intercepts(l) = P.ybar - P.means.dot(beta.col(l));
}

void check_finite(const Matrix& X, const Vector& y) {
  require(X.allFinite(), "lasso: non-finite covariate value");
  require(y.allFinite(), "lasso: non-finite response value");
}

}  // namespace

std::vector<int> LassoPath::entry_index() const {
  std::vector<int> entry(static_cast<std::size_t>(beta.rows()), -1);
  for (Index j = 0; j < beta.rows(); ++j) {
    for (Index l = 0; l < beta.cols(); ++l) {
      if (beta(j, l) != 0.0) {
        entry[static_cast<std::size_t>(j)] = static_cast<int>(l);
        break;
      }
    }
  }
  return entry;
}

Vector LassoFit::predict(const Matrix& X) const {
  require(X.cols() == coefficients.size(), "lasso predict: column mismatch");
  return (X * coefficients).array() + intercept;
}

double lasso_lambda_max(const Matrix& X, const Vector& y, const std::vector<ColumnKind>& kinds) {
  check_finite(X, y);
  const Vector shift_x = X.colwise().mean().transpose();
  const double shift_y = y.mean();
  const Matrix X0 = X.rowwise() - shift_x.transpose();
  const Vector y0 = y.array() - shift_y;
  return max_abs_score(make_problem(cross_products(X0, y0), shift_x, shift_y, kinds));
}

Vector lasso_lambda_sequence(double lambda_max, int count, double ratio) {
  require(count >= 1, "lambda sequence needs at least one value");
  Vector out(count);
  if (count == 1) {
    out(0) = lambda_max;
    return out;
  }
  const double log_hi = std::log(lambda_max);
  const double log_lo = std::log(lambda_max * ratio);
  for (int l = 0; l < count; ++l) out(l) = std::exp(log_hi + (log_lo - log_hi) * l / (count - 1));
  out(0) = lambda_max;
  return out;
}

LassoPath lasso_path(const Matrix& X, const Vector& y, const Vector& lambdas, const std::vector<ColumnKind>& kinds) {
  check_finite(X, y);
  require(X.rows() == y.size(), "lasso: row mismatch");
  const Vector shift_x = X.colwise().mean().transpose();
  const double shift_y = y.mean();
  const Matrix X0 = X.rowwise() - shift_x.transpose();
  const Vector y0 = y.array() - shift_y;
  const GramProblem P = make_problem(cross_products(X0, y0), shift_x, shift_y, kinds);
  LassoPath path;
  path.lambdas = lambdas;
  path.beta_std = solve_path(P, lambdas);
  to_original_scale(P, path.beta_std, path.beta, path.intercepts);
  return path;
}

LassoFit fit_lasso(const Matrix& X, const Vector& y, const LassoSpec& spec, std::uint64_t seed,
                   const std::vector<ColumnKind>& kinds) {
  const Index n = X.rows();
  const Index p = X.cols();
  require(spec.folds >= 2, "lasso: folds must be at least 2");
  require(n >= spec.folds, "lasso: fewer rows than folds");
  require(p >= 1, "lasso: no covariates");
  require(y.size() == n, "lasso: row mismatch");
  check_finite(X, y);

  const Vector shift_x = X.colwise().mean().transpose();
  const double shift_y = y.mean();
  const Matrix X0 = X.rowwise() - shift_x.transpose();
  const Vector y0 = y.array() - shift_y;
  const CrossProducts full = cross_products(X0, y0);
  const GramProblem P = make_problem(full, shift_x, shift_y, kinds);

  double lambda_max = max_abs_score(P);
  // Zero-signal response: any positive lambda leaves every coefficient at 0.
  if (!(lambda_max > 1e-12 * std::max(1.0, std::abs(P.ybar)))) lambda_max = 1.0;
  const double ratio = spec.lambda_min_ratio > 0.0 ? spec.lambda_min_ratio : (n > p ? 1e-3 : 1e-2);

  LassoFit fit;
  fit.standardization = standardize_fit(X, kinds);
  fit.path.lambdas = lasso_lambda_sequence(lambda_max, spec.n_lambda, ratio);
  fit.path.beta_std = solve_path(P, fit.path.lambdas);
  to_original_scale(P, fit.path.beta_std, fit.path.beta, fit.path.intercepts);
  fit.lambda_path = fit.path.lambdas;

  Rng rng(seed);
  const std::vector<int> fold = fold_assignment(static_cast<int>(n), spec.folds, rng);
  const Index L = fit.path.lambdas.size();
  Matrix fold_mse = Matrix::Zero(spec.folds, L);
  Vector fold_weight = Vector::Zero(spec.folds);
  for (int f = 0; f < spec.folds; ++f) {
    std::vector<Index> rows;
    for (Index i = 0; i < n; ++i)
      if (fold[static_cast<std::size_t>(i)] == f) rows.push_back(i);
    const auto m = static_cast<Index>(rows.size());
    Matrix Xf(m, p);
    Vector yf(m);
    for (Index r = 0; r < m; ++r) {
      Xf.row(r) = X0.row(rows[static_cast<std::size_t>(r)]);
      yf(r) = y0(rows[static_cast<std::size_t>(r)]);
    }
    const GramProblem Pf = make_problem(minus(full, cross_products(Xf, yf)), shift_x, shift_y, kinds);
    Matrix beta;
    Vector intercepts;
    to_original_scale(Pf, solve_path(Pf, fit.path.lambdas), beta, intercepts);
    // Predictions in shifted coordinates: y0 + shift_y = a + (X0 + shift_x) b.
    const Vector offsets = intercepts + beta.transpose() * shift_x;
    const Matrix pred = (Xf * beta).rowwise() + (offsets.array() - shift_y).matrix().transpose();
    fold_mse.row(f) = (pred.colwise() - yf).array().square().colwise().mean();
    fold_weight(f) = static_cast<double>(m);
  }

  const double total_weight = fold_weight.sum();
  fit.cv_mean = (fold_weight.transpose() * fold_mse).transpose() / total_weight;
  fit.cv_se.resize(L);
  for (Index l = 0; l < L; ++l) {
    const double var = (fold_weight.array() * (fold_mse.col(l).array() - fit.cv_mean(l)).square()).sum() / total_weight;
    fit.cv_se(l) = std::sqrt(var / (spec.folds - 1));
  }

  Index best = 0;
  for (Index l = 1; l < L; ++l)
    if (fit.cv_mean(l) < fit.cv_mean(best)) best = l;
  Index chosen = best;
  if (spec.rule == LambdaRule::Lambda1SE) {
    const double limit = fit.cv_mean(best) + fit.cv_se(best);
    for (Index l = 0; l <= best; ++l) {
      if (fit.cv_mean(l) <= limit) {
        chosen = l;
        break;
      }
    }
  }
  fit.chosen_index = static_cast<int>(chosen);
  fit.lambda_chosen = fit.path.lambdas(chosen);
  fit.coefficients = fit.path.beta.col(chosen);
  fit.intercept = fit.path.intercepts(chosen);
  return fit;
}

}  // namespace vtwins
