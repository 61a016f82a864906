#include "vtwins/mars.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace vtwins {

double mars_effective_params(int terms, double penalty) { return terms + penalty * (terms - 1) / 2.0; }

double mars_gcv(double rss, int n, int terms, double penalty) {
  const double c = mars_effective_params(terms, penalty);
  if (c >= n) return std::numeric_limits<double>::infinity();
  const double shrink = 1.0 - c / n;
  return rss / (n * shrink * shrink);
}

double mars_default_penalty(int degree) { return degree > 1 ? 3.0 : 2.0; }

Vector MarsFit::predict(const Matrix& X) const {
  require(X.cols() == n_features, "mars predict: column mismatch");
  Vector out = Vector::Constant(X.rows(), intercept);
  for (std::size_t t = 0; t < basis.size(); ++t) {
    for (Index i = 0; i < X.rows(); ++i) {
      double v = coefficients(static_cast<Index>(t));
      for (const auto& h : basis[t].factors) v *= h(X(i, h.var));
      out(i) += v;
    }
  }
  return out;
}

std::vector<int> MarsFit::variables() const {
  std::vector<int> vars;
  for (const auto& term : basis)
    for (const auto& h : term.factors) vars.push_back(h.var);
  std::sort(vars.begin(), vars.end());
  vars.erase(std::unique(vars.begin(), vars.end()), vars.end());
  return vars;
}

namespace {

// Orthonormal basis grown by modified Gram-Schmidt with one
// re-orthogonalization pass.
struct OrthoBasis {
  std::vector<Vector> q;

  // Returns false (and leaves the basis untouched) for numerically dependent columns.
  bool add(const Vector& column, Vector* residual) {
    const double norm0 = column.norm();
    if (!(norm0 > 0.0)) return false;
    Vector v = column;
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& u : q) v -= u.dot(v) * u;
    const double norm = v.norm();
    if (norm <= 1e-9 * norm0) return false;
    v /= norm;
    if (residual) *residual -= v.dot(*residual) * v;
    q.push_back(std::move(v));
    return true;
  }
};

struct Candidate {
  double reduction = -1.0;
  int parent = -1;
  int var = -1;
  double knot = 0.0;
};

int auto_endspan(int p) { return static_cast<int>(std::ceil(3.0 - std::log2(0.05 / p))); }

int auto_minspan(int p, int count) {
  if (count <= 0) return 1;
  const double span = -std::log2(-std::log(1.0 - 0.05) / (static_cast<double>(p) * count)) / 2.5;
  return std::max(1, static_cast<int>(std::floor(span)));
}

double least_squares_rss(const Matrix& B, const std::vector<int>& cols, const Vector& y, Vector* coef) {
  Matrix sub(B.rows(), static_cast<Index>(cols.size()));
  for (std::size_t k = 0; k < cols.size(); ++k) sub.col(static_cast<Index>(k)) = B.col(cols[k]);
  Eigen::ColPivHouseholderQR<Matrix> qr(sub);
  const Vector beta = qr.solve(y);
  if (coef) *coef = beta;
  return (y - sub * beta).squaredNorm();
}

}  // namespace

MarsFit fit_mars(const Matrix& X, const Vector& y, const MarsSpec& spec) {
  const auto n = static_cast<int>(X.rows());
  const auto p = static_cast<int>(X.cols());
  require(n >= 4, "mars: need at least 4 rows");
  require(p >= 1, "mars: no covariates");
  require(y.size() == n, "mars: row mismatch");
  require(spec.max_terms >= 1 && spec.degree >= 1, "mars: invalid spec");
  require(X.allFinite() && y.allFinite(), "mars: non-finite input");
  const double penalty = mars_default_penalty(spec.degree);
  require(n > mars_effective_params(1, penalty), "mars: too few rows for the intercept-only model");

  const int endspan = spec.endspan > 0 ? spec.endspan : auto_endspan(p);

  // Columns of the full forward basis; column 0 is the intercept.
  std::vector<Vector> columns = {Vector::Ones(n)};
  std::vector<MarsTerm> terms = {MarsTerm{}};
  OrthoBasis ortho;
  Vector residual = y;
  ortho.add(columns[0], &residual);
  const double tss = residual.squaredNorm();
  double rss = tss;

  MarsFit fit;
  fit.n_features = p;
  fit.forward_rss.push_back(rss);

  std::vector<int> order;
  std::vector<double> knots_seen;
  while (static_cast<int>(columns.size()) < spec.max_terms && tss > 0.0) {
    Candidate best;
    const auto M = static_cast<Index>(ortho.q.size());
    for (std::size_t parent = 0; parent < terms.size(); ++parent) {
      if (static_cast<int>(terms[parent].factors.size()) >= spec.degree) continue;
      const Vector& bm = columns[parent];
      std::vector<int> support;
      for (int i = 0; i < n; ++i)
        if (bm(i) != 0.0) support.push_back(i);
      if (support.size() < 3) continue;
      const int minspan = spec.minspan > 0 ? spec.minspan : auto_minspan(p, static_cast<int>(support.size()));

      for (int j = 0; j < p; ++j) {
        bool used = false;
        for (const auto& h : terms[parent].factors) used = used || h.var == j;
        if (used) continue;

        // Linear part parent * x_j, orthogonalized against the current basis.
        Vector a = bm.cwiseProduct(X.col(j));
        Vector a_perp = a;
        for (int pass = 0; pass < 2; ++pass)
          for (const auto& u : ortho.q) a_perp -= u.dot(a_perp) * u;
        double reduction_a = 0.0;
        Vector a_hat = Vector::Zero(n);
        const double a_norm = a_perp.norm();
        if (a_norm > 1e-9 * a.norm()) {
          a_hat = a_perp / a_norm;
          const double ra = a_hat.dot(residual);
          reduction_a = ra * ra;
        }
        const Vector res_after = residual - a_hat.dot(residual) * a_hat;

        // Sweep knots from the largest x down, with running sums over rows
        // strictly above the knot.
        order = support;
        std::sort(order.begin(), order.end(), [&](int r1, int r2) {
          return X(r1, j) > X(r2, j) || (X(r1, j) == X(r2, j) && r1 < r2);
        });
        knots_seen.clear();
        for (int r : order)
          if (knots_seen.empty() || X(r, j) != knots_seen.back()) knots_seen.push_back(X(r, j));
        const int distinct = static_cast<int>(knots_seen.size());
        if (distinct < 3) continue;

        const Index V = M + 2;  // q_1..q_M, a_hat, res_after
        Vector sum_bxv = Vector::Zero(V), sum_bv = Vector::Zero(V);
        double s_b2x2 = 0.0, s_b2x = 0.0, s_b2 = 0.0;
        Vector hv(V);
        std::size_t cursor = 0;
        // knots_seen is descending; index k counts distinct values above.
        for (int k = 0; k < distinct; ++k) {
          const double t = knots_seen[static_cast<std::size_t>(k)];
          const int above = k;
          const int below = distinct - 1 - k;
          const bool eligible = above >= endspan && below >= endspan && (below - endspan) % minspan == 0;
          if (eligible && k > 0) {
            hv = sum_bxv - t * sum_bv;
            const double hh = s_b2x2 - 2.0 * t * s_b2x + t * t * s_b2;
            double perp = hh - hv.head(M + 1).squaredNorm();
            if (perp > 1e-9 * hh && hh > 0.0) {
              const double hr = hv(M + 1);
              const double total = reduction_a + hr * hr / perp;
              const double tie = 1e-12 * tss;
              const bool same_column = best.parent == static_cast<int>(parent) && best.var == j;
              if (total > best.reduction + tie || (same_column && total >= best.reduction - tie && t < best.knot)) {
                best = {total, static_cast<int>(parent), j, t};
              }
            }
          }
          while (cursor < order.size() && X(order[cursor], j) == t) {
            const int r = order[cursor++];
            const double b = bm(r), x = X(r, j);
            for (Index v = 0; v < M; ++v) {
              const double qv = ortho.q[static_cast<std::size_t>(v)](r);
              sum_bxv(v) += b * x * qv;
              sum_bv(v) += b * qv;
            }
            sum_bxv(M) += b * x * a_hat(r);
            sum_bv(M) += b * a_hat(r);
            sum_bxv(M + 1) += b * x * res_after(r);
            sum_bv(M + 1) += b * res_after(r);
            s_b2x2 += b * b * x * x;
            s_b2x += b * b * x;
            s_b2 += b * b;
          }
        }
      }
    }
    if (best.parent < 0 || best.reduction / tss < spec.threshold) break;

    const Vector bm = columns[static_cast<std::size_t>(best.parent)];
    bool added = false;
    for (int direction : {1, -1}) {
      if (static_cast<int>(columns.size()) >= spec.max_terms) break;
      const Hinge h{best.var, best.knot, direction};
      Vector col(n);
      for (int i = 0; i < n; ++i) col(i) = bm(i) * h(X(i, best.var));
      if (!ortho.add(col, &residual)) continue;
      MarsTerm term = terms[static_cast<std::size_t>(best.parent)];
      term.factors.push_back(h);
      terms.push_back(std::move(term));
      columns.push_back(std::move(col));
      added = true;
    }
    if (!added) break;
    const double new_rss = residual.squaredNorm();
    fit.forward_rss.push_back(new_rss);
    rss = new_rss;
    if (rss / tss <= spec.threshold) break;
  }

  // Backward pass: greedy deletion, keeping the subset with the lowest GCV.
  const auto total = static_cast<Index>(columns.size());
  Matrix B(n, total);
  for (Index c = 0; c < total; ++c) B.col(c) = columns[static_cast<std::size_t>(c)];
  std::vector<int> current(static_cast<std::size_t>(total));
  std::iota(current.begin(), current.end(), 0);
  double current_rss = least_squares_rss(B, current, y, nullptr);
  std::vector<int> best_set = current;
  double best_gcv = mars_gcv(current_rss, n, static_cast<int>(current.size()), penalty);
  while (current.size() > 1) {
    double drop_rss = std::numeric_limits<double>::infinity();
    std::size_t drop = 0;
    for (std::size_t k = 1; k < current.size(); ++k) {
      std::vector<int> trial = current;
      trial.erase(trial.begin() + static_cast<std::ptrdiff_t>(k));
      const double r = least_squares_rss(B, trial, y, nullptr);
      if (r < drop_rss) {
        drop_rss = r;
        drop = k;
      }
    }
    current.erase(current.begin() + static_cast<std::ptrdiff_t>(drop));
    const double g = mars_gcv(drop_rss, n, static_cast<int>(current.size()), penalty);
    if (g <= best_gcv) {
      best_gcv = g;
      best_set = current;
    }
  }
  require(std::isfinite(best_gcv), "mars: too few rows for any model");

  Vector coef;
  fit.rss = least_squares_rss(B, best_set, y, &coef);
  fit.gcv = best_gcv;
  fit.intercept = coef(0);
  fit.coefficients.resize(static_cast<Index>(best_set.size()) - 1);
  for (std::size_t k = 1; k < best_set.size(); ++k) {
    fit.basis.push_back(terms[static_cast<std::size_t>(best_set[k])]);
    fit.coefficients(static_cast<Index>(k) - 1) = coef(static_cast<Index>(k));
  }
  return fit;
}

}  // namespace vtwins
