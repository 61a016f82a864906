#include "vtwins/regressor.hpp"

namespace vtwins {

namespace {
template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void validate_base(const BaseLearnerSpec& spec) {
  std::visit(overloaded{
                 [](const LassoSpec& s) {
                   require(s.folds >= 2, "lasso spec: folds must be at least 2");
                   require(s.n_lambda >= 1, "lasso spec: n_lambda must be positive");
                 },
                 [](const ForestSpec& s) {
                   require(s.n_trees >= 1, "forest spec: n_trees must be at least 1");
                   require(!s.nodesize_grid.empty(), "forest spec: nodesize grid is empty");
                 },
                 [](const MarsSpec& s) {
                   require(s.max_terms >= 1, "mars spec: max_terms must be at least 1");
                   require(s.degree >= 1, "mars spec: degree must be at least 1");
                 },
             },
             spec);
}
}  // namespace

Vector FittedRegressor::predict(const Matrix& X) const {
  require(X.cols() == n_features, "predict: column mismatch (expected " + std::to_string(n_features) + ", got " +
                                      std::to_string(X.cols()) + ")");
  Vector out = std::visit(overloaded{
                              [&](const FunctionFit& f) { return Vector(f.fn(X)); },
                              [&](const auto& fit) { return Vector(fit.predict(X)); },
                          },
                          model);
  require(out.size() == X.rows() && out.allFinite(), "predict: non-finite prediction");
  return out;
}

std::string regressor_name(const RegressorSpec& spec) {
  return std::visit(overloaded{
                        [](const LassoSpec&) { return std::string("lasso"); },
                        [](const ForestSpec&) { return std::string("forest"); },
                        [](const MarsSpec&) { return std::string("mars"); },
                        [](const SuperLearnerSpec&) { return std::string("superlearner"); },
                    },
                    spec);
}

RegressorSpec regressor_from_name(const std::string& name) {
  if (name == "lasso") return LassoSpec{};
  if (name == "forest" || name == "rf") return ForestSpec{};
  if (name == "mars") return MarsSpec{};
  if (name == "superlearner" || name == "sl") return SuperLearnerSpec{};
  throw Error("unknown step-1 learner: " + name);
}

void validate_spec(const RegressorSpec& spec) {
  std::visit(overloaded{
                 [](const SuperLearnerSpec& s) {
                   require(s.folds >= 2, "superlearner spec: folds must be at least 2");
                   require(!s.candidates.empty(), "superlearner spec: candidate list is empty");
                   for (const auto& c : s.candidates) validate_base(c);
                 },
                 [](const auto& s) { validate_base(BaseLearnerSpec(s)); },
             },
             spec);
}

Vector predict_base(const BaseLearnerFit& fit, const Matrix& X) {
  return std::visit([&](const auto& f) { return Vector(f.predict(X)); }, fit);
}

BaseLearnerFit fit_base(const BaseLearnerSpec& spec, const Matrix& X, const Vector& y, std::uint64_t seed,
                        const std::vector<ColumnKind>& kinds) {
  return std::visit(overloaded{
                        [&](const LassoSpec& s) { return BaseLearnerFit(fit_lasso(X, y, s, seed, kinds)); },
                        [&](const ForestSpec& s) { return BaseLearnerFit(fit_forest(X, y, s, seed)); },
                        [&](const MarsSpec& s) { return BaseLearnerFit(fit_mars(X, y, s)); },
                    },
                    spec);
}

FittedRegressor fit_regressor(const RegressorSpec& spec, const Matrix& X, const Vector& y, std::uint64_t seed,
                              const std::vector<ColumnKind>& kinds) {
  validate_spec(spec);
  FittedRegressor out;
  out.n_features = static_cast<int>(X.cols());
  std::visit(overloaded{
                 [&](const LassoSpec& s) { out.model = fit_lasso(X, y, s, seed, kinds); },
                 [&](const ForestSpec& s) { out.model = fit_forest(X, y, s, seed); },
                 [&](const MarsSpec& s) { out.model = fit_mars(X, y, s); },
                 [&](const SuperLearnerSpec& s) { out.model = fit_superlearner(X, y, s, seed, kinds); },
             },
             spec);
  return out;
}

FittedRegressor function_regressor(std::function<Vector(const Matrix&)> fn, int n_features) {
  FittedRegressor out;
  out.n_features = n_features;
  out.model = FunctionFit{std::move(fn), n_features};
  return out;
}

}  // namespace vtwins
