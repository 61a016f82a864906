#include "vtwins/vt.hpp"

#include "vtwins/random.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <string>
#include <thread>

namespace vtwins {

std::pair<FittedRegressor, FittedRegressor> fit_step1(const Dataset& d, const RegressorSpec& spec,
                                                      std::uint64_t seed) {
  const auto [control, treated] = split_by_arm(d);
  const auto kinds = d.kinds();
  FittedRegressor f0 = fit_regressor(spec, control.X, control.Y, derive_seed(seed, {0}), kinds);
  FittedRegressor f1 = fit_regressor(spec, treated.X, treated.Y, derive_seed(seed, {1}), kinds);
  return {std::move(f0), std::move(f1)};
}

CounterfactualPredictions compute_twins(const FittedRegressor& f0, const FittedRegressor& f1, const Matrix& X) {
  require(f0.n_features == f1.n_features, "arm models have different column layouts");
  CounterfactualPredictions cf;
  cf.y0_hat = f0.predict(X);
  cf.y1_hat = f1.predict(X);
  cf.z_hat = cf.y1_hat - cf.y0_hat;
  return cf;
}

VtFit run_vt(const Dataset& d, const VtSpec& spec) {
  d.validate();
  auto [f0, f1] = fit_step1(d, spec.step1, derive_seed(spec.seed, {0}));
  return run_vt(d, std::move(f0), std::move(f1), spec.step2, derive_seed(spec.seed, {1}));
}

VtFit run_vt(const Dataset& d, FittedRegressor f0, FittedRegressor f1, const StepTwoSpec& step2,
             std::uint64_t seed) {
  VtFit fit{std::move(f0), std::move(f1), {}, std::nullopt};
  fit.cf = compute_twins(fit.f0, fit.f1, d.X);
  if (step2.kind != StepTwoKind::None) fit.step2_model = fit_step2(d.X, fit.cf.z_hat, step2, seed, d.kinds());
  return fit;
}

Vector estimated_effect(const VtFit& fit, const Matrix& X) {
  if (fit.step2_model) return predict_effect(*fit.step2_model, X);
  return compute_twins(fit.f0, fit.f1, X).z_hat;
}

std::vector<int> predict_optimal_arm(const VtFit& fit, const Matrix& X) {
  const Vector effect = estimated_effect(fit, X);
  std::vector<int> arm(static_cast<std::size_t>(effect.size()));
  for (Index i = 0; i < effect.size(); ++i) arm[static_cast<std::size_t>(i)] = effect(i) > 0.0 ? 1 : 0;
  return arm;
}

double upper_quantile(std::vector<double> samples, double alpha) {
  require(!samples.empty(), "quantile of an empty sample");
  require(alpha > 0.0 && alpha < 1.0, "alpha must be in (0, 1)");
  std::sort(samples.begin(), samples.end());
  const auto M = static_cast<double>(samples.size());
  // Guard against (1 - alpha) M landing a hair above an integer.
  auto k = static_cast<std::size_t>(std::ceil((1.0 - alpha) * M - 1e-9));
  k = std::clamp<std::size_t>(k, 1, samples.size());
  return samples[k - 1];
}

CalibrationResult calibrate_step2_penalty(const Dataset& d, const RegressorSpec& step1, const StepTwoSpec& step2,
                                          int M, double alpha, std::uint64_t seed, int workers) {
  require(M >= 1, "calibration: M must be >= 1");
  require(alpha > 0.0 && alpha < 1.0, "calibration: alpha must be in (0, 1)");
  require(step2.kind != StepTwoKind::None, "calibration: step 2 kind None has no penalty");
  d.validate();
  std::vector<double> samples(static_cast<std::size_t>(M), 0.0);
  std::atomic<int> next{0};
  std::mutex error_mutex;
  int failed_rep = -1;
  std::string failure;

  auto work = [&] {
    while (true) {
      const int m = next.fetch_add(1);
      if (m >= M) return;
      try {
        Dataset permuted = d;
        Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(m), 0}));
        rng.shuffle(permuted.T);
        auto [f0, f1] = fit_step1(permuted, step1, derive_seed(seed, {static_cast<std::uint64_t>(m), 1}));
        const Vector z = compute_twins(f0, f1, permuted.X).z_hat;
        samples[static_cast<std::size_t>(m)] = null_penalty(permuted.X, z, step2, permuted.kinds());
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (failed_rep < 0 || m < failed_rep) {
          failed_rep = m;
          failure = e.what();
        }
      }
    }
  };
  const int n_threads = std::clamp(workers, 1, M);
  if (n_threads == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (failed_rep >= 0)
    throw Error("calibration repetition " + std::to_string(failed_rep) + " failed: " + failure);

  CalibrationResult result;
  result.M = M;
  result.alpha = alpha;
  result.samples = Eigen::Map<const Vector>(samples.data(), M);
  result.threshold = upper_quantile(samples, alpha);
  return result;
}

}  // namespace vtwins
