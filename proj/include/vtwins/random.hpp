#pragma once

#include <cstdint>
#include <initializer_list>
#include <span>
#include <string_view>
#include <vector>

namespace vtwins {

/// Mixes a 64-bit value (splitmix64 finalizer).
std::uint64_t mix64(std::uint64_t x);

/// Counter-based seed derivation: the result depends only on the parent seed
/// and the ordered list of keys, never on call order or scheduling.
std::uint64_t derive_seed(std::uint64_t parent, std::initializer_list<std::uint64_t> keys);

/// Stable 64-bit FNV-1a hash for string keys used in seed derivation.
std::uint64_t hash_string(std::string_view text);

/// xoshiro256** generator with hand-written distributions so that draws are
/// identical across standard-library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next();
  /// Uniform on [0, 1) with 53 bits of resolution.
  double uniform();
  /// Standard normal (Marsaglia polar method).
  double normal();
  double normal(double mean, double sd) { return mean + sd * normal(); }
  bool bernoulli(double p) { return uniform() < p; }
  /// Uniform integer in [0, bound). bound must be positive.
  std::uint64_t below(std::uint64_t bound);

  /// Fisher-Yates shuffle.
  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::uint64_t state_[4];
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// Random permutation of 0..n-1.
std::vector<int> permutation(int n, Rng& rng);

/// Assigns each of n rows to one of k folds with balanced sizes, in random
/// order. fold[i] is in [0, k).
std::vector<int> fold_assignment(int n, int k, Rng& rng);

}  // namespace vtwins
