#include "vtwins/random.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

using namespace vtwins;

TEST_SUITE("random") {

TEST_CASE("same seed, same stream") {
  Rng a(42), b(42), c(43);
  for (int i = 0; i < 100; ++i) CHECK(a.next() == b.next());
  Rng d(42);
  CHECK(d.next() != c.next());
}

TEST_CASE("derived seeds depend on keys, not call order") {
  const auto s1 = derive_seed(7, {1, 2, 3});
  const auto s2 = derive_seed(7, {3, 2, 1});
  CHECK(s1 != s2);
  CHECK(derive_seed(7, {1, 2, 3}) == s1);
  std::set<std::uint64_t> seen;
  for (std::uint64_t a = 0; a < 20; ++a)
    for (std::uint64_t b = 0; b < 20; ++b)
      for (std::uint64_t c = 0; c < 20; ++c) seen.insert(derive_seed(1, {a, b, c}));
  CHECK(seen.size() == 8000);
}

TEST_CASE("uniform and normal moments") {
  Rng rng(1);
  const int n = 200000;
  double su = 0, sn = 0, sn2 = 0;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    CHECK_FALSE((u < 0.0 || u >= 1.0));
    su += u;
    const double z = rng.normal();
    sn += z;
    sn2 += z * z;
  }
  CHECK(std::abs(su / n - 0.5) < 0.005);
  CHECK(std::abs(sn / n) < 0.01);
  CHECK(std::abs(sn2 / n - 1.0) < 0.02);
}

TEST_CASE("below stays in range and folds are balanced") {
  Rng rng(2);
  for (int i = 0; i < 1000; ++i) CHECK(rng.below(7) < 7);
  const auto fold = fold_assignment(103, 10, rng);
  std::vector<int> counts(10, 0);
  for (int f : fold) ++counts[static_cast<std::size_t>(f)];
  CHECK(*std::max_element(counts.begin(), counts.end()) - *std::min_element(counts.begin(), counts.end()) <= 1);
  auto perm = permutation(50, rng);
  std::sort(perm.begin(), perm.end());
  for (int i = 0; i < 50; ++i) CHECK(perm[static_cast<std::size_t>(i)] == i);
}

}
