#include "uqr/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "doctest.h"

using namespace uqr;

TEST_CASE("equal seeds replay equal sequences") {
  Rng a(123456789), b(123456789);
  for (int i = 0; i < 10000; ++i) {
    REQUIRE(a.next_u64() == b.next_u64());
  }
}

TEST_CASE("different seeds diverge") {
  Rng a(1), b(2);
  int same = 0;
  for (int i = 0; i < 100; ++i) same += a.next_u64() == b.next_u64();
  CHECK(same == 0);
}

TEST_CASE("child streams are independent of the parent position") {
  Rng parent(42);
  Rng c1 = parent.child(3);
  parent.next_u64();  // advancing the parent must not move the child stream
  Rng c2 = parent.child(3);
  for (int i = 0; i < 100; ++i) REQUIRE(c1.next_u64() == c2.next_u64());

  Rng other = parent.child(4);
  CHECK(other.next_u64() != parent.child(3).next_u64());
}

TEST_CASE("uniform01 covers [0,1) with sane moments") {
  Rng rng(7);
  const int n = 100000;
  double sum = 0, sumsq = 0, lo = 1, hi = 0;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform01();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    sum += u;
    sumsq += u * u;
    lo = std::min(lo, u);
    hi = std::max(hi, u);
  }
  CHECK(sum / n == doctest::Approx(0.5).epsilon(0.01));
  CHECK(sumsq / n == doctest::Approx(1.0 / 3).epsilon(0.01));
  CHECK(lo < 0.001);
  CHECK(hi > 0.999);
}

TEST_CASE("normal draws have standard moments") {
  Rng rng(99);
  const int n = 200000;
  double s1 = 0, s2 = 0, s4 = 0;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    s1 += z;
    s2 += z * z;
    s4 += z * z * z * z;
  }
  CHECK(s1 / n == doctest::Approx(0.0).epsilon(1).scale(0.02));
  CHECK(s2 / n == doctest::Approx(1.0).epsilon(0.02));
  CHECK(s4 / n == doctest::Approx(3.0).epsilon(0.05));
}

TEST_CASE("below is in range and roughly uniform") {
  Rng rng(5);
  std::vector<int> counts(10, 0);
  for (int i = 0; i < 100000; ++i) {
    const std::uint64_t v = rng.below(10);
    REQUIRE(v < 10);
    ++counts[static_cast<std::size_t>(v)];
  }
  for (int c : counts) CHECK(c == doctest::Approx(10000).epsilon(0.05));
}

TEST_CASE("shuffle is a permutation and seed-stable") {
  std::vector<int> v(50);
  std::iota(v.begin(), v.end(), 0);
  Rng r1(31), r2(31);
  auto a = v, b = v;
  r1.shuffle(a);
  r2.shuffle(b);
  CHECK(a == b);
  CHECK(a != v);  // 50! permutations; identity is effectively impossible
  auto sorted = a;
  std::sort(sorted.begin(), sorted.end());
  CHECK(sorted == v);
}
