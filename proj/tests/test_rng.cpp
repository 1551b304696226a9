#include <doctest.h>

#include <cmath>

#include "pmw/rng.hpp"

using pmw::Rng;

TEST_CASE("identical seeds give identical sequences") {
  Rng a(123), b(123);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("streams are independent of draw order") {
  Rng base(7);
  base.next_u64();
  base.next_u64();
  Rng fresh(7);
  CHECK(base.stream("dropout").next_u64() == fresh.stream("dropout").next_u64());
  CHECK(base.stream("dropout").next_u64() != fresh.stream("shuffle").next_u64());
  CHECK(base.stream("x", 1).next_u64() != base.stream("x", 2).next_u64());
}

TEST_CASE("uniform and next_below stay in range") {
  Rng rng(99);
  for (int i = 0; i < 1000; ++i) {
    const double v = rng.next_double();
    CHECK(v >= 0.0);
    CHECK(v < 1.0);
    const auto n = rng.next_below(17);
    CHECK(n < 17);
  }
}

TEST_CASE("normal draws have sane moments") {
  Rng rng(5);
  double sum = 0, sq = 0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const double v = rng.next_normal();
    sum += v;
    sq += v * v;
  }
  CHECK(std::fabs(sum / n) < 0.03);
  CHECK(std::fabs(sq / n - 1.0) < 0.05);
}

TEST_CASE("seeded shuffle is deterministic") {
  std::vector<int> a{1, 2, 3, 4, 5, 6, 7, 8};
  std::vector<int> b = a;
  Rng ra(11), rb(11);
  pmw::shuffle(a, ra);
  pmw::shuffle(b, rb);
  CHECK(a == b);
}
