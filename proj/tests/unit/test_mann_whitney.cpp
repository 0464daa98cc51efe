#include <random>

#include "doctest.h"
#include "emotionpush/error.hpp"
#include "emotionpush/mann_whitney.hpp"
#include "oracles.hpp"

using emotionpush::InvalidArgument;
using emotionpush::service::mann_whitney;

TEST_CASE("exact small sample: {1,2,3} vs {10,20,30}") {
  const std::vector<double> a{1, 2, 3}, b{10, 20, 30};
  const auto r = mann_whitney(a, b);
  CHECK(r.exact);
  CHECK(r.u == 0.0);
  CHECK(r.p == 0.1);
  CHECK(r.p == oracle::mann_whitney_enumerate(a, b));
  // swapping samples mirrors U and keeps p
  const auto s = mann_whitney(b, a);
  CHECK(s.u == 9.0);
  CHECK(s.p == 0.1);
}

TEST_CASE("exact p agrees with enumeration on random tie-free samples") {
  std::mt19937_64 gen(4);
  std::uniform_real_distribution<double> unit;
  for (int k = 0; k < 200; ++k) {
    const std::size_t na = 1 + gen() % 7;
    const std::size_t nb = 1 + gen() % (12 - na);
    std::vector<double> a(na), b(nb);
    for (auto& v : a) v = unit(gen);
    for (auto& v : b) v = unit(gen) + 0.2;
    const auto r = mann_whitney(a, b);
    CHECK(r.exact);
    CHECK(r.u == oracle::u_statistic(a, b));
    CHECK(r.p == doctest::Approx(oracle::mann_whitney_enumerate(a, b)).epsilon(1e-12));
  }
}

TEST_CASE("all ties give p = 1") {
  const std::vector<double> a{5, 5, 5};
  const auto r = mann_whitney(a, a);
  CHECK(r.p == 1.0);
  CHECK_FALSE(r.exact);
}

TEST_CASE("ties switch to the normal approximation") {
  const std::vector<double> a{1, 2, 2}, b{2, 3, 4};
  CHECK_FALSE(mann_whitney(a, b).exact);
}

TEST_CASE("normal approximation agrees with a permutation oracle at n = m = 50") {
  std::mt19937_64 gen(50);
  std::normal_distribution<double> normal;
  for (int fixture = 0; fixture < 3; ++fixture) {
    std::vector<double> a(50), b(50);
    for (auto& v : a) v = normal(gen);
    for (auto& v : b) v = normal(gen) + 0.35;
    if (fixture == 2) {
      // coarse rounding creates ties
      for (auto& v : a) v = std::round(v * 2) / 2;
      for (auto& v : b) v = std::round(v * 2) / 2;
    }
    const auto r = mann_whitney(a, b);
    const double ref = oracle::mann_whitney_permutation(a, b, 200000, 99 + fixture);
    CHECK(std::abs(r.p - ref) <= 0.005);
    CHECK(r.u == oracle::u_statistic(a, b));
  }
}

TEST_CASE("large disjoint samples are highly significant") {
  std::vector<double> a, b;
  for (int i = 0; i < 50; ++i) {
    a.push_back(i);
    b.push_back(100 + i);
  }
  CHECK(mann_whitney(a, b).p < 0.001);
}

TEST_CASE("empty sample is rejected") {
  const std::vector<double> a{1}, none;
  CHECK_THROWS_AS(mann_whitney(a, none), InvalidArgument);
  CHECK_THROWS_AS(mann_whitney(none, a), InvalidArgument);
}
