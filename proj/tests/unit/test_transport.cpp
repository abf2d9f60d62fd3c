#include <doctest.h>

#include <cmath>
#include <random>

#include "chaoskit/transport.hpp"
#include "oracles.hpp"

using namespace chaoskit;

TEST_SUITE("transport") {
  TEST_CASE("identical multisets are at distance zero") {
    const EmpiricalMeasure a(2, {0, 0, 1, 2, -3, 4});
    const EmpiricalMeasure b(2, {-3, 4, 0, 0, 1, 2});
    CHECK(wp_exact(a, b, 1.0).value == 0.0);
    CHECK(wp_exact(a, b, 2.0).value == 0.0);
  }

  TEST_CASE("two-point example in one dimension") {
    const EmpiricalMeasure a(1, {0.0, 1.0}), b(1, {0.5, 1.5});
    CHECK(wp_exact(a, b, 1.0).value == doctest::Approx(0.5));
    CHECK(wp_1d(a, b, 1.0).value == doctest::Approx(0.5));
  }

  TEST_CASE("exact solver matches permutation enumeration") {
    std::mt19937_64 gen(11);
    std::uniform_int_distribution<int> size(1, 7), dim(1, 4);
    for (int trial = 0; trial < 60; ++trial) {
      const auto n = static_cast<std::size_t>(size(gen));
      const int m = dim(gen);
      const auto a = oracle::gaussian_cloud(n, m, 100 + trial);
      const auto b = oracle::gaussian_cloud(n, m, 200 + trial, 0.3);
      for (double p : {1.0, 2.0, 3.0}) {
        const double got = wp_exact(EmpiricalMeasure(m, a), EmpiricalMeasure(m, b), p).value;
        CHECK(got == doctest::Approx(oracle::brute_force_wp(a, b, m, p)).epsilon(1e-12));
      }
    }
  }

  TEST_CASE("assignment on a hand-made cost matrix") {
    const std::vector<double> cost{4, 1, 3, 2, 0, 5, 3, 2, 2};
    const Assignment s = solve_assignment(cost, 3);
    CHECK(s.cost == doctest::Approx(5.0));
    CHECK(s.row_to_col == std::vector<std::size_t>{1, 0, 2});
  }

  TEST_CASE("one-dimensional methods agree with the exact solver") {
    const auto a = oracle::gaussian_cloud(300, 1, 1);
    const auto b = oracle::gaussian_cloud(300, 1, 2, 0.5);
    const EmpiricalMeasure ma(1, a), mb(1, b);
    for (double p : {1.0, 1.5, 2.0}) {
      const double exact = wp_exact(ma, mb, p).value;
      CHECK(wp_1d(ma, mb, p).value == doctest::Approx(exact).epsilon(1e-12));
      CHECK(wp_sliced(ma, mb, p, 4, StreamKey{1, StreamRole::Projection, 0}).value ==
            doctest::Approx(exact).epsilon(1e-12));
    }
  }

  TEST_CASE("sliced distance of identical clouds") {
    const EmpiricalMeasure a(2, oracle::gaussian_cloud(100, 2, 3));
    const auto r = wp_sliced(a, a, 2.0, 50, StreamKey{1, StreamRole::Projection, 0});
    CHECK(r.value == 0.0);
    CHECK(r.std_error == 0.0);
  }

  TEST_CASE("sliced distance recovers a shift in two dimensions") {
    const std::size_t n = 10000;
    auto shifted = oracle::gaussian_cloud(n, 2, 5);
    for (std::size_t i = 0; i < n; ++i) shifted[2 * i] += 1.0;
    const EmpiricalMeasure a(2, oracle::gaussian_cloud(n, 2, 4)), b(2, shifted);
    const double sliced = wp_sliced(a, b, 2.0, 200, StreamKey{2, StreamRole::Projection, 0}).value;
    const double exact = wp_exact(a.slice(0, 1024), b.slice(0, 1024), 2.0).value;
    CHECK(std::abs(sliced - exact) <= 0.2 * exact);
  }

  TEST_CASE("metric axioms") {
    std::mt19937_64 gen(17);
    for (int t = 0; t < 20; ++t) {
      const EmpiricalMeasure a(3, oracle::gaussian_cloud(40, 3, gen()));
      const EmpiricalMeasure b(3, oracle::gaussian_cloud(40, 3, gen(), 0.2));
      const EmpiricalMeasure c(3, oracle::gaussian_cloud(40, 3, gen(), -0.4));
      for (double p : {1.0, 2.0}) {
        const double ab = wp_exact(a, b, p).value, ba = wp_exact(b, a, p).value;
        const double bc = wp_exact(b, c, p).value, ac = wp_exact(a, c, p).value;
        CHECK(ab == doctest::Approx(ba).epsilon(1e-12));
        CHECK(ab > 0.0);
        CHECK(ac <= ab + bc + 1e-12);
      }
    }
  }

  TEST_CASE("coupled sup distance") {
    Ensemble a(2, 1), b(2, 1);
    a.x = {0.0, 0.0};
    a.v = {0.0, 0.0};
    CHECK(coupled_sup(a, a, true, 100).value == 0.0);
    b.x = {0.1, 0.0};
    b.v = {0.0, 0.2};
    CHECK(coupled_sup(a, b, true, std::exp(1.0)).value == doctest::Approx(0.3));
  }

  TEST_CASE("coupled sup dominates the optimal coupling") {
    std::mt19937_64 gen(23);
    std::normal_distribution<double> g;
    for (int t = 0; t < 100; ++t) {
      Ensemble a(2, 12), b(2, 12);
      for (auto* v : {&a.x, &a.v, &b.x, &b.v})
        for (auto& c : *v) c = g(gen);
      const double sup = coupled_sup(a, b, false, 12).value;
      for (double p : {1.0, 2.0, 4.0}) CHECK(wp_exact(phase_space(a), phase_space(b), p).value <= sup + 1e-12);
    }
  }

  TEST_CASE("J functional") {
    Ensemble a(2, 1), b(2, 1);
    a.x = a.v = {0.0, 0.0};
    CHECK(j_functional(a, a, 0.3, 100) == 0.0);
    b.x = {100.0, 0.0};
    b.v = {0.0, 0.0};
    CHECK(j_functional(a, b, 0.3, 100) == 1.0);
    // N = e and N^delta = 2: delta = ln 2.
    b.x = {0.1, 0.0};
    b.v = {0.0, 0.2};
    CHECK(j_functional(a, b, std::log(2.0), std::exp(1.0)) == doctest::Approx(0.6));
  }

  TEST_CASE("input validation") {
    const EmpiricalMeasure a(1, {0.0, 1.0}), b(1, {0.0});
    CHECK_THROWS_WITH(wp_exact(a, b, 1.0), "unbalanced not supported");
    CHECK_THROWS_AS(wp_exact(a, a, 0.5), std::invalid_argument);
  }
}
