#include <doctest.h>

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "chaoskit/gronwall.hpp"
#include "oracles.hpp"

using namespace chaoskit;

namespace {

ScalarPath sample(double step, double end, double (*fn)(double)) {
  ScalarPath p;
  const auto n = static_cast<std::size_t>(std::llround(end / step));
  for (std::size_t k = 0; k <= n; ++k) {
    const double t = static_cast<double>(k) * step;
    p.grid.push_back(t);
    p.values.push_back(fn(t));
  }
  return p;
}

}  // namespace

TEST_SUITE("gronwall") {
  TEST_CASE("linear bound: closed forms") {
    const double step = 1e-4;
    const ScalarPath h = sample(step, 1.0, [](double t) { return t; });
    const ScalarPath dh = sample(step, 1.0, [](double) { return 1.0; });
    const ScalarPath g = sample(step, 1.0, [](double) { return 1.0; });
    // int_0^1 e^(1-s) ds = e - 1.
    CHECK(std::abs(gronwall1_bound(h, dh, g, 1.0) - (std::numbers::e - 1.0)) < 1e-6);

    const ScalarPath zero = sample(step, 1.0, [](double) { return 0.0; });
    CHECK(gronwall1_bound(h, dh, zero, 0.6) == doctest::Approx(0.6).epsilon(1e-9));

    const ScalarPath h0 = sample(step, 1.0, [](double) { return 2.0; });
    const ScalarPath g0 = sample(step, 1.0, [](double) { return 0.7; });
    CHECK(gronwall1_bound(h0, zero, g0, 0.8) == doctest::Approx(2.0 * std::exp(0.7 * 0.8)).epsilon(1e-9));
    CHECK_THROWS_WITH(gronwall1_bound(h0, zero, g0, 1.5), "time outside grid");
  }

  TEST_CASE("linear bound dominates the Volterra solution") {
    const double step = 1e-3;
    const ScalarPath h = sample(step, 1.0, [](double t) { return 0.1 + t * t; });
    const ScalarPath dh = sample(step, 1.0, [](double t) { return 2.0 * t; });
    const ScalarPath g = sample(step, 1.0, [](double t) { return 1.0 + std::sin(3.0 * t) * std::sin(3.0 * t); });
    const auto bound = gronwall1_curve(h, dh, g);
    // Independent oracle: Picard iteration of f = h + int g f with trapezoids.
    std::vector<double> f = h.values;
    for (int it = 0; it < 60; ++it) {
      std::vector<double> next(f.size());
      double acc = 0.0;
      next[0] = h.values[0];
      for (std::size_t k = 1; k < f.size(); ++k) {
        acc += 0.5 * step * (g.values[k - 1] * f[k - 1] + g.values[k] * f[k]);
        next[k] = h.values[k] + acc;
      }
      f = next;
    }
    for (std::size_t k = 0; k < f.size(); k += 50) CHECK(f[k] <= bound[k] * (1.0 + 1e-4));
    // For this h the inequality is an equality up to discretisation.
    CHECK(f.back() == doctest::Approx(bound.back()).epsilon(1e-4));
  }

  TEST_CASE("logarithmic bound") {
    CHECK(gronwall2_bound(0.0, 1.0, 0.7, 1.0) == 0.0);
    CHECK(gronwall2_bound(1e-3, 1.0, 0.0, 1.0) == doctest::Approx(1e-3).epsilon(1e-12));
    const double b = gronwall2_bound(1e-3, 1.0, 1.0, 1.0);
    CHECK(b == doctest::Approx(0.1482).epsilon(1e-3));
    // f' = f (1 - ln^- f) = f (1 - ln f) while f < 1.
    const double rk = oracle::rk4([](double f) { return f * (1.0 - std::min(std::log(f), 0.0)); }, 1e-3, 1.0, 1e-5);
    CHECK(rk <= b * (1.0 + 1e-9));
    CHECK(std::abs(rk - b) < 1e-6);
    CHECK_THROWS_WITH(gronwall2_bound(0.5, 1.0, 0.1, 1.0), "initial datum too large for log-Gronwall");
  }

  TEST_CASE("superlinear bound") {
    CHECK(gronwall3_bound(1.3, 1.0, 2.5, 0.0) == doctest::Approx(1.3));
    CHECK(gronwall3_bound(1.0, 1.0, 2.0, 0.5) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(std::abs(oracle::rk4([](double f) { return f * f; }, 1.0, 0.5, 1e-5) - 2.0) < 1e-6);
    CHECK(gronwall3_bound(1.0, 1.0, 3.0, 0.25) == doctest::Approx(std::pow(0.875, -0.5)).epsilon(1e-12));
    CHECK(gronwall3_bound(1.0, 1.0, 3.0, 0.25) == doctest::Approx(1.0690).epsilon(1e-4));
    CHECK(gronwall3_blowup_time(1.0, 1.0, 2.0) == doctest::Approx(1.0));
    CHECK_THROWS_WITH(gronwall3_bound(1.0, 1.0, 2.0, 1.0), "bound blown up");
  }

  TEST_CASE("superlinear forms and their equality equations") {
    const double c0 = 0.8, c1 = 1.3, gamma = 2.6;
    CHECK(superlinear_coefficient(c1, gamma, SuperlinearForm::Proof) == doctest::Approx(c1 / (gamma - 1.0)));
    CHECK(superlinear_coefficient(c1, gamma, SuperlinearForm::Statement) ==
          doctest::Approx(c1 * c1 / (gamma - 1.0)));
    CHECK(superlinear_coefficient(c1, gamma, SuperlinearForm::Exact) == doctest::Approx((gamma - 1.0) * c1));
    // The exact form solves f' = C1 f^gamma.
    const double t = 0.5 * gronwall3_blowup_time(c0, c1, gamma, SuperlinearForm::Exact);
    const double rk = oracle::rk4([&](double f) { return c1 * std::pow(f, gamma); }, c0, t, t / 20000.0);
    CHECK(gronwall3_bound(c0, c1, gamma, t, SuperlinearForm::Exact) == doctest::Approx(rk).epsilon(1e-8));
    // For gamma > 2 the proof form falls below that solution.
    CHECK(gronwall3_bound(c0, c1, gamma, t, SuperlinearForm::Proof) < rk);
  }

  TEST_CASE("numerical helpers") {
    const auto path = rk4_scalar([](double f) { return -f; }, 1.0, 1e-3, 1000, 500);
    REQUIRE(path.size() == 3);
    CHECK(path.back() == doctest::Approx(std::exp(-1.0)).epsilon(1e-10));
    ScalarPath bad;
    bad.grid = {0.0, 0.0};
    bad.values = {1.0, 1.0};
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  }

  TEST_CASE("suite passes with a reduced trial count") {
    GronwallSuiteOptions o;
    o.trials = 10;
    const CheckReport r = run_gronwall_suite(o);
    CHECK(r.passed());
    CHECK(r.data.contains("proof_form_shortfall"));
  }
}
