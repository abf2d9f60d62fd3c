#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "chaoskit/measures.hpp"

using namespace chaoskit;

TEST_SUITE("measures") {
  TEST_CASE("marginals keep particle order and dimension") {
    Ensemble e(2, 3);
    e.x = {1, 2, 3, 4, 5, 6};
    e.v = {-1, -2, -3, -4, -5, -6};
    const EmpiricalMeasure xs = spatial_marginal(e);
    CHECK(xs.m == 2);
    CHECK(xs.size() == 3);
    CHECK(xs.points == e.x);
    CHECK(velocity_marginal(e).points == e.v);
    const EmpiricalMeasure ph = phase_space(e);
    CHECK(ph.m == 4);
    CHECK(ph.points == std::vector<double>{1, 2, -1, -2, 3, 4, -3, -4, 5, 6, -5, -6});
    Ensemble one(2, 1);
    one.x = {0.5, 0.7};
    CHECK(spatial_marginal(one).points == one.x);
  }

  TEST_CASE("moments") {
    CHECK(moment(EmpiricalMeasure(2, {0, 0, 0, 0}), 2.0) == 0.0);
    CHECK(moment(EmpiricalMeasure(1, {1.0, -2.0}), 2.0) == doctest::Approx(2.5));
    std::mt19937_64 gen(1);
    std::normal_distribution<double> g;
    std::vector<double> pts(1000000);
    for (auto& p : pts) p = g(gen);
    CHECK(std::abs(moment(EmpiricalMeasure(1, pts), 2.0) - 1.0) < 0.01);
  }

  TEST_CASE("single-sample density peak") {
    const auto dens = DensityEstimate::with_bandwidth(EmpiricalMeasure(1, {0.0}), 1.0);
    CHECK(kde_sup_norm(dens) == doctest::Approx(1.0 / std::sqrt(2.0 * std::numbers::pi)).epsilon(1e-3));
    const auto twice = DensityEstimate::with_bandwidth(EmpiricalMeasure(1, {0.0, 0.0}), 1.0);
    CHECK(kde_sup_norm(twice) == doctest::Approx(kde_sup_norm(dens)).epsilon(1e-12));
    // Closed form: int phi^2 = 1 / (2 sqrt(pi)).
    CHECK(lp_norm_estimate(dens, 2.0) == doctest::Approx(std::sqrt(0.5 / std::sqrt(std::numbers::pi))).epsilon(2e-3));
    CHECK(lp_norm_estimate(dens, INFINITY) == kde_sup_norm(dens));
    CHECK(lp_norm_estimate(dens, 1.0) == doctest::Approx(1.0).epsilon(0.02));
  }

  TEST_CASE("uniform sample density") {
    std::mt19937_64 gen(2);
    std::uniform_real_distribution<double> u;
    std::vector<double> pts(100000);
    for (auto& p : pts) p = u(gen);
    const auto dens = DensityEstimate::with_defaults(EmpiricalMeasure(1, pts));
    const double sup = kde_sup_norm(dens);
    CHECK(sup >= 0.9);
    CHECK(sup <= 1.3);
    CHECK(kde_mass(dens) == doctest::Approx(1.0).epsilon(0.02));
  }

  TEST_CASE("two-dimensional Gaussian density") {
    std::mt19937_64 gen(3);
    std::normal_distribution<double> g;
    std::vector<double> pts(200000);
    for (auto& p : pts) p = g(gen);
    const auto dens = DensityEstimate::with_defaults(EmpiricalMeasure(2, pts));
    // Peak of the standard normal in R^2 is 1/(2 pi); smoothing lowers it slightly.
    const double sup = kde_sup_norm(dens);
    CHECK(sup <= 1.0 / (2.0 * std::numbers::pi) * 1.05);
    CHECK(sup >= 1.0 / (2.0 * std::numbers::pi) * 0.85);
    CHECK(lp_norm_estimate(dens, 1.0) == doctest::Approx(1.0).epsilon(0.02));
  }

  TEST_CASE("grid coverage is enforced") {
    auto dens = DensityEstimate::with_bandwidth(EmpiricalMeasure(1, {0.0, 1.0}), 0.1);
    dens.grid[0].hi = 0.5;
    CHECK_THROWS_WITH(dens.check_coverage(), "grid underflow");
  }

  TEST_CASE("monitor rows") {
    Ensemble e(1, 2);
    e.x = {-1.0, 1.0};
    e.v = {0.0, 0.0};
    const auto rows = monitor_ensemble(e);
    bool saw_q2 = false;
    for (const auto& r : rows) {
      if (r.quantity == "moment_q2") {
        saw_q2 = true;
        CHECK(r.value == doctest::Approx(1.0));
      }
    }
    CHECK(saw_q2);
  }
}
