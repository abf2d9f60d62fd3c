#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "chaoskit/error.hpp"
#include "chaoskit/validators.hpp"

using namespace chaoskit;

TEST_SUITE("validators") {
  TEST_CASE("reduced kernel certificate") {
    KernelCertificateOptions o = KernelCertificateOptions::defaults();
    o.pairs = 20000;
    o.calibration_pairs = 100000;
    o.lipschitz_pairs = 100000;
    const CheckReport r = certify_kernels(o);
    for (const auto& c : r.checks) CHECK_MESSAGE(c.passed, c.name);
    std::ostringstream csv;
    write_checks_csv(csv, r);
    CHECK(csv.str().rfind("name,passed,measured,bound,detail", 0) == 0);
  }

  TEST_CASE("reduced transport certificate") {
    TransportCertificateOptions o;
    o.instances = 30;
    o.metric_trials = 10;
    const CheckReport r = certify_transport(o);
    CHECK(r.passed());
  }

  TEST_CASE("law of large numbers helpers") {
    CHECK(lln_epsilon(2, 1.0, 0.25) == doctest::Approx(1.0));
    CHECK(lln_rate(2, 1.0, 0.25, 2) == doctest::Approx(1.0));
    LlnOptions o;
    CHECK(lln_kernel(o, 16.0, 0.01) == doctest::Approx(std::pow(16.0, 0.25)));
    CHECK(lln_kernel(o, 16.0, 4.0) == doctest::Approx(0.25));
  }

  TEST_CASE("smoothed density at the centre of the box") {
    // rho = 1/4 on [-1,1]^2 and h = min(N^(1/4), 1/r): integrate in polar
    // coordinates over the inscribed disc and add the corners by Monte Carlo.
    LlnOptions o;
    const double n = 256.0, cap = 4.0;
    const double rc = 1.0 / cap;
    const double disc = 0.25 * 2.0 * std::numbers::pi * (cap * rc * rc / 2.0 + (1.0 - rc));
    double corners = 0.0;
    const int grid = 2000;
    for (int i = 0; i < grid; ++i) {
      for (int j = 0; j < grid; ++j) {
        const double x = -1.0 + (i + 0.5) * 2.0 / grid, y = -1.0 + (j + 0.5) * 2.0 / grid;
        const double r = std::hypot(x, y);
        if (r > 1.0) corners += 0.25 / r * (4.0 / (double(grid) * grid));
      }
    }
    CHECK(lln_smoothed_density(o, n, 0.0, 0.0) == doctest::Approx(disc + corners).epsilon(1e-4));
  }

  TEST_CASE("vanishing kernel gives a vanishing statistic") {
    LlnOptions o;
    o.c0 = 0.0;
    o.n_grid = {64, 128, 256};
    o.replicas = 3;
    const RateReport r = validate_lln(o);
    for (const auto& rec : r.per_n)
      for (double v : rec.values) CHECK(v == 0.0);
  }

  TEST_CASE("single-point grids are degenerate") {
    LlnOptions o;
    o.n_grid = {64};
    o.replicas = 3;
    CHECK(validate_lln(o).fit.degenerate);
    SamplingRateOptions s;
    s.n_grid = {64};
    s.replicas = 3;
    s.reference_size = 1000;
    CHECK(validate_fg(s).fit.degenerate);
  }

  TEST_CASE("one-dimensional sampling rate") {
    SamplingRateOptions s;
    s.n_grid = {64, 256, 1024, 4096};
    s.replicas = 30;
    const RateReport r = validate_fg(s);
    CHECK(std::abs(r.fit.slope + 0.5) < 0.1);
    CHECK(r.metadata["expected_slope"].get<double>() == doctest::Approx(-0.5));
  }

  TEST_CASE("log-Lipschitz estimate") {
    CHECK(log_negative_part(2.0) == 0.0);
    CHECK(log_negative_part(std::exp(-1.5)) == doctest::Approx(-1.5));
    LoglipOptions o;
    o.samples = 50000;
    o.scales = {1e-3, 1e-1};
    const LoglipReport r = validate_loglip(o);
    CHECK(r.checks.passed());
    InitialLaw box;
    box.kind = InitialKind::UniformBox;
    o.law = box;
    CHECK_THROWS_WITH_AS(validate_loglip(o), "analytic sup-norm required", ConfigError);
  }
}
