#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "chaoskit/validators.hpp"

namespace chaoskit {

/// Samples of a nonnegative function on an increasing time grid; linear
/// between nodes.
struct ScalarPath {
  std::vector<double> grid;
  std::vector<double> values;

  /// Throws std::invalid_argument unless the grid is strictly increasing and
  /// the values are finite and nonnegative.
  void validate() const;
  double at(double t) const;
};

/// h(0) exp(int_0^t g) + int_0^t h'(s) exp(int_s^t g) ds by the trapezoidal
/// rule on the common grid of h, h' and g. t may fall between nodes.
/// Throws std::invalid_argument("time outside grid") outside [grid0, gridN].
double gronwall1_bound(const ScalarPath& h, const ScalarPath& h_prime, const ScalarPath& g, double t);

/// The same bound at every node of the common grid.
std::vector<double> gronwall1_curve(const ScalarPath& h, const ScalarPath& h_prime, const ScalarPath& g);

/// exp(1 - (1 - ln f0) e^(-C t)); 0 when f0 = 0. Requires
/// 0 <= f0 < min(exp(1 - e^(C T)), 1) and 0 <= t <= T; otherwise throws
/// std::domain_error("initial datum too large for log-Gronwall").
double gronwall2_bound(double f0, double C, double t, double T);

/// Coefficient k of t in the superlinear bound (C0^(1-gamma) - k t)^(1/(1-gamma)):
///   Proof      k = C1 / (gamma - 1)     (default)
///   Statement  k = C1^2 / (gamma - 1)
///   Exact      k = (gamma - 1) C1, the solution of f' = C1 f^gamma.
/// Proof and Exact agree at gamma = 2 only; for gamma > 2 the Proof form lies
/// below the equality solution of f <= C0 + C1 int f^gamma.
enum class SuperlinearForm { Proof, Statement, Exact };

double superlinear_coefficient(double C1, double gamma, SuperlinearForm form);

/// (C0^(1-gamma) - k t)^(1/(1-gamma)). Throws std::domain_error("bound blown
/// up") at or past the blow-up time C0^(1-gamma) / k.
double gronwall3_bound(double C0, double C1, double gamma, double t,
                       SuperlinearForm form = SuperlinearForm::Proof);
/// C0^(1-gamma) / k.
double gronwall3_blowup_time(double C0, double C1, double gamma,
                             SuperlinearForm form = SuperlinearForm::Proof);

/// Classical RK4 for a scalar autonomous ODE; returns the value at each
/// multiple of `record_every` steps (including t = 0) and at the end.
std::vector<double> rk4_scalar(const std::function<double(double)>& rhs, double f0, double h,
                               std::size_t steps, std::size_t record_every = 1);

/// Solution of f(t) = h(t) + int_0^t g f ds by the implicit trapezoidal rule
/// on the common grid.
std::vector<double> solve_linear_volterra(const ScalarPath& h, const ScalarPath& g);

struct GronwallSuiteOptions {
  int trials = 100;
  std::uint64_t seed = 1;
  /// RK4 step for the ODE oracles.
  double rk4_step = 1e-5;
  /// Grid step of the linear-Gronwall trials on [0, 1].
  double grid_step = 1e-3;
};

/// One check per lemma per random trial: the linear bound dominates the
/// numeric equality solution (1e-4 relative), the logarithmic bound matches
/// the RK4 equality solution (1e-6), and each superlinear form matches RK4 of
/// its own equality ODE f' = k / (gamma - 1) f^gamma before 90% of the blow-up
/// time (1e-6 relative). The largest shortfall of the Proof form below the
/// solution of f' = C1 f^gamma is recorded in data["proof_form_shortfall"].
CheckReport run_gronwall_suite(const GronwallSuiteOptions& options = {});

}  // namespace chaoskit
