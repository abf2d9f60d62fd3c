#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "chaoskit/dynamics.hpp"
#include "chaoskit/experiments.hpp"
#include "chaoskit/kernels.hpp"

namespace chaoskit {

/// One named property with the number it was judged on.
struct Check {
  std::string name;
  bool passed = false;
  double measured = 0.0;
  double bound = 0.0;
  std::string detail;
};

struct CheckReport {
  std::string title;
  std::vector<Check> checks;
  nlohmann::json data = nlohmann::json::object();

  bool passed() const;
  void add(std::string name, bool passed, double measured, double bound, std::string detail = {});
};

nlohmann::json to_json(const CheckReport& report);
/// name,passed,measured,bound,detail
void write_checks_csv(std::ostream& out, const CheckReport& report);

// ------------------------------------------------------------ kernels

struct KernelCertificateOptions {
  /// Cut-off specs to certify; big_n is overwritten by each entry of n_values.
  std::vector<KernelSpec> specs;
  std::vector<double> n_values{16.0, 256.0, 4096.0};
  std::size_t pairs = 100000;
  /// Monte Carlo pairs for the Lipschitz certificate (Newtonian specs).
  std::size_t lipschitz_pairs = 1000000;
  double lipschitz_limit = 8.0;
  /// The weak-strong constant is margin * the max ratio over an independent
  /// calibration sample of this size at n_values[0].
  std::size_t calibration_pairs = 1000000;
  double margin = 1.1;
  std::uint64_t seed = 1;

  /// Newtonian d = 2, 3 and the power kernel d = 3, alpha = 0.5.
  static KernelCertificateOptions defaults();
};

/// Antisymmetry, cut-off coincidence, magnitude cap, continuity at the
/// cut-off sphere, the weak-strong envelope estimate with one fitted constant
/// across N, and the Lipschitz certificate.
CheckReport certify_kernels(const KernelCertificateOptions& options);

// ----------------------------------------------------------- transport

struct TransportCertificateOptions {
  int instances = 200;
  std::size_t max_size = 7;
  int metric_trials = 100;
  std::uint64_t seed = 1;
};

/// Exact solver against permutation enumeration, 1-D sliced against exact,
/// and the metric axioms on random clouds.
CheckReport certify_transport(const TransportCertificateOptions& options);

// ------------------------------------------------- sampling-rate check

struct SamplingRateOptions {
  InitialLaw law;
  int d = 1;
  /// Sample in phase space R^{2d}; otherwise the spatial marginal in R^d.
  bool phase_space = false;
  std::vector<std::size_t> n_grid{64, 128, 256, 512, 1024, 2048, 4096, 8192};
  double p = 1.0;
  int replicas = 50;
  std::size_t reference_size = 100000;
  std::uint64_t seed = 1;
  int threads = 0;

  int dimension() const { return phase_space ? 2 * d : d; }
};

/// W_p between i.i.d. N-samples and an independent large reference sample of
/// the same law; leg "sample_to_law", median fit. One-dimensional samples use
/// the exact quantile coupling against the whole reference, higher dimensions
/// an exact assignment against a random size-N subsample of it. The expected
/// exponent is stored in metadata.
RateReport validate_fg(const SamplingRateOptions& options);

// ---------------------------------------------- law of large numbers

struct LlnOptions {
  double kappa = 1.0;
  double delta = 0.25;
  double c0 = 1.0;
  int m = 2;
  std::vector<std::size_t> n_grid{64, 128, 256, 512, 1024, 2048, 4096};
  int replicas = 50;
  /// Gauss-Legendre nodes per angular arc.
  int quadrature_nodes = 64;
  std::uint64_t seed = 1;
  int threads = 0;
};

/// 2 kappa delta + (1 - d delta) [1 > d delta].
double lln_epsilon(int d, double kappa, double delta);
/// (2 - epsilon) m - 1.
double lln_rate(int d, double kappa, double delta, int m);

/// h(r) = c0 min(N^(kappa delta), r^-kappa).
double lln_kernel(const LlnOptions& options, double n, double r);
/// h * rho at y for rho uniform on [-1, 1]^2, by polar quadrature around y.
double lln_smoothed_density(const LlnOptions& options, double n, double y0, double y1);

/// Samples Y_1..Y_N uniform on [-1, 1]^2 and records
/// sup_i |h * rho_N(Y_i) - h * rho(Y_i)|^(2m) per replica under leg
/// "sup_deviation"; the fit uses the replica mean. Throws ConfigError when
/// epsilon is outside (0, 2) or m <= 1/(2 - epsilon).
RateReport validate_lln(const LlnOptions& options);

// ------------------------------------------- log-Lipschitz estimate

struct LoglipOptions {
  InitialLaw law;
  int d = 2;
  double p = 1.0;
  std::vector<double> scales{1e-4, 1e-3, 1e-2, 1e-1};
  std::size_t samples = 1000000;
  /// Cut-off variant particle counts; the constant is fitted at the first.
  std::vector<double> cutoff_n{256.0, 4096.0};
  double delta = 0.3;
  /// Fitted constants are margin * the largest calibration ratio.
  double margin = 1.5;
  std::uint64_t seed = 1;
};

struct LoglipRow {
  double scale = 0.0;
  double big_n = 0.0;     // 0 for the exact kernel
  double lhs = 0.0;       // E |F(X - X') - F(Y - Y')| G^(p-1)
  double moment = 0.0;    // E G^p
  double log_factor = 1.0;  // 1 - ln^-(E G^p) / p, or sqrt(ln N)
  double sup_norms = 0.0;   // ||rho_1||_inf + ||rho_2||_inf
  double ratio = 0.0;       // lhs / (sup_norms moment log_factor)
};

struct LoglipReport {
  std::vector<LoglipRow> rows;
  CheckReport checks;
};

/// ln^-(x) = min(ln x, 0).
double log_negative_part(double x);

/// Monte Carlo of both sides of the log-Lipschitz estimate for a Gaussian law
/// and its perturbation Y = X + s Z, W = V + s Z'. Throws ConfigError
/// "analytic sup-norm required" for non-Gaussian laws.
LoglipReport validate_loglip(const LoglipOptions& options);

}  // namespace chaoskit
