#pragma once

#include <cstddef>
#include <iosfwd>
#include <limits>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "chaoskit/dynamics.hpp"
#include "chaoskit/kernels.hpp"
#include "chaoskit/stats.hpp"

namespace chaoskit {

/// Propagation-of-chaos sweep over particle counts.
struct ChaosExperiment {
  KernelSpec kernel;  // big_n is set to each N of the grid
  SimParams sim;      // sim.dt is used only when auto_dt is false
  InitialLaw init;
  bool auto_dt = true;
  /// Upper bound for the automatic step; infinity keeps only the
  /// cut-off-crossing rule.
  double dt_cap = 1e-3;
  /// Divides dt and sim.noise_substeps; refinement 2 reruns the same Brownian
  /// paths on a grid twice as fine.
  int refinement = 1;

  std::vector<std::size_t> n_grid{64, 128, 256};
  int replicas = 10;
  std::vector<double> observation_times;  // T is always added
  double p = 1.0;
  double q = 4.0;
  double epsilon = 1.0;
  double gamma = 0.2;
  /// L^ell integrability exponent of the power-law hypotheses.
  double ell = std::numeric_limits<double>::infinity();
  int pilot_factor = 8;
  /// Exceedance thresholds are c N^-gamma for c in this grid.
  std::vector<double> c_grid;
  /// Measure the (f^N, f) leg with a coupled proxy of smaller cut-off.
  /// Defaults to on for power families.
  bool cutoff_leg = false;
  double proxy_delta_factor = 2.0;
  int threads = 0;

  std::size_t n_max() const { return n_grid.empty() ? 0 : n_grid.back(); }
  std::size_t pilot_size() const { return static_cast<std::size_t>(pilot_factor) * n_max(); }
  /// Sqrt(ln N) weighting of the coupled distances (Newtonian kernels).
  bool weighted() const { return kernel.is_newtonian(); }
  /// Threshold exponent of the exceedance curves (power families default gamma to delta).
  double rate() const { return gamma; }
  /// Step used at particle count n before refinement.
  double base_time_step(std::size_t n) const;

  /// Structural checks (grid, sizes, times). Throws ConfigError.
  void validate() const;
};

/// Every violated hypothesis of the chaos estimate for this configuration,
/// each stated as the inequality it breaks. Empty when admissible.
std::vector<std::string> hypothesis_violations(const ChaosExperiment& exp);

/// Conjugate exponent ell' with 1/ell + 1/ell' = 1.
double conjugate_exponent(double ell);

std::vector<double> default_c_grid();

/// Leg names recorded by run_chaos.
namespace legs {
inline constexpr std::string_view kCoupledSup = "mu_nu_sup";
inline constexpr std::string_view kJMax = "j_max";
inline constexpr std::string_view kReferenceToPilot = "nu_fN";
inline constexpr std::string_view kHeadline = "mu_f";
inline constexpr std::string_view kCutoffGap = "fN_f";
inline constexpr std::string_view kPilotSupNorm = "pilot_sup_norm";
}  // namespace legs

struct LegRecord {
  std::size_t n = 0;
  double t = 0.0;
  std::string leg;
  std::vector<double> values;
  std::vector<std::pair<double, double>> exceedance;  // (c, frequency)
};

struct RateReport {
  nlohmann::json config;
  std::vector<LegRecord> per_n;
  std::string headline_leg;
  RateFit fit;
  std::map<std::string, RateFit> leg_fits;
  nlohmann::json metadata = nlohmann::json::object();
  std::vector<std::string> warnings;
  std::size_t attempted = 0;
  std::size_t failed = 0;

  const LegRecord* find(std::string_view leg, std::size_t n, double t) const;
  /// Samples of `leg` at time t across the grid, in grid order.
  std::vector<RateSample> samples(std::string_view leg, double t) const;
  double final_time() const;
  double failed_fraction() const {
    return attempted == 0 ? 0.0 : static_cast<double>(failed) / static_cast<double>(attempted);
  }
};

nlohmann::json to_json(const RateReport& report);
/// Flat mirror: N,t,leg,replica,value.
void write_rate_csv(std::ostream& out, const RateReport& report);

nlohmann::json describe(const ChaosExperiment& exp);

/// Runs the coupled sweep. For each N and replica: coupled sup distance and
/// running max of J between interacting and reference systems, exact W_p
/// from the reference cloud and from the interacting cloud to disjoint
/// random pilot subsamples, and the pilot density monitor.
RateReport run_chaos(const ChaosExperiment& exp);

/// Fills exceedance curves and fits for every distance leg of a report.
void finalize_report(RateReport& report, double gamma, const std::vector<double>& c_grid,
                     const FitOptions& options = {});

/// Theoretical curves with all unspecified constants set to 1.
struct BoundCurves {
  double moment_term = 0.0;       // N (N x)^(-(q - eps)/p)
  double neg_log_a = 0.0;         // -log a(N, x)
  double neg_log_cn = 0.0;        // -log C_N
  double polynomial_term = 0.0;   // N^((1/p)(1 - (1 - p gamma)(q - eps)/p))
  std::string regime;             // "p>d", "p=d" or "p<d"
};

BoundCurves bound_curves(double n, double x, double p, double d, double q, double epsilon,
                         double gamma);

/// Decay exponent of the median W_p between an i.i.d. N-sample and its law
/// when the sample lives in R^{2d}: -1/(2p) if p > d, else -1/(2d).
double sampling_rate_exponent(double p, double d);

}  // namespace chaoskit
