#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "chaoskit/ensemble.hpp"

namespace chaoskit {

/// Uniformly weighted point cloud in R^m, row-major.
struct EmpiricalMeasure {
  int m = 0;
  std::vector<double> points;

  EmpiricalMeasure() = default;
  EmpiricalMeasure(int dim, std::vector<double> rows);

  std::size_t size() const noexcept { return m > 0 ? points.size() / static_cast<std::size_t>(m) : 0; }
  std::span<const double> point(std::size_t i) const noexcept {
    return {points.data() + i * static_cast<std::size_t>(m), static_cast<std::size_t>(m)};
  }
  double weight() const noexcept { return 1.0 / static_cast<double>(size()); }
  /// Rows [begin, begin + count) as a new measure.
  EmpiricalMeasure slice(std::size_t begin, std::size_t count) const;
  /// Rows in the order given by `idx`.
  EmpiricalMeasure select(std::span<const std::size_t> idx) const;

  void validate() const;
};

EmpiricalMeasure spatial_marginal(const Ensemble& ens);
EmpiricalMeasure velocity_marginal(const Ensemble& ens);
/// (x, v) rows in R^{2d}.
EmpiricalMeasure phase_space(const Ensemble& ens);

/// (1/n) sum |z_i|^q.
double moment(const EmpiricalMeasure& meas, double q);

struct GridAxis {
  double lo = 0.0;
  double hi = 1.0;
  std::size_t nodes = 256;

  double spacing() const noexcept { return (hi - lo) / static_cast<double>(nodes - 1); }
  double node(std::size_t k) const noexcept { return lo + spacing() * static_cast<double>(k); }
};

/// Gaussian product-kernel density estimate of a spatial sample, evaluated on
/// an axis-aligned grid.
struct DensityEstimate {
  EmpiricalMeasure sample;
  std::vector<double> bandwidth;  // per axis
  std::vector<GridAxis> grid;     // per axis

  /// Default rules: h_k = n^(-1/(m+4)) sd_k (sd_k = 1 for a degenerate axis),
  /// grid spanning min/max +- 3h with 256 nodes per axis for m <= 2 and 64 otherwise.
  static DensityEstimate with_defaults(EmpiricalMeasure sample);
  /// Same grid rule with a fixed isotropic bandwidth.
  static DensityEstimate with_bandwidth(EmpiricalMeasure sample, double h);

  /// Density at every grid node, first axis slowest.
  std::vector<double> evaluate() const;
  /// Product of grid spacings.
  double cell_volume() const;
  /// Throws "grid underflow" unless the grid covers the sample range +- 3h.
  void check_coverage() const;
};

double kde_sup_norm(const DensityEstimate& dens);
/// Grid quadrature of the estimate to the ell-th power, raised to 1/ell.
/// ell = infinity routes to kde_sup_norm.
double lp_norm_estimate(const DensityEstimate& dens, double ell);
/// Grid integral of the estimate.
double kde_mass(const DensityEstimate& dens);

struct MonitorRow {
  double t = 0.0;
  std::string quantity;
  double value = 0.0;
};

void write_monitor_csv(std::ostream& out, std::span<const MonitorRow> rows);

/// Standard monitor set (sup_norm, l2_norm, moment_q2, moment_q4) of an
/// ensemble: norms from the spatial density, moments in phase space.
std::vector<MonitorRow> monitor_ensemble(const Ensemble& ens);

}  // namespace chaoskit
