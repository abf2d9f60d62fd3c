#include "chaoskit/measures.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include "chaoskit/format.hpp"

namespace chaoskit {

namespace {

constexpr double kTruncation = 6.0;  // kernel support in bandwidths
constexpr double kMargin = 3.0;      // grid margin in bandwidths

std::size_t default_nodes(int m) { return m <= 2 ? 256 : 64; }

std::vector<GridAxis> grid_for(const EmpiricalMeasure& s, const std::vector<double>& h) {
  std::vector<GridAxis> grid(s.m);
  for (int k = 0; k < s.m; ++k) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (std::size_t i = 0; i < s.size(); ++i) {
      lo = std::min(lo, s.points[i * s.m + k]);
      hi = std::max(hi, s.points[i * s.m + k]);
    }
    grid[k] = GridAxis{lo - kMargin * h[k], hi + kMargin * h[k], default_nodes(s.m)};
  }
  return grid;
}

}  // namespace

EmpiricalMeasure::EmpiricalMeasure(int dim, std::vector<double> rows) : m(dim), points(std::move(rows)) {
  validate();
}

void EmpiricalMeasure::validate() const {
  if (m < 1) throw std::invalid_argument("measure dimension must be >= 1");
  if (points.empty() || points.size() % static_cast<std::size_t>(m) != 0) {
    throw std::invalid_argument("measure needs n >= 1 points");
  }
}

EmpiricalMeasure EmpiricalMeasure::slice(std::size_t begin, std::size_t count) const {
  if (begin + count > size()) throw std::out_of_range("measure slice out of range");
  return EmpiricalMeasure(m, std::vector<double>(points.begin() + begin * m,
                                                 points.begin() + (begin + count) * m));
}

EmpiricalMeasure EmpiricalMeasure::select(std::span<const std::size_t> idx) const {
  std::vector<double> rows;
  rows.reserve(idx.size() * m);
  for (std::size_t i : idx) {
    if (i >= size()) throw std::out_of_range("measure index out of range");
    auto p = point(i);
    rows.insert(rows.end(), p.begin(), p.end());
  }
  return EmpiricalMeasure(m, std::move(rows));
}

EmpiricalMeasure spatial_marginal(const Ensemble& ens) { return EmpiricalMeasure(ens.d, ens.x); }

EmpiricalMeasure velocity_marginal(const Ensemble& ens) { return EmpiricalMeasure(ens.d, ens.v); }

EmpiricalMeasure phase_space(const Ensemble& ens) {
  std::vector<double> rows;
  rows.reserve(2 * ens.x.size());
  for (std::size_t i = 0; i < ens.size(); ++i) {
    auto x = ens.position(i);
    auto v = ens.velocity(i);
    rows.insert(rows.end(), x.begin(), x.end());
    rows.insert(rows.end(), v.begin(), v.end());
  }
  return EmpiricalMeasure(2 * ens.d, std::move(rows));
}

double moment(const EmpiricalMeasure& meas, double q) {
  if (!(q >= 1.0)) throw std::invalid_argument("moment order must be >= 1");
  meas.validate();
  double s = 0.0;
  for (std::size_t i = 0; i < meas.size(); ++i) {
    double r2 = 0.0;
    for (double c : meas.point(i)) r2 += c * c;
    s += q == 2.0 ? r2 : std::pow(r2, 0.5 * q);
  }
  return s / static_cast<double>(meas.size());
}

DensityEstimate DensityEstimate::with_defaults(EmpiricalMeasure sample) {
  sample.validate();
  const std::size_t n = sample.size();
  const int m = sample.m;
  const double factor = std::pow(static_cast<double>(n), -1.0 / (m + 4));
  std::vector<double> h(m);
  for (int k = 0; k < m; ++k) {
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += sample.points[i * m + k];
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double e = sample.points[i * m + k] - mean;
      var += e * e;
    }
    const double sd = n > 1 ? std::sqrt(var / static_cast<double>(n - 1)) : 0.0;
    h[k] = factor * (sd > 0.0 ? sd : 1.0);
  }
  DensityEstimate out{std::move(sample), h, {}};
  out.grid = grid_for(out.sample, out.bandwidth);
  return out;
}

DensityEstimate DensityEstimate::with_bandwidth(EmpiricalMeasure sample, double h) {
  sample.validate();
  if (!(h > 0.0)) throw std::invalid_argument("bandwidth must be > 0");
  std::vector<double> hv(sample.m, h);
  DensityEstimate out{std::move(sample), hv, {}};
  out.grid = grid_for(out.sample, out.bandwidth);
  return out;
}

double DensityEstimate::cell_volume() const {
  double v = 1.0;
  for (const auto& ax : grid) v *= ax.spacing();
  return v;
}

void DensityEstimate::check_coverage() const {
  if (sample.size() == 0) throw std::invalid_argument("empty sample");
  const int m = sample.m;
  if (static_cast<int>(grid.size()) != m || static_cast<int>(bandwidth.size()) != m) {
    throw std::invalid_argument("grid and bandwidth must match the sample dimension");
  }
  for (int k = 0; k < m; ++k) {
    if (grid[k].nodes < 2) throw std::invalid_argument("grid needs >= 2 nodes per axis");
    const double slack = 1e-9 * bandwidth[k];
    for (std::size_t i = 0; i < sample.size(); ++i) {
      const double c = sample.points[i * m + k];
      if (c - kMargin * bandwidth[k] < grid[k].lo - slack ||
          c + kMargin * bandwidth[k] > grid[k].hi + slack) {
        throw std::invalid_argument("grid underflow");
      }
    }
  }
}

std::vector<double> DensityEstimate::evaluate() const {
  if (sample.size() == 0) throw std::invalid_argument("empty sample");
  const int m = sample.m;
  const std::size_t n = sample.size();
  std::size_t slab = 1;
  for (int k = 1; k < m; ++k) slab *= grid[k].nodes;
  std::vector<double> values(grid[0].nodes * slab, 0.0);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const double xa = sample.points[a * m], xb = sample.points[b * m];
    return xa < xb || (xa == xb && a < b);
  });
  std::vector<double> first(n);
  for (std::size_t r = 0; r < n; ++r) first[r] = sample.points[order[r] * m];

  const double norm = 1.0 / (static_cast<double>(n) * std::pow(2.0 * M_PI, 0.5 * m));
  double hprod = 1.0;
  for (double h : bandwidth) hprod *= h;
  const double scale = norm / hprod;

#pragma omp parallel for schedule(dynamic, 4)
  for (std::size_t a = 0; a < grid[0].nodes; ++a) {
    const double g0 = grid[0].node(a);
    const double reach0 = kTruncation * bandwidth[0];
    const auto lo = std::lower_bound(first.begin(), first.end(), g0 - reach0) - first.begin();
    const auto hi = std::upper_bound(first.begin(), first.end(), g0 + reach0) - first.begin();
    double* row = values.data() + a * slab;
    std::vector<std::vector<double>> w(m);
    std::vector<std::size_t> start(m, 0), count(m, 1), strides(m, 1);
    for (int k = m - 2; k >= 1; --k) strides[k] = strides[k + 1] * grid[k + 1].nodes;
    for (auto r = lo; r < hi; ++r) {
      const std::size_t i = order[r];
      const double u0 = (g0 - first[r]) / bandwidth[0];
      const double w0 = std::exp(-0.5 * u0 * u0) * scale;
      bool empty = false;
      for (int k = 1; k < m; ++k) {
        const GridAxis& ax = grid[k];
        const double c = sample.points[i * m + k];
        const double reach = kTruncation * bandwidth[k];
        const double dx = ax.spacing();
        const double fl = std::ceil((c - reach - ax.lo) / dx);
        const double fh = std::floor((c + reach - ax.lo) / dx);
        const auto klo = static_cast<long>(std::max(0.0, fl));
        const auto khi = static_cast<long>(std::min(static_cast<double>(ax.nodes - 1), fh));
        if (khi < klo) {
          empty = true;
          break;
        }
        start[k] = static_cast<std::size_t>(klo);
        count[k] = static_cast<std::size_t>(khi - klo + 1);
        w[k].resize(count[k]);
        for (std::size_t j = 0; j < count[k]; ++j) {
          const double u = (ax.node(start[k] + j) - c) / bandwidth[k];
          w[k][j] = std::exp(-0.5 * u * u);
        }
      }
      if (empty) continue;
      if (m == 1) {
        row[0] += w0;
        continue;
      }
      // Odometer over the outer product of the remaining axes.
      std::vector<std::size_t> idx(m, 0);
      while (true) {
        double prod = w0;
        std::size_t off = 0;
        for (int k = 1; k < m; ++k) {
          prod *= w[k][idx[k]];
          off += (start[k] + idx[k]) * strides[k];
        }
        row[off] += prod;
        int k = m - 1;
        while (k >= 1 && ++idx[k] == count[k]) idx[k--] = 0;
        if (k < 1) break;
      }
    }
  }
  return values;
}

double kde_sup_norm(const DensityEstimate& dens) {
  dens.check_coverage();
  const auto values = dens.evaluate();
  return *std::max_element(values.begin(), values.end());
}

double lp_norm_estimate(const DensityEstimate& dens, double ell) {
  if (!(ell >= 1.0)) throw std::invalid_argument("ell must lie in [1, inf]");
  if (std::isinf(ell)) return kde_sup_norm(dens);
  dens.check_coverage();
  const auto values = dens.evaluate();
  double s = 0.0;
  for (double f : values) s += ell == 1.0 ? f : std::pow(f, ell);
  return std::pow(s * dens.cell_volume(), 1.0 / ell);
}

double kde_mass(const DensityEstimate& dens) { return lp_norm_estimate(dens, 1.0); }

void write_monitor_csv(std::ostream& out, std::span<const MonitorRow> rows) {
  out << "t,quantity,value\n";
  for (const auto& r : rows) out << fmt_double(r.t) << ',' << r.quantity << ',' << fmt_double(r.value) << '\n';
}

std::vector<MonitorRow> monitor_ensemble(const Ensemble& ens) {
  const auto dens = DensityEstimate::with_defaults(spatial_marginal(ens));
  dens.check_coverage();
  const auto values = dens.evaluate();
  double sup = 0.0, sq = 0.0;
  for (double f : values) {
    sup = std::max(sup, f);
    sq += f * f;
  }
  const auto z = phase_space(ens);
  return {{ens.t, "sup_norm", sup},
          {ens.t, "l2_norm", std::sqrt(sq * dens.cell_volume())},
          {ens.t, "moment_q2", moment(z, 2.0)},
          {ens.t, "moment_q4", moment(z, 4.0)}};
}

}  // namespace chaoskit
