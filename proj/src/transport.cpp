#include "chaoskit/transport.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include "chaoskit/format.hpp"

namespace chaoskit {

namespace {

double ground_cost(std::span<const double> x, std::span<const double> y, double p) {
  double s = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double e = x[k] - y[k];
    s += e * e;
  }
  if (p == 2.0) return s;
  const double r = std::sqrt(s);
  return p == 1.0 ? r : std::pow(r, p);
}

void check_order(double p) {
  if (!(p >= 1.0) || !std::isfinite(p)) throw std::invalid_argument("p must lie in [1, inf)");
}

void check_pair(const EmpiricalMeasure& a, const EmpiricalMeasure& b) {
  a.validate();
  b.validate();
  if (a.m != b.m) throw std::invalid_argument("measures live in different dimensions");
}

double root(double mean_power, double p) {
  if (mean_power <= 0.0) return 0.0;
  if (p == 1.0) return mean_power;
  if (p == 2.0) return std::sqrt(mean_power);
  return std::pow(mean_power, 1.0 / p);
}

double sorted_power_mean(const std::vector<double>& xs, const std::vector<double>& ys, double p) {
  double s = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double e = std::abs(xs[i] - ys[i]);
    s += p == 1.0 ? e : (p == 2.0 ? e * e : std::pow(e, p));
  }
  return s / static_cast<double>(xs.size());
}

}  // namespace

std::string_view to_string(DistanceMethod method) noexcept {
  switch (method) {
    case DistanceMethod::ExactAssignment: return "exact_assignment";
    case DistanceMethod::ExactQuantile: return "exact_quantile";
    case DistanceMethod::Sliced: return "sliced";
    case DistanceMethod::CoupledSup: return "coupled_sup";
  }
  return "unknown";
}

namespace {

/// Rows of a dense row-major matrix.
struct DenseRows {
  std::span<const double> cost;
  std::size_t n;
  const double* row(std::size_t i, double*) const noexcept { return cost.data() + i * n; }
};

// Jonker-Volgenant: column reduction, reduction transfer, two passes of
// augmenting row reduction, then shortest augmenting paths for the rest.
template <class Rows>
Assignment jonker_volgenant(const Rows& rows, std::size_t n) {
  constexpr long kFree = -1;
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> scratch(n);

  std::vector<long> rowsol(n, kFree), colsol(n, kFree);
  std::vector<double> v(n);
  std::vector<std::size_t> matches(n, 0), free_rows;
  free_rows.reserve(n);

  // Column reduction. Column minima are gathered in one row-major sweep;
  // ties keep the lowest row.
  std::vector<std::size_t> argmin(n, 0);
  {
    const double* r0 = rows.row(0, scratch.data());
    std::copy(r0, r0 + n, v.begin());
  }
  for (std::size_t i = 1; i < n; ++i) {
    const double* row = rows.row(i, scratch.data());
    for (std::size_t j = 0; j < n; ++j) {
      if (row[j] < v[j]) {
        v[j] = row[j];
        argmin[j] = i;
      }
    }
  }
  for (std::size_t jj = n; jj-- > 0;) {
    const std::size_t imin = argmin[jj];
    if (++matches[imin] == 1) {
      rowsol[imin] = static_cast<long>(jj);
      colsol[jj] = static_cast<long>(imin);
    } else if (v[jj] < v[rowsol[imin]]) {
      const auto j1 = static_cast<std::size_t>(rowsol[imin]);
      rowsol[imin] = static_cast<long>(jj);
      colsol[jj] = static_cast<long>(imin);
      colsol[j1] = kFree;
    } else {
      colsol[jj] = kFree;
    }
  }

  // Reduction transfer.
  for (std::size_t i = 0; i < n; ++i) {
    if (matches[i] == 0) {
      free_rows.push_back(i);
    } else if (matches[i] == 1 && n > 1) {
      const double* row = rows.row(i, scratch.data());
      const auto j1 = static_cast<std::size_t>(rowsol[i]);
      double lo = inf;
      for (std::size_t j = 0; j < n; ++j) {
        if (j != j1) lo = std::min(lo, row[j] - v[j]);
      }
      v[j1] -= lo;
    }
  }

  // Augmenting row reduction. The budget bounds reassignments so that
  // near-ties in floating point cannot cycle; leftovers go to the
  // shortest-path phase.
  for (int pass = 0; pass < 2 && !free_rows.empty() && n > 1; ++pass) {
    std::size_t k = 0;
    const std::size_t prev = free_rows.size();
    std::size_t numfree = 0;
    std::size_t budget = 8 * n + 64;
    while (k < prev) {
      if (budget-- == 0) {
        while (k < prev) free_rows[numfree++] = free_rows[k++];
        break;
      }
      const std::size_t i = free_rows[k++];
      const double* row = rows.row(i, scratch.data());
      double umin = row[0] - v[0];
      double usub = inf;
      std::size_t j1 = 0, j2 = 0;
      for (std::size_t j = 1; j < n; ++j) {
        const double h = row[j] - v[j];
        if (h < usub) {
          if (h >= umin) {
            usub = h;
            j2 = j;
          } else {
            usub = umin;
            umin = h;
            j2 = j1;
            j1 = j;
          }
        }
      }
      long i0 = colsol[j1];
      const bool strict = umin < usub;
      if (strict) {
        v[j1] -= usub - umin;
      } else if (i0 != kFree) {
        j1 = j2;
        i0 = colsol[j2];
      }
      if (i0 != kFree) rowsol[i0] = kFree;
      rowsol[i] = static_cast<long>(j1);
      colsol[j1] = static_cast<long>(i);
      if (i0 != kFree) {
        if (strict) {
          free_rows[--k] = static_cast<std::size_t>(i0);
        } else {
          free_rows[numfree++] = static_cast<std::size_t>(i0);
        }
      }
    }
    free_rows.resize(numfree);
  }

  // Shortest augmenting paths (Dijkstra over reduced costs). A scanned column
  // gets dist = +inf and v = -inf so its reduced cost is +inf and each
  // relaxation is one branch-free sweep over all columns. Minima are kept per
  // block of columns; ties go to the lowest column index.
  constexpr std::size_t kBlock = 64;
  const std::size_t blocks = (n + kBlock - 1) / kBlock;
  std::vector<double> dist(n), block_min(blocks), done_dist, done_v;
  std::vector<std::uint32_t> pred(n);
  std::vector<std::size_t> done;
  done.reserve(n);
  done_dist.reserve(n);
  done_v.reserve(n);
  const auto nearest = [&]() {
    std::size_t b = 0;
    for (std::size_t c = 1; c < blocks; ++c) {
      if (block_min[c] < block_min[b]) b = c;
    }
    std::size_t k = b * kBlock;
    while (!(dist[k] == block_min[b])) ++k;
    return k;
  };
  // Relaxes every column through `row` (shifted by h) and refreshes the block minima.
  const auto relax = [&](const double* row, double h, std::uint32_t from) {
    double* __restrict d = dist.data();
    std::uint32_t* __restrict pr = pred.data();
    const double* __restrict vv = v.data();
    for (std::size_t b = 0; b < blocks; ++b) {
      const std::size_t first = b * kBlock;
      const std::size_t last = std::min(n, first + kBlock);
      double best = inf;
#pragma omp simd reduction(min : best)
      for (std::size_t j = first; j < last; ++j) {
        const double v2 = row[j] - vv[j] - h;
        const bool better = v2 < d[j];
        const double now = better ? v2 : d[j];
        d[j] = now;
        pr[j] = better ? from : pr[j];
        best = std::min(best, now);
      }
      block_min[b] = best;
    }
  };
  for (const std::size_t freerow : free_rows) {
    done.clear();
    done_dist.clear();
    done_v.clear();
    std::fill(dist.begin(), dist.end(), inf);
    relax(rows.row(freerow, scratch.data()), 0.0, static_cast<std::uint32_t>(freerow));
    std::size_t endofpath = 0;
    double lo = 0.0;
    while (true) {
      const std::size_t j1 = nearest();
      lo = dist[j1];
      if (colsol[j1] == kFree) {
        endofpath = j1;
        break;
      }
      const auto i = static_cast<std::size_t>(colsol[j1]);
      const double* row = rows.row(i, scratch.data());
      const double h = row[j1] - v[j1] - lo;
      done.push_back(j1);
      done_dist.push_back(lo);
      done_v.push_back(v[j1]);
      dist[j1] = inf;
      v[j1] = -inf;
      relax(row, h, static_cast<std::uint32_t>(i));
    }
    for (std::size_t k = 0; k < done.size(); ++k) v[done[k]] = done_v[k] + (done_dist[k] - lo);
    while (true) {
      const std::size_t i = pred[endofpath];
      colsol[endofpath] = static_cast<long>(i);
      const long next = rowsol[i];
      rowsol[i] = static_cast<long>(endofpath);
      if (i == freerow) break;
      endofpath = static_cast<std::size_t>(next);
    }
  }

  Assignment out;
  out.row_to_col.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (rowsol[i] == kFree) throw std::logic_error("assignment solver left a row unmatched");
    out.row_to_col[i] = static_cast<std::size_t>(rowsol[i]);
  }
  for (std::size_t i = 0; i < n; ++i) {
    out.cost += rows.row(i, scratch.data())[out.row_to_col[i]];
  }
  return out;
}

}  // namespace

Assignment solve_assignment(std::span<const double> cost, std::size_t n) {
  if (n == 0 || cost.size() != n * n) throw std::invalid_argument("cost matrix must be n x n");
  return jonker_volgenant(DenseRows{cost, n}, n);
}

DistanceResult wp_exact(const EmpiricalMeasure& a, const EmpiricalMeasure& b, double p,
                        bool keep_assignment) {
  check_order(p);
  check_pair(a, b);
  if (a.size() != b.size()) throw std::invalid_argument("unbalanced not supported");
  const std::size_t n = a.size();
  if (n > kMaxExactSize) {
    throw std::invalid_argument("exact assignment limited to n <= " + std::to_string(kMaxExactSize));
  }
  std::vector<double> cost(n * n);
#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) cost[i * n + j] = ground_cost(a.point(i), b.point(j), p);
  }
  Assignment sol = jonker_volgenant(DenseRows{cost, n}, n);
  DistanceResult out;
  out.method = DistanceMethod::ExactAssignment;
  out.p = p;
  out.value = root(sol.cost / static_cast<double>(n), p);
  if (keep_assignment) out.assignment = std::move(sol.row_to_col);
  return out;
}

DistanceResult wp_1d(const EmpiricalMeasure& a, const EmpiricalMeasure& b, double p) {
  check_order(p);
  check_pair(a, b);
  if (a.m != 1) throw std::invalid_argument("wp_1d needs one-dimensional measures");
  std::vector<double> xs = a.points, ys = b.points;
  std::sort(xs.begin(), xs.end());
  std::sort(ys.begin(), ys.end());
  DistanceResult out;
  out.method = DistanceMethod::ExactQuantile;
  out.p = p;
  if (xs.size() == ys.size()) {
    out.value = root(sorted_power_mean(xs, ys, p), p);
    return out;
  }
  // Merge the two quantile step functions; breakpoints are i/n and j/m.
  const double n = static_cast<double>(xs.size());
  const double m = static_cast<double>(ys.size());
  std::size_t i = 0, j = 0;
  double u = 0.0, s = 0.0;
  while (i < xs.size() && j < ys.size()) {
    const double next_a = static_cast<double>(i + 1) / n;
    const double next_b = static_cast<double>(j + 1) / m;
    const double nxt = std::min(next_a, next_b);
    const double e = std::abs(xs[i] - ys[j]);
    s += (nxt - u) * (p == 1.0 ? e : std::pow(e, p));
    u = nxt;
    if (next_a <= nxt) ++i;
    if (next_b <= nxt) ++j;
  }
  out.value = root(s, p);
  return out;
}

double sphere_coordinate_moment(int m, double p) {
  if (m < 1) throw std::invalid_argument("dimension must be >= 1");
  if (m == 1) return 1.0;
  const double lg = std::lgamma(0.5 * m) + std::lgamma(0.5 * (p + 1.0)) -
                    0.5 * std::log(M_PI) - std::lgamma(0.5 * (m + p));
  return std::exp(lg);
}

DistanceResult wp_sliced(const EmpiricalMeasure& a, const EmpiricalMeasure& b, double p,
                         int n_projections, const StreamKey& stream) {
  check_order(p);
  check_pair(a, b);
  if (a.size() != b.size()) throw std::invalid_argument("unbalanced not supported");
  if (n_projections < 1) throw std::invalid_argument("n_projections must be >= 1");
  const int m = a.m;
  const std::size_t n = a.size();
  const CounterRng rng(stream);
  std::vector<double> per(n_projections);
#pragma omp parallel for schedule(static)
  for (int l = 0; l < n_projections; ++l) {
    std::vector<double> theta(m);
    double norm2 = 0.0;
    for (int k = 0; k < m; ++k) {
      theta[k] = m == 1 ? 1.0 : rng.gaussian(static_cast<std::uint32_t>(l), 0, k);
      norm2 += theta[k] * theta[k];
    }
    const double inv = 1.0 / std::sqrt(norm2);
    for (double& t : theta) t *= inv;
    std::vector<double> xs(n), ys(n);
    for (std::size_t i = 0; i < n; ++i) {
      double pa = 0.0, pb = 0.0;
      for (int k = 0; k < m; ++k) {
        pa += theta[k] * a.points[i * m + k];
        pb += theta[k] * b.points[i * m + k];
      }
      xs[i] = pa;
      ys[i] = pb;
    }
    std::sort(xs.begin(), xs.end());
    std::sort(ys.begin(), ys.end());
    per[l] = sorted_power_mean(xs, ys, p);
  }
  double mean = 0.0;
  for (double w : per) mean += w;
  mean /= n_projections;
  double var = 0.0;
  for (double w : per) var += (w - mean) * (w - mean);
  var = n_projections > 1 ? var / (n_projections - 1) : 0.0;
  const double scale = std::pow(sphere_coordinate_moment(m, p), -1.0 / p);

  DistanceResult out;
  out.method = DistanceMethod::Sliced;
  out.p = p;
  out.n_projections = n_projections;
  out.value = scale * root(mean, p);
  if (mean > 0.0) {
    const double se_mean = std::sqrt(var / n_projections);
    out.std_error = scale * std::pow(mean, 1.0 / p - 1.0) / p * se_mean;
  }
  return out;
}

namespace {

void check_coupled(const Ensemble& a, const Ensemble& b) {
  a.validate();
  b.validate();
  if (a.d != b.d || a.size() != b.size()) {
    throw std::invalid_argument("coupled ensembles differ in N or d");
  }
}

struct BlockMax {
  double dx = 0.0;
  double dv = 0.0;
};

BlockMax particle_gap(const Ensemble& a, const Ensemble& b, std::size_t i) {
  double sx = 0.0, sv = 0.0;
  for (int k = 0; k < a.d; ++k) {
    const std::size_t c = i * a.d + k;
    const double ex = a.x[c] - b.x[c];
    const double ev = a.v[c] - b.v[c];
    sx += ex * ex;
    sv += ev * ev;
  }
  return {std::sqrt(sx), std::sqrt(sv)};
}

}  // namespace

DistanceResult coupled_sup(const Ensemble& a, const Ensemble& b, bool weighted, double big_n) {
  check_coupled(a, b);
  if (weighted && !(big_n >= 1.0)) throw std::invalid_argument("N must be >= 1");
  const double w = weighted ? std::sqrt(std::log(big_n)) : 1.0;
  double best = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const BlockMax g = particle_gap(a, b, i);
    best = std::max(best, w * g.dx + g.dv);
  }
  DistanceResult out;
  out.method = DistanceMethod::CoupledSup;
  out.p = std::numeric_limits<double>::infinity();
  out.value = best;
  return out;
}

DistanceResult coupled_sup(const CoupledRun& run, bool weighted, double big_n) {
  return coupled_sup(run.interacting, run.reference, weighted, big_n);
}

double j_functional(const Ensemble& a, const Ensemble& b, double delta, double big_n,
                    bool weighted) {
  check_coupled(a, b);
  if (!(big_n >= 1.0)) throw std::invalid_argument("N must be >= 1");
  BlockMax mx;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const BlockMax g = particle_gap(a, b, i);
    mx.dx = std::max(mx.dx, g.dx);
    mx.dv = std::max(mx.dv, g.dv);
  }
  const double scale = std::pow(big_n, delta);
  const double w = weighted ? std::sqrt(std::log(big_n)) : 1.0;
  return std::min(1.0, w * scale * mx.dx + scale * mx.dv);
}

double j_functional(const CoupledRun& run, double delta, double big_n, bool weighted) {
  return j_functional(run.interacting, run.reference, delta, big_n, weighted);
}

void write_distance_csv(std::ostream& out, std::span<const DistanceRow> rows) {
  out << "replica,t,pair,method,p,value,stderr\n";
  for (const auto& r : rows) {
    out << r.replica << ',' << fmt_double(r.t) << ',' << r.pair << ','
        << to_string(r.result.method) << ',' << fmt_double(r.result.p) << ','
        << fmt_double(r.result.value) << ',' << fmt_double(r.result.std_error) << '\n';
  }
}

}  // namespace chaoskit
