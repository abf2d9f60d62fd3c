#include "chaoskit/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

#include "chaoskit/rng.hpp"

namespace chaoskit {

double median(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("median of an empty sample");
  const std::size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + mid, values.end());
  const double hi = values[mid];
  if (values.size() % 2 == 1) return hi;
  const double lo = *std::max_element(values.begin(), values.begin() + mid);
  return 0.5 * (lo + hi);
}

double mean(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("mean of an empty sample");
  return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

LineFit ols(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("ols needs >= 2 points");
  const double mx = mean(x), my = mean(y);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0.0) throw std::invalid_argument("ols needs two distinct x values");
  const double slope = sxy / sxx;
  return {slope, my - slope * mx};
}

namespace {

std::vector<double> ranks(std::span<const double> v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
    i = j + 1;
  }
  return r;
}

double summarize(std::vector<double> values, RateSummary how) {
  return how == RateSummary::Median ? median(std::move(values)) : mean(values);
}

double quantile_sorted(const std::vector<double>& s, double q) {
  const double pos = q * static_cast<double>(s.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, s.size() - 1);
  return s[lo] + (pos - static_cast<double>(lo)) * (s[hi] - s[lo]);
}

}  // namespace

double spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("spearman needs >= 2 pairs");
  const auto rx = ranks(x), ry = ranks(y);
  const double mx = mean(rx), my = mean(ry);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

double exceedance_frequency(std::span<const double> values, double threshold) {
  if (values.empty()) return 0.0;
  const auto hits = std::count_if(values.begin(), values.end(), [&](double v) { return v >= threshold; });
  return static_cast<double>(hits) / static_cast<double>(values.size());
}

RateFit fit_rate(std::span<const RateSample> samples, const FitOptions& options) {
  RateFit fit;
  std::vector<std::vector<double>> usable;
  std::vector<double> logn;
  for (const auto& s : samples) {
    std::vector<double> pos;
    for (double v : s.values) {
      if (v > 0.0 && std::isfinite(v)) pos.push_back(v);
    }
    if (pos.empty() || !(s.n > 0.0)) continue;
    const double summary = summarize(pos, options.summary);
    fit.summary.emplace_back(s.n, summary);
    logn.push_back(std::log(s.n));
    usable.push_back(std::move(pos));
  }
  std::vector<double> distinct = logn;
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  fit.grid_points = distinct.size();
  if (distinct.size() < 3) {
    fit.degenerate = true;
    fit.note = "degenerate fit: fewer than 3 distinct N values with positive data";
    fit.slope = fit.ci_low = fit.ci_high = std::nan("");
    return fit;
  }
  std::vector<double> logy;
  for (const auto& [n, v] : fit.summary) logy.push_back(std::log(v));
  const LineFit line = ols(logn, logy);
  fit.slope = line.slope;
  fit.intercept = line.intercept;

  std::vector<double> slopes;
  slopes.reserve(options.resamples);
  std::vector<double> by(usable.size()), draw;
  for (int b = 0; b < options.resamples; ++b) {
    CounterEngine engine(StreamKey{options.seed, StreamRole::Validation, 0}, static_cast<std::uint32_t>(b));
    for (std::size_t g = 0; g < usable.size(); ++g) {
      const auto& pool = usable[g];
      std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
      draw.resize(pool.size());
      for (auto& x : draw) x = pool[pick(engine)];
      by[g] = std::log(summarize(draw, options.summary));
    }
    slopes.push_back(ols(logn, by).slope);
  }
  std::sort(slopes.begin(), slopes.end());
  const double tail = 0.5 * (1.0 - options.level);
  fit.ci_low = quantile_sorted(slopes, tail);
  fit.ci_high = quantile_sorted(slopes, 1.0 - tail);
  return fit;
}

}  // namespace chaoskit
