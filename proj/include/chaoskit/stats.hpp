#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace chaoskit {

double median(std::vector<double> values);
double mean(std::span<const double> values);

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
};

/// Ordinary least squares of y on x. Needs two distinct x values.
LineFit ols(std::span<const double> x, std::span<const double> y);

/// Spearman rank correlation with average ranks for ties.
double spearman(std::span<const double> x, std::span<const double> y);

/// Fraction of values >= threshold.
double exceedance_frequency(std::span<const double> values, double threshold);

/// Samples of one statistic at one N.
struct RateSample {
  double n = 0.0;
  std::vector<double> values;
};

enum class RateSummary { Median, Mean };

struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  bool degenerate = false;
  std::string note;
  std::size_t grid_points = 0;
  /// Per-N summary values used by the fit (after excluding zeros).
  std::vector<std::pair<double, double>> summary;
};

struct FitOptions {
  RateSummary summary = RateSummary::Median;
  int resamples = 1000;
  double level = 0.95;
  std::uint64_t seed = 0x5eed;
};

/// OLS slope of log(summary) on log N with a percentile bootstrap interval
/// (replicas resampled with replacement within each N). Non-positive values
/// cannot enter a log fit and are excluded; fewer than three usable N values
/// give a degenerate fit with `note` set.
RateFit fit_rate(std::span<const RateSample> samples, const FitOptions& options = {});

}  // namespace chaoskit
