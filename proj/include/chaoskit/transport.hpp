#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "chaoskit/dynamics.hpp"
#include "chaoskit/measures.hpp"
#include "chaoskit/rng.hpp"

namespace chaoskit {

enum class DistanceMethod { ExactAssignment, ExactQuantile, Sliced, CoupledSup };

std::string_view to_string(DistanceMethod method) noexcept;

struct DistanceResult {
  double value = 0.0;
  DistanceMethod method = DistanceMethod::ExactAssignment;
  double p = 1.0;
  int n_projections = 0;   // sliced only
  double std_error = 0.0;  // sliced only
  /// Row i of the first measure is sent to row assignment[i] of the second
  /// (exact assignment, on request).
  std::vector<std::size_t> assignment;
};

/// Largest n accepted by the dense exact solver.
inline constexpr std::size_t kMaxExactSize = 8192;

struct Assignment {
  std::vector<std::size_t> row_to_col;
  double cost = 0.0;  // sum of c(i, row_to_col[i]) in row order
};

/// Minimum-cost perfect matching for a dense n x n row-major cost matrix
/// (Jonker-Volgenant shortest augmenting paths).
Assignment solve_assignment(std::span<const double> cost, std::size_t n);

/// W_p between equal-size clouds under the Euclidean ground metric.
DistanceResult wp_exact(const EmpiricalMeasure& a, const EmpiricalMeasure& b, double p,
                        bool keep_assignment = false);

/// Exact W_p between 1-D clouds of any sizes via the quantile coupling.
DistanceResult wp_1d(const EmpiricalMeasure& a, const EmpiricalMeasure& b, double p);

/// Sliced W_p over `n_projections` uniform directions. The average of the
/// projected W_p^p is divided by E|theta_1|^p, the p-th moment of one
/// coordinate of a uniform direction, so that a pure shift is recovered at
/// its true length. std_error is the delta-method standard error.
DistanceResult wp_sliced(const EmpiricalMeasure& a, const EmpiricalMeasure& b, double p,
                         int n_projections, const StreamKey& stream);

/// E|theta_1|^p for theta uniform on the unit sphere of R^m.
double sphere_coordinate_moment(int m, double p);

/// max_i  w |X_i - Y_i| + |V_i - W_i|  with w = sqrt(ln N) when weighted,
/// 1 otherwise. Identity pairing bounds W_inf from above.
DistanceResult coupled_sup(const Ensemble& a, const Ensemble& b, bool weighted, double big_n);
DistanceResult coupled_sup(const CoupledRun& run, bool weighted, double big_n);

/// min(1, w N^delta max_i|X_i - Y_i| + N^delta max_i|V_i - W_i|), with the
/// same weight convention as coupled_sup.
double j_functional(const Ensemble& a, const Ensemble& b, double delta, double big_n,
                    bool weighted = true);
double j_functional(const CoupledRun& run, double delta, double big_n, bool weighted = true);

struct DistanceRow {
  std::uint32_t replica = 0;
  double t = 0.0;
  std::string pair;
  DistanceResult result;
};

void write_distance_csv(std::ostream& out, std::span<const DistanceRow> rows);

}  // namespace chaoskit
