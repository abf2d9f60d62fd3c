#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace chaoskit {

enum class KernelFamily { NewtonianExact, NewtonianCutoff, PowerExact, PowerCutoff };

std::string_view to_string(KernelFamily family) noexcept;
KernelFamily parse_kernel_family(std::string_view name);

/// Interaction force selector.
///
/// Newtonian:  F(x) = xi x / |x|^d,           cut-off F^N(x) = xi x / max(|x|, N^-delta)^d
/// Power law:  F(x) = xi x / |x|^(alpha+1),   cut-off F^N(x) = xi x / max(|x|, N^-delta)^(alpha+1)
///
/// The Newtonian family is the power family with alpha = d - 1. `alpha` is
/// ignored by the Newtonian families, `delta` and `big_n` by the exact ones.
/// xi = 0 switches the interaction off for null experiments.
struct KernelSpec {
  KernelFamily family = KernelFamily::NewtonianCutoff;
  int d = 2;
  double delta = 0.3;
  double alpha = 0.0;
  double xi = 1.0;
  double big_n = 1.0;

  bool has_cutoff() const noexcept {
    return family == KernelFamily::NewtonianCutoff || family == KernelFamily::PowerCutoff;
  }
  bool is_newtonian() const noexcept {
    return family == KernelFamily::NewtonianExact || family == KernelFamily::NewtonianCutoff;
  }
  /// Effective singularity exponent alpha (d - 1 for Newtonian kernels).
  double singularity() const noexcept { return is_newtonian() ? d - 1.0 : alpha; }
  /// k in x / |x|^k.
  double radial_exponent() const noexcept { return singularity() + 1.0; }
  /// N^-delta for cut-off families, 0 otherwise.
  double cutoff_radius() const noexcept {
    return has_cutoff() ? std::pow(big_n, -delta) : 0.0;
  }

  /// Throws ConfigError when a field is out of range for the family.
  void validate() const;
};

/// Radial part of the force: for r2 = |x|^2 returns xi / max(|x|, r_N)^k, and
/// 0 at the origin of an exact kernel. force(x) = x * factor(|x|^2). The
/// shape is resolved once so that hot loops and the scalar path share one
/// arithmetic sequence and agree bitwise.
class RadialFactor {
 public:
  enum class Shape { Inv1, Inv1p5, Inv2, Inv3, Generic };

  explicit RadialFactor(const KernelSpec& spec);

  double operator()(double r2) const noexcept {
    const double m = r2 > cutoff2_ ? r2 : cutoff2_;
    if (m == 0.0) return 0.0;
    return xi_ * inverse_power(m);
  }

  /// max(|x|, r_N)^-k given m = max(|x|^2, r_N^2) > 0.
  double inverse_power(double m) const noexcept {
    switch (shape_) {
      case Shape::Inv1: return 1.0 / std::sqrt(m);
      case Shape::Inv1p5: {
        const double s = std::sqrt(m);
        return 1.0 / (s * std::sqrt(s));
      }
      case Shape::Inv2: return 1.0 / m;
      case Shape::Inv3: return 1.0 / (m * std::sqrt(m));
      case Shape::Generic: break;
    }
    return std::pow(m, -0.5 * exponent_);
  }

  Shape shape() const noexcept { return shape_; }
  double cutoff_squared() const noexcept { return cutoff2_; }
  double xi() const noexcept { return xi_; }
  double exponent() const noexcept { return exponent_; }

 private:
  Shape shape_;
  double exponent_;
  double cutoff2_;
  double xi_;
};

using Point = std::vector<double>;

/// Interaction force at x. Throws std::invalid_argument("invalid point") on
/// non-finite input or a dimension mismatch.
Point force(const KernelSpec& spec, std::span<const double> x);

/// Envelope l^N(x): 1/|x|^k if |x| >= k N^-delta, else N^(k delta), with
/// k = d (Newtonian) or alpha + 1 (power). Cut-off families only.
double envelope(const KernelSpec& spec, std::span<const double> x);

/// |x - y| (max(|x|, r_N)^-k + max(|y|, r_N)^-k): the Lipschitz certificate
/// with unit constant. Cut-off families only.
double lipschitz_bound(const KernelSpec& spec, std::span<const double> x,
                       std::span<const double> y);

double norm(std::span<const double> x) noexcept;

}  // namespace chaoskit
