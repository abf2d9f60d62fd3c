#include "chaoskit/kernels.hpp"

#include <algorithm>
#include <stdexcept>

#include "chaoskit/error.hpp"

namespace chaoskit {

namespace {

void check_point(const KernelSpec& spec, std::span<const double> x) {
  if (static_cast<int>(x.size()) != spec.d) throw std::invalid_argument("invalid point");
  for (double c : x) {
    if (!std::isfinite(c)) throw std::invalid_argument("invalid point");
  }
}

void require_cutoff(const KernelSpec& spec) {
  if (!spec.has_cutoff()) throw std::invalid_argument("envelope undefined without cut-off");
}

}  // namespace

std::string_view to_string(KernelFamily family) noexcept {
  switch (family) {
    case KernelFamily::NewtonianExact: return "newtonian_exact";
    case KernelFamily::NewtonianCutoff: return "newtonian_cutoff";
    case KernelFamily::PowerExact: return "power_exact";
    case KernelFamily::PowerCutoff: return "power_cutoff";
  }
  return "unknown";
}

KernelFamily parse_kernel_family(std::string_view name) {
  if (name == "newtonian_exact") return KernelFamily::NewtonianExact;
  if (name == "newtonian_cutoff") return KernelFamily::NewtonianCutoff;
  if (name == "power_exact") return KernelFamily::PowerExact;
  if (name == "power_cutoff") return KernelFamily::PowerCutoff;
  throw ConfigError("unknown kernel family '" + std::string(name) + "'");
}

void KernelSpec::validate() const {
  if (d < 1) throw ConfigError("kernel.d must be >= 1");
  if (!(xi == 1.0 || xi == -1.0 || xi == 0.0)) throw ConfigError("kernel.xi must be +1, -1 or 0");
  if (!is_newtonian()) {
    if (!(alpha >= 0.0 && alpha < d - 1.0)) {
      throw ConfigError("kernel.alpha must lie in [0, d-1)");
    }
  }
  if (has_cutoff()) {
    const double upper = 1.0 / radial_exponent();
    if (!(delta > 0.0 && delta < upper)) {
      throw ConfigError(is_newtonian() ? "kernel.delta must lie in (0, 1/d)"
                                       : "kernel.delta must lie in (0, 1/(1+alpha))");
    }
    if (!(big_n >= 1.0 && std::isfinite(big_n))) throw ConfigError("kernel N must be >= 1");
  }
}

RadialFactor::RadialFactor(const KernelSpec& spec)
    : exponent_(spec.radial_exponent()),
      cutoff2_(spec.has_cutoff() ? spec.cutoff_radius() * spec.cutoff_radius() : 0.0),
      xi_(spec.xi) {
  if (exponent_ == 1.0) {
    shape_ = Shape::Inv1;
  } else if (exponent_ == 1.5) {
    shape_ = Shape::Inv1p5;
  } else if (exponent_ == 2.0) {
    shape_ = Shape::Inv2;
  } else if (exponent_ == 3.0) {
    shape_ = Shape::Inv3;
  } else {
    shape_ = Shape::Generic;
  }
}

double norm(std::span<const double> x) noexcept {
  double s = 0.0;
  for (double c : x) s += c * c;
  return std::sqrt(s);
}

Point force(const KernelSpec& spec, std::span<const double> x) {
  check_point(spec, x);
  double r2 = 0.0;
  for (double c : x) r2 += c * c;
  const double factor = RadialFactor(spec)(r2);
  Point out(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) out[k] = x[k] * factor;
  return out;
}

double envelope(const KernelSpec& spec, std::span<const double> x) {
  require_cutoff(spec);
  check_point(spec, x);
  const double k = spec.radial_exponent();
  const double r = norm(x);
  if (r >= k * spec.cutoff_radius()) return std::pow(r, -k);
  return std::pow(spec.big_n, k * spec.delta);
}

double lipschitz_bound(const KernelSpec& spec, std::span<const double> x,
                       std::span<const double> y) {
  require_cutoff(spec);
  check_point(spec, x);
  check_point(spec, y);
  double dist2 = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) dist2 += (x[k] - y[k]) * (x[k] - y[k]);
  const double rc = spec.cutoff_radius();
  const double kexp = spec.radial_exponent();
  const double wx = std::pow(std::max(norm(x), rc), -kexp);
  const double wy = std::pow(std::max(norm(y), rc), -kexp);
  return std::sqrt(dist2) * (wx + wy);
}

}  // namespace chaoskit
