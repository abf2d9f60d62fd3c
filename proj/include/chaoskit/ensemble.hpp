#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace chaoskit {

/// N phase-space particles in R^d x R^d at time t. Coordinates are stored
/// row-major: particle i occupies x[i*d .. i*d+d).
struct Ensemble {
  int d = 0;
  double t = 0.0;
  std::vector<double> x;
  std::vector<double> v;

  Ensemble() = default;
  Ensemble(int dim, std::size_t n, double time = 0.0)
      : d(dim), t(time), x(n * static_cast<std::size_t>(dim)), v(n * static_cast<std::size_t>(dim)) {}

  std::size_t size() const noexcept { return d > 0 ? x.size() / static_cast<std::size_t>(d) : 0; }

  std::span<const double> position(std::size_t i) const noexcept {
    return {x.data() + i * static_cast<std::size_t>(d), static_cast<std::size_t>(d)};
  }
  std::span<const double> velocity(std::size_t i) const noexcept {
    return {v.data() + i * static_cast<std::size_t>(d), static_cast<std::size_t>(d)};
  }
  std::span<double> position(std::size_t i) noexcept {
    return {x.data() + i * static_cast<std::size_t>(d), static_cast<std::size_t>(d)};
  }
  std::span<double> velocity(std::size_t i) noexcept {
    return {v.data() + i * static_cast<std::size_t>(d), static_cast<std::size_t>(d)};
  }

  bool all_finite() const noexcept;

  /// Throws std::invalid_argument when the shape invariants are broken.
  void validate() const;

  friend bool operator==(const Ensemble&, const Ensemble&) = default;
};

}  // namespace chaoskit
