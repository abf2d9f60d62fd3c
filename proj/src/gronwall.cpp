#include "chaoskit/gronwall.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "chaoskit/format.hpp"
#include "chaoskit/rng.hpp"

namespace chaoskit {

void ScalarPath::validate() const {
  if (grid.empty() || grid.size() != values.size()) {
    throw std::invalid_argument("path grid and values must be nonempty and of equal length");
  }
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!std::isfinite(grid[i]) || (i > 0 && !(grid[i] > grid[i - 1]))) {
      throw std::invalid_argument("path grid must be strictly increasing");
    }
    if (!std::isfinite(values[i]) || values[i] < 0.0) {
      throw std::invalid_argument("path values must be finite and nonnegative");
    }
  }
}

double ScalarPath::at(double t) const {
  if (t < grid.front() || t > grid.back()) throw std::invalid_argument("time outside grid");
  const auto it = std::upper_bound(grid.begin(), grid.end(), t);
  if (it == grid.end()) return values.back();
  const std::size_t k = static_cast<std::size_t>(it - grid.begin()) - 1;
  const double w = (t - grid[k]) / (grid[k + 1] - grid[k]);
  return values[k] + w * (values[k + 1] - values[k]);
}

namespace {

void check_common(const ScalarPath& a, const ScalarPath& b) {
  a.validate();
  b.validate();
  if (a.grid != b.grid) throw std::invalid_argument("paths must share one grid");
}

}  // namespace

std::vector<double> gronwall1_curve(const ScalarPath& h, const ScalarPath& h_prime, const ScalarPath& g) {
  check_common(h, g);
  check_common(h_prime, g);
  const std::size_t n = g.grid.size();
  // bound(t_k) = e^{G_k} (h_0 + int_0^{t_k} h'(s) e^{-G(s)} ds)
  std::vector<double> out(n);
  double G = 0.0, acc = h.values[0];
  double prev = h_prime.values[0];
  out[0] = h.values[0];
  for (std::size_t k = 1; k < n; ++k) {
    const double dt = g.grid[k] - g.grid[k - 1];
    G += 0.5 * dt * (g.values[k - 1] + g.values[k]);
    const double cur = h_prime.values[k] * std::exp(-G);
    acc += 0.5 * dt * (prev + cur);
    prev = cur;
    out[k] = std::exp(G) * acc;
  }
  return out;
}

double gronwall1_bound(const ScalarPath& h, const ScalarPath& h_prime, const ScalarPath& g, double t) {
  check_common(h, g);
  check_common(h_prime, g);
  const auto& grid = g.grid;
  if (!(t >= grid.front() && t <= grid.back())) throw std::invalid_argument("time outside grid");
  // Work relative to G(t) so that only nonpositive exponents appear.
  std::size_t k = static_cast<std::size_t>(std::upper_bound(grid.begin(), grid.end(), t) - grid.begin()) - 1;
  if (k + 1 == grid.size()) k = grid.size() - 1;
  std::vector<double> G(k + 1, 0.0);
  for (std::size_t j = 1; j <= k; ++j) {
    G[j] = G[j - 1] + 0.5 * (grid[j] - grid[j - 1]) * (g.values[j - 1] + g.values[j]);
  }
  const double gt = g.at(t);
  const double Gt = G[k] + 0.5 * (t - grid[k]) * (g.values[k] + gt);
  double integral = 0.0;
  for (std::size_t j = 1; j <= k; ++j) {
    integral += 0.5 * (grid[j] - grid[j - 1]) *
                (h_prime.values[j - 1] * std::exp(Gt - G[j - 1]) + h_prime.values[j] * std::exp(Gt - G[j]));
  }
  integral += 0.5 * (t - grid[k]) * (h_prime.values[k] * std::exp(Gt - G[k]) + h_prime.at(t));
  return h.values[0] * std::exp(Gt) + integral;
}

double gronwall2_bound(double f0, double C, double t, double T) {
  if (!(C >= 0.0 && T > 0.0 && std::isfinite(C) && std::isfinite(T))) {
    throw std::invalid_argument("log-Gronwall needs C >= 0 and T > 0");
  }
  if (!(t >= 0.0 && t <= T)) throw std::invalid_argument("time outside [0, T]");
  const double limit = std::min(std::exp(1.0 - std::exp(C * T)), 1.0);
  if (!(f0 >= 0.0 && f0 < limit)) throw std::domain_error("initial datum too large for log-Gronwall");
  if (f0 == 0.0) return 0.0;
  return std::exp(1.0 - (1.0 - std::log(f0)) * std::exp(-C * t));
}

namespace {

void check_superlinear(double C0, double C1, double gamma) {
  if (!(C0 > 0.0 && C1 > 0.0 && gamma > 1.0 && std::isfinite(C0) && std::isfinite(C1) && std::isfinite(gamma))) {
    throw std::invalid_argument("superlinear Gronwall needs C0 > 0, C1 > 0 and gamma > 1");
  }
}

}  // namespace

double superlinear_coefficient(double C1, double gamma, SuperlinearForm form) {
  switch (form) {
    case SuperlinearForm::Proof: return C1 / (gamma - 1.0);
    case SuperlinearForm::Statement: return C1 * C1 / (gamma - 1.0);
    case SuperlinearForm::Exact: return (gamma - 1.0) * C1;
  }
  return C1 / (gamma - 1.0);
}

double gronwall3_blowup_time(double C0, double C1, double gamma, SuperlinearForm form) {
  check_superlinear(C0, C1, gamma);
  return std::pow(C0, 1.0 - gamma) / superlinear_coefficient(C1, gamma, form);
}

double gronwall3_bound(double C0, double C1, double gamma, double t, SuperlinearForm form) {
  check_superlinear(C0, C1, gamma);
  if (!(t >= 0.0)) throw std::invalid_argument("time must be >= 0");
  const double base = std::pow(C0, 1.0 - gamma) - superlinear_coefficient(C1, gamma, form) * t;
  if (!(base > 0.0)) throw std::domain_error("bound blown up");
  return std::pow(base, 1.0 / (1.0 - gamma));
}

std::vector<double> rk4_scalar(const std::function<double(double)>& rhs, double f0, double h,
                               std::size_t steps, std::size_t record_every) {
  if (record_every == 0) record_every = 1;
  std::vector<double> out{f0};
  double f = f0;
  for (std::size_t k = 1; k <= steps; ++k) {
    const double k1 = rhs(f);
    const double k2 = rhs(f + 0.5 * h * k1);
    const double k3 = rhs(f + 0.5 * h * k2);
    const double k4 = rhs(f + h * k3);
    f += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (k % record_every == 0 || k == steps) out.push_back(f);
  }
  return out;
}

std::vector<double> solve_linear_volterra(const ScalarPath& h, const ScalarPath& g) {
  check_common(h, g);
  const std::size_t n = g.grid.size();
  std::vector<double> f(n);
  f[0] = h.values[0];
  double integral = 0.0;  // int_0^{t_{k-1}} g f
  for (std::size_t k = 1; k < n; ++k) {
    const double dt = g.grid[k] - g.grid[k - 1];
    const double denom = 1.0 - 0.5 * dt * g.values[k];
    if (!(denom > 0.0)) throw std::invalid_argument("grid too coarse for the kernel");
    f[k] = (h.values[k] + integral + 0.5 * dt * g.values[k - 1] * f[k - 1]) / denom;
    integral += 0.5 * dt * (g.values[k - 1] * f[k - 1] + g.values[k] * f[k]);
  }
  return f;
}

// -------------------------------------------------------------- suite

namespace {

std::string params(std::initializer_list<std::pair<const char*, double>> kv) {
  std::string s;
  for (const auto& [k, v] : kv) {
    if (!s.empty()) s += ' ';
    s += std::string(k) + '=' + fmt_double(v);
  }
  return s;
}

// Piecewise-linear nonnegative function with knots every 0.1 on [0, 1].
std::vector<double> knot_values(const CounterRng& rng, std::uint32_t trial, std::uint32_t which, double scale) {
  std::vector<double> k(11);
  for (std::uint32_t i = 0; i < 11; ++i) k[i] = scale * rng.uniform_pair(trial, which, i).first;
  return k;
}

double knot_eval(const std::vector<double>& knots, double t) {
  const double s = t * 10.0;
  const auto i = std::min<std::size_t>(static_cast<std::size_t>(s), 9);
  const double w = s - static_cast<double>(i);
  return knots[i] + w * (knots[i + 1] - knots[i]);
}

}  // namespace

CheckReport run_gronwall_suite(const GronwallSuiteOptions& o) {
  CheckReport report;
  report.title = "gronwall verifiers";
  const CounterRng rng(StreamKey{o.seed, StreamRole::Validation, 0x20000});
  const auto steps = static_cast<std::size_t>(std::llround(1.0 / o.grid_step));

  for (int trial = 0; trial < o.trials; ++trial) {
    const auto id = static_cast<std::uint32_t>(trial);
    // Linear: h' and g piecewise linear, h = h0 + int h'.
    const auto hp = knot_values(rng, id, 0, 2.0);
    const auto gk = knot_values(rng, id, 1, 3.0);
    const double h0 = rng.uniform_pair(id, 2, 0).first;
    ScalarPath h, dh, g;
    for (std::size_t i = 0; i <= steps; ++i) {
      const double t = static_cast<double>(i) / static_cast<double>(steps);
      h.grid.push_back(t);
      dh.grid.push_back(t);
      g.grid.push_back(t);
      dh.values.push_back(knot_eval(hp, t));
      g.values.push_back(knot_eval(gk, t));
      h.values.push_back(i == 0 ? h0 : h.values.back() + 0.5 * (t - h.grid[i - 1]) * (dh.values[i - 1] + dh.values[i]));
    }
    const auto solution = solve_linear_volterra(h, g);
    const auto bound = gronwall1_curve(h, dh, g);
    double worst = 0.0;
    for (std::size_t i = 0; i < solution.size(); ++i) {
      worst = std::max(worst, solution[i] / bound[i] - 1.0);
    }
    report.add("linear trial " + std::to_string(trial), worst <= 1e-4, worst, 1e-4,
               params({{"h0", h0}}) + " max relative excess of the equality solution");
  }

  for (int trial = 0; trial < o.trials; ++trial) {
    const auto id = static_cast<std::uint32_t>(trial);
    const auto [u1, u2] = rng.uniform_pair(id, 10, 0);
    const auto [u3, unused] = rng.uniform_pair(id, 10, 1);
    (void)unused;
    const double C = 0.5 + 1.5 * u1;
    const double T = 0.2 + 0.8 * u2;
    const double limit = std::min(std::exp(1.0 - std::exp(C * T)), 1.0);
    const double f0 = limit * std::exp(-8.0 * u3 - 1e-3);
    const auto n = static_cast<std::size_t>(std::ceil(T / o.rk4_step));
    const double h = T / static_cast<double>(n);
    const std::size_t every = std::max<std::size_t>(1, n / 100);
    const auto path = rk4_scalar(
        [C](double f) { return C * f * (1.0 - std::min(std::log(f), 0.0)); }, f0, h, n, every);
    double worst = 0.0;
    for (std::size_t i = 0; i < path.size(); ++i) {
      const double t = i + 1 == path.size() ? T : static_cast<double>(i * every) * h;
      worst = std::max(worst, std::abs(path[i] - gronwall2_bound(f0, C, std::min(t, T), T)));
    }
    report.add("logarithmic trial " + std::to_string(trial), worst <= 1e-6, worst, 1e-6,
               params({{"f0", f0}, {"C", C}, {"T", T}}) + " max |RK4 - bound|");
  }

  double shortfall = 0.0;
  for (int trial = 0; trial < o.trials; ++trial) {
    const auto id = static_cast<std::uint32_t>(trial);
    const auto [u1, u2] = rng.uniform_pair(id, 20, 0);
    const auto [u3, unused] = rng.uniform_pair(id, 20, 1);
    (void)unused;
    const double C0 = 0.5 + 1.5 * u1;
    const double C1 = 0.5 + 1.5 * u2;
    const double gamma = 1.5 + 1.5 * u3;
    for (const auto form : {SuperlinearForm::Exact, SuperlinearForm::Proof}) {
      // Equality ODE of this form: f' = k / (gamma - 1) f^gamma.
      const double rate = superlinear_coefficient(C1, gamma, form) / (gamma - 1.0);
      const double tmax = 0.9 * gronwall3_blowup_time(C0, C1, gamma, form);
      const auto n = static_cast<std::size_t>(std::ceil(tmax / o.rk4_step));
      const double h = tmax / static_cast<double>(n);
      const std::size_t every = std::max<std::size_t>(1, n / 100);
      const auto path = rk4_scalar([rate, gamma](double f) { return rate * std::pow(f, gamma); }, C0, h, n, every);
      double worst = 0.0;
      for (std::size_t i = 0; i < path.size(); ++i) {
        const double t = i + 1 == path.size() ? tmax : static_cast<double>(i * every) * h;
        const double b = gronwall3_bound(C0, C1, gamma, std::min(t, tmax), form);
        worst = std::max(worst, std::abs(path[i] - b) / b);
        if (form == SuperlinearForm::Exact) {
          const double tp = gronwall3_blowup_time(C0, C1, gamma, SuperlinearForm::Proof);
          if (t < tp) shortfall = std::max(shortfall, path[i] / gronwall3_bound(C0, C1, gamma, t) - 1.0);
        }
      }
      const bool exact = form == SuperlinearForm::Exact;
      report.add(std::string(exact ? "superlinear trial " : "superlinear proof-form trial ") + std::to_string(trial),
                 worst <= 1e-6, worst, 1e-6,
                 params({{"C0", C0}, {"C1", C1}, {"gamma", gamma}}) +
                     (exact ? " RK4 of f' = C1 f^gamma against the exact form"
                            : " RK4 of f' = C1 f^gamma / (gamma - 1)^2 against the proof form"));
    }
  }
  report.data["proof_form_shortfall"] = shortfall;
  return report;
}

}  // namespace chaoskit
