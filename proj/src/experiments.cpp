#include "chaoskit/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

#include <omp.h>

#include "chaoskit/error.hpp"
#include "chaoskit/format.hpp"
#include "chaoskit/measures.hpp"
#include "chaoskit/transport.hpp"

namespace chaoskit {

namespace {

std::string fmt(double v) {
  std::ostringstream s;
  s << v;
  return s.str();
}

bool is_distance_leg(std::string_view leg) {
  return leg == legs::kCoupledSup || leg == legs::kReferenceToPilot || leg == legs::kHeadline ||
         leg == legs::kCutoffGap;
}

std::vector<double> event_times(const std::vector<double>& requested, double T) {
  std::vector<double> times = requested;
  times.push_back(T);
  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end()), times.end());
  return times;
}

// First N indices of a seeded permutation of [0, m) split into two disjoint
// blocks of size n.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> disjoint_subsamples(
    std::size_t m, std::size_t n, const StreamKey& key, std::uint32_t lane) {
  std::vector<std::size_t> idx(m);
  std::iota(idx.begin(), idx.end(), 0);
  CounterEngine engine(key, lane);
  for (std::size_t i = 0; i < 2 * n; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, m - 1);
    std::swap(idx[i], idx[pick(engine)]);
  }
  return {std::vector<std::size_t>(idx.begin(), idx.begin() + n),
          std::vector<std::size_t>(idx.begin() + n, idx.begin() + 2 * n)};
}

double coupled_mean_gap(const Ensemble& a, const Ensemble& b, double p) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double r2 = 0.0;
    for (int k = 0; k < a.d; ++k) {
      const std::size_t c = i * a.d + k;
      r2 += (a.x[c] - b.x[c]) * (a.x[c] - b.x[c]) + (a.v[c] - b.v[c]) * (a.v[c] - b.v[c]);
    }
    s += std::pow(std::sqrt(r2), p);
  }
  return std::pow(s / static_cast<double>(a.size()), 1.0 / p);
}

}  // namespace

double conjugate_exponent(double ell) {
  if (std::isinf(ell)) return 1.0;
  if (!(ell > 1.0)) return std::numeric_limits<double>::infinity();
  return ell / (ell - 1.0);
}

std::vector<double> default_c_grid() {
  std::vector<double> grid;
  for (int k = -8; k <= 8; ++k) grid.push_back(std::pow(2.0, 0.5 * k));
  return grid;
}

double ChaosExperiment::base_time_step(std::size_t n) const {
  if (!auto_dt) return sim.dt;
  KernelSpec k = kernel;
  k.big_n = static_cast<double>(n);
  return default_time_step(k, init.rms_speed(kernel.d), sim.T, dt_cap);
}

void ChaosExperiment::validate() const {
  kernel.validate();
  init.validate(kernel.d);
  SimParams s = sim;
  if (auto_dt) s.dt = sim.T;
  s.validate();
  if (n_grid.empty()) throw ConfigError("experiment.N_grid must not be empty");
  for (std::size_t i = 0; i < n_grid.size(); ++i) {
    if (n_grid[i] < 1) throw ConfigError("experiment.N_grid entries must be >= 1");
    if (i > 0 && n_grid[i] <= n_grid[i - 1]) {
      throw ConfigError("experiment.N_grid must be strictly increasing");
    }
  }
  if (n_max() > kMaxExactSize) {
    throw ConfigError("experiment.N_grid entries must be <= " + std::to_string(kMaxExactSize));
  }
  if (replicas < 1) throw ConfigError("experiment.replicas must be >= 1");
  if (pilot_factor < 2) throw ConfigError("experiment.pilot_factor must be >= 2");
  if (refinement < 1 || sim.noise_substeps % refinement != 0) {
    throw ConfigError("refinement must divide sim.noise_substeps");
  }
  if (!(p >= 1.0) || !std::isfinite(p)) throw ConfigError("experiment.p must lie in [1, inf)");
  for (double t : observation_times) {
    if (!(t > 0.0 && t <= sim.T)) throw ConfigError("observation times must lie in (0, T]");
  }
  if (!kernel.has_cutoff()) throw ConfigError("chaos runs need a cut-off kernel family");
  if (auto_dt && !std::isfinite(init.rms_speed(kernel.d))) {
    throw ConfigError("automatic dt needs finite initial kinetic energy");
  }
  if (!(dt_cap > 0.0)) throw ConfigError("sim.dt_cap must be > 0");
  if (!(proxy_delta_factor > 1.0)) throw ConfigError("experiment.proxy_delta_factor must be > 1");
}

std::vector<std::string> hypothesis_violations(const ChaosExperiment& exp) {
  std::vector<std::string> out;
  const KernelSpec& k = exp.kernel;
  const double d = k.d;
  const double p = exp.p, q = exp.q, eps = exp.epsilon, g = exp.gamma, delta = k.delta;
  if (!(k.d > 1)) out.push_back("kernel.d: d > 1 required");
  if (!(q >= 2.0)) out.push_back("experiment.q: q >= 2 required");
  if (!(p >= 1.0 && p < 2.0 * q)) out.push_back("experiment.p: p must lie in [1, 2q)");
  if (!(exp.sim.sigma > 0.0)) out.push_back("sim.sigma: sigma > 0 required");
  if (!(exp.init.moment_limit(k.d) > q)) {
    out.push_back("init: f0 must have a finite q-th moment (q < gamma_v - d)");
  }
  if (k.is_newtonian()) {
    if (!(delta > 0.0 && delta < 1.0 / d)) out.push_back("kernel.delta: 0 < delta < 1/d required");
    const double cap = std::min(1.0 / (2.0 * std::max(d, p)), delta);
    if (!(g > 0.0 && g < cap)) {
      out.push_back("experiment.gamma: gamma must lie in (0, min(1/(2 max(d,p)), delta)) = (0, " +
                    fmt(cap) + ")");
    }
    const double upper = p * g < 1.0 ? q - p / (1.0 - p * g) : -1.0;
    if (!(eps > 0.0 && eps < upper)) {
      out.push_back("experiment.epsilon: epsilon must lie in (0, q - p/(1 - p gamma)) = (0, " +
                    fmt(upper) + ")");
    }
  } else {
    const double lp = conjugate_exponent(exp.ell);
    const double a = k.alpha;
    if (!(exp.ell >= 1.0)) out.push_back("experiment.ell: ell >= 1 required");
    if (!(a >= 0.0 && a < d / lp - 1.0)) {
      out.push_back("kernel.alpha: 0 <= alpha < d/ell' - 1 required (d/ell' - 1 = " +
                    fmt(d / lp - 1.0) + ")");
    }
    const bool branch_a = lp / d <= delta && delta < 1.0 / (1.0 + a);
    const bool branch_b = lp > d / (2.0 * (1.0 + a)) && delta < lp / d && delta > 0.0;
    if (!(branch_a || branch_b)) {
      out.push_back(
          "kernel.delta: need ell'/d <= delta < 1/(1+alpha), or ell' > d/(2(1+alpha)) and "
          "delta < ell'/d");
    }
    const double upper = p * delta < 1.0 ? q - p / (1.0 - p * delta) : -1.0;
    if (!(eps > 0.0 && eps < upper)) {
      out.push_back("experiment.epsilon: epsilon must lie in (0, q - p/(1 - p delta)) = (0, " +
                    fmt(upper) + ")");
    }
    if (!(g > 0.0 && g <= delta)) out.push_back("experiment.gamma: 0 < gamma <= delta required");
  }
  return out;
}

// ---------------------------------------------------------------- reports

const LegRecord* RateReport::find(std::string_view leg, std::size_t n, double t) const {
  for (const auto& r : per_n) {
    if (r.leg == leg && r.n == n && std::abs(r.t - t) <= 1e-12 * std::max(1.0, t)) return &r;
  }
  return nullptr;
}

std::vector<RateSample> RateReport::samples(std::string_view leg, double t) const {
  std::vector<RateSample> out;
  for (const auto& r : per_n) {
    if (r.leg == leg && std::abs(r.t - t) <= 1e-12 * std::max(1.0, t)) {
      out.push_back(RateSample{static_cast<double>(r.n), r.values});
    }
  }
  return out;
}

double RateReport::final_time() const {
  double t = 0.0;
  for (const auto& r : per_n) t = std::max(t, r.t);
  return t;
}

namespace {

nlohmann::json fit_json(const RateFit& f) {
  nlohmann::json j;
  auto num = [](double v) -> nlohmann::json {
    if (std::isfinite(v)) return v;
    return nullptr;
  };
  j["slope"] = num(f.slope);
  j["ci_low"] = num(f.ci_low);
  j["ci_high"] = num(f.ci_high);
  j["degenerate"] = f.degenerate;
  if (!f.note.empty()) j["note"] = f.note;
  j["grid_points"] = f.grid_points;
  nlohmann::json s = nlohmann::json::array();
  for (const auto& [n, v] : f.summary) s.push_back({{"N", n}, {"value", v}});
  j["summary"] = s;
  return j;
}

}  // namespace

nlohmann::json to_json(const RateReport& report) {
  nlohmann::json j;
  j["config"] = report.config;
  nlohmann::json per = nlohmann::json::array();
  for (const auto& r : report.per_n) {
    nlohmann::json e;
    e["N"] = r.n;
    e["t"] = r.t;
    e["leg"] = r.leg;
    e["values"] = r.values;
    nlohmann::json ex = nlohmann::json::object();
    for (const auto& [c, f] : r.exceedance) ex[fmt_double(c)] = f;
    e["exceedance"] = ex;
    per.push_back(e);
  }
  j["per_N"] = per;
  j["headline_leg"] = report.headline_leg;
  j["fit"] = fit_json(report.fit);
  nlohmann::json fits = nlohmann::json::object();
  for (const auto& [leg, f] : report.leg_fits) fits[leg] = fit_json(f);
  j["leg_fits"] = fits;
  j["metadata"] = report.metadata;
  j["warnings"] = report.warnings;
  j["replicas_attempted"] = report.attempted;
  j["replicas_failed"] = report.failed;
  return j;
}

void write_rate_csv(std::ostream& out, const RateReport& report) {
  out << "N,t,leg,replica,value\n";
  for (const auto& r : report.per_n) {
    for (std::size_t i = 0; i < r.values.size(); ++i) {
      out << r.n << ',' << fmt_double(r.t) << ',' << r.leg << ',' << i << ','
          << fmt_double(r.values[i]) << '\n';
    }
  }
}

nlohmann::json describe(const ChaosExperiment& exp) {
  nlohmann::json j;
  j["kernel"] = {{"family", std::string(to_string(exp.kernel.family))},
                 {"d", exp.kernel.d},
                 {"delta", exp.kernel.delta},
                 {"alpha", exp.kernel.alpha},
                 {"xi", exp.kernel.xi}};
  j["sim"] = {{"sigma", exp.sim.sigma},
              {"T", exp.sim.T},
              {"seed", exp.sim.seed},
              {"noise_substeps", exp.sim.noise_substeps}};
  if (exp.auto_dt) {
    j["sim"]["dt"] = "auto";
    j["sim"]["dt_cap"] = std::isfinite(exp.dt_cap) ? nlohmann::json(exp.dt_cap) : nlohmann::json("inf");
  } else {
    j["sim"]["dt"] = exp.sim.dt;
  }
  j["init"] = {{"kind", std::string(to_string(exp.init.kind))},
               {"x_mean", exp.init.x_mean},
               {"x_scale", exp.init.x_scale},
               {"v_mean", exp.init.v_mean},
               {"v_scale", exp.init.v_scale},
               {"x_half_width", exp.init.x_half_width},
               {"v_half_width", exp.init.v_half_width},
               {"gamma_v", exp.init.gamma_v}};
  j["experiment"] = {{"N_grid", exp.n_grid},
                     {"replicas", exp.replicas},
                     {"observation_times", exp.observation_times},
                     {"p", exp.p},
                     {"q", exp.q},
                     {"epsilon", exp.epsilon},
                     {"gamma", exp.gamma},
                     {"ell", std::isfinite(exp.ell) ? nlohmann::json(exp.ell) : nlohmann::json("inf")},
                     {"pilot_factor", exp.pilot_factor},
                     {"refinement", exp.refinement},
                     {"cutoff_leg", exp.cutoff_leg},
                     {"proxy_delta_factor", exp.proxy_delta_factor}};
  return j;
}

void finalize_report(RateReport& report, double gamma, const std::vector<double>& c_grid,
                     const FitOptions& options) {
  for (auto& r : report.per_n) {
    r.exceedance.clear();
    if (!is_distance_leg(r.leg) && r.leg != legs::kJMax) continue;
    const double scale = std::pow(static_cast<double>(r.n), -gamma);
    for (double c : c_grid) r.exceedance.emplace_back(c, exceedance_frequency(r.values, c * scale));
  }
  const double tf = report.final_time();
  report.leg_fits.clear();
  std::vector<std::string> seen;
  for (const auto& r : report.per_n) {
    if (std::find(seen.begin(), seen.end(), r.leg) == seen.end()) seen.push_back(r.leg);
  }
  for (const auto& leg : seen) {
    if (!is_distance_leg(leg) && leg != report.headline_leg) continue;
    const auto s = report.samples(leg, tf);
    report.leg_fits[leg] = fit_rate(s, options);
  }
  if (report.leg_fits.count(report.headline_leg)) {
    report.fit = report.leg_fits[report.headline_leg];
    if (report.fit.degenerate) report.warnings.push_back(report.fit.note);
  }
}

// ---------------------------------------------------------------- chaos run

namespace {

struct ProxyLeg {
  std::vector<double> times;
  std::map<std::size_t, std::vector<double>> by_n;  // N -> value per time
  double dt = 0.0;
};

// Advances a cloud on the proxy grid and captures it at each time.
std::vector<Ensemble> proxy_trajectory(const KernelSpec& spec, const SimParams& sim,
                                       const InitialLaw& law, std::size_t size,
                                       const std::vector<double>& times) {
  const StreamKey init{sim.seed, StreamRole::ProxyPilotInit, 0};
  const StreamKey noise{sim.seed, StreamRole::ProxyPilot, 0};
  Ensemble ens = sample_initial(law, size, spec.d, init);
  std::vector<Ensemble> snaps;
  std::size_t next = 0;
  const std::size_t steps = sim.num_steps();
  const double eps = 1e-12 * sim.T;
  for (std::size_t k = 0; k < steps && next < times.size(); ++k) {
    Ensemble nxt = step_interacting(ens, spec, sim, noise, static_cast<std::uint32_t>(k), sim.step_size(k));
    nxt.t = (k + 1 == steps) ? sim.T : static_cast<double>(k + 1) * sim.dt;
    ens = std::move(nxt);
    while (next < times.size() && ens.t >= times[next] - eps) {
      snaps.push_back(ens);
      ++next;
    }
  }
  return snaps;
}

ProxyLeg measure_cutoff_gap(const ChaosExperiment& exp, const std::vector<double>& times) {
  ProxyLeg leg;
  leg.times = times;
  const std::size_t size = exp.n_max();
  KernelSpec proxy = exp.kernel;
  proxy.big_n = std::pow(static_cast<double>(exp.n_max()), exp.proxy_delta_factor);
  SimParams sim = exp.sim;
  sim.threads = exp.threads;
  const double v_ref = exp.init.rms_speed(exp.kernel.d);
  sim.dt = default_time_step(proxy, v_ref, sim.T, exp.dt_cap) / exp.refinement;
  sim.noise_substeps = exp.sim.noise_substeps / exp.refinement;
  leg.dt = sim.dt;
  const auto reference = proxy_trajectory(proxy, sim, exp.init, size, times);
  for (std::size_t n : exp.n_grid) {
    KernelSpec k = exp.kernel;
    k.big_n = static_cast<double>(n);
    const auto twin = proxy_trajectory(k, sim, exp.init, size, times);
    std::vector<double> vals;
    for (std::size_t i = 0; i < times.size(); ++i) vals.push_back(coupled_mean_gap(twin[i], reference[i], exp.p));
    leg.by_n[n] = std::move(vals);
  }
  return leg;
}

}  // namespace

RateReport run_chaos(const ChaosExperiment& exp) {
  exp.validate();
  RateReport report;
  report.config = describe(exp);
  report.headline_leg = std::string(legs::kHeadline);
  const auto times = event_times(exp.observation_times, exp.sim.T);
  const std::size_t m = exp.pilot_size();
  const bool weighted = exp.weighted();
  nlohmann::json per_n_meta = nlohmann::json::array();
  nlohmann::json failures = nlohmann::json::array();

  for (std::size_t g = 0; g < exp.n_grid.size(); ++g) {
    const std::size_t n = exp.n_grid[g];
    KernelSpec kernel = exp.kernel;
    kernel.big_n = static_cast<double>(n);
    SimParams sim = exp.sim;
    sim.threads = exp.threads;
    sim.dt = exp.base_time_step(n) / exp.refinement;
    sim.noise_substeps = exp.sim.noise_substeps / exp.refinement;

    std::vector<CouplingKeys> keys;
    for (int r = 0; r < exp.replicas; ++r) {
      keys.push_back(CouplingKeys::for_replica(sim.seed, static_cast<std::uint32_t>(r),
                                               static_cast<std::uint32_t>(g)));
    }
    CoupledEngine engine(kernel, sim, exp.init, n, m, keys);
    const auto R = static_cast<std::size_t>(exp.replicas);
    std::vector<double> jmax(R, 0.0);
    std::vector<double> snapshot_times;

    auto record = [&](std::size_t ti) {
      const double t = times[ti];
      const auto& reps = engine.replicas();
      std::vector<double> sup, jm, nu, mu;
      std::vector<double> nu_all(R, 0.0), mu_all(R, 0.0);
      const EmpiricalMeasure pilot = phase_space(engine.pilot());
#pragma omp parallel for schedule(dynamic, 1) num_threads(exp.threads > 0 ? exp.threads : omp_get_max_threads())
      for (std::size_t r = 0; r < R; ++r) {
        if (reps[r].failed) continue;
        const auto lane = static_cast<std::uint32_t>(g * 4096 + ti);
        const auto [a, b] = disjoint_subsamples(
            m, n, StreamKey{sim.seed, StreamRole::Subsample, static_cast<std::uint32_t>(r)}, lane);
        nu_all[r] = wp_exact(phase_space(reps[r].reference), pilot.select(a), exp.p).value;
        mu_all[r] = wp_exact(phase_space(reps[r].interacting), pilot.select(b), exp.p).value;
      }
      for (std::size_t r = 0; r < R; ++r) {
        if (reps[r].failed) continue;
        sup.push_back(coupled_sup(reps[r].interacting, reps[r].reference, weighted, kernel.big_n).value);
        jm.push_back(jmax[r]);
        nu.push_back(nu_all[r]);
        mu.push_back(mu_all[r]);
      }
      report.per_n.push_back({n, t, std::string(legs::kCoupledSup), sup, {}});
      report.per_n.push_back({n, t, std::string(legs::kJMax), jm, {}});
      report.per_n.push_back({n, t, std::string(legs::kReferenceToPilot), nu, {}});
      report.per_n.push_back({n, t, std::string(legs::kHeadline), mu, {}});
      const auto dens = DensityEstimate::with_defaults(spatial_marginal(engine.pilot()));
      report.per_n.push_back({n, t, std::string(legs::kPilotSupNorm), {kde_sup_norm(dens)}, {}});
      snapshot_times.push_back(engine.time());
    };

    std::size_t next = 0;
    const double eps = 1e-12 * sim.T;
    while (!engine.finished()) {
      engine.advance();
      const auto& reps = engine.replicas();
      for (std::size_t r = 0; r < R; ++r) {
        if (reps[r].failed) continue;
        jmax[r] = std::max(jmax[r], j_functional(reps[r].interacting, reps[r].reference,
                                                 kernel.delta, kernel.big_n, weighted));
      }
      bool taken = false;
      while (next < times.size() && engine.time() >= times[next] - eps) {
        if (!taken) record(next);
        taken = true;
        ++next;
      }
    }

    std::size_t failed_here = 0;
    for (const auto& rep : engine.replicas()) {
      ++report.attempted;
      if (rep.failed) {
        ++failed_here;
        ++report.failed;
        failures.push_back({{"N", n}, {"message", rep.failure}});
        report.warnings.push_back("excluded " + rep.failure + " at N=" + std::to_string(n));
      }
    }
    per_n_meta.push_back({{"N", n},
                          {"dt", sim.dt},
                          {"steps", sim.num_steps()},
                          {"noise_substeps", sim.noise_substeps},
                          {"cutoff_radius", kernel.cutoff_radius()},
                          {"snapshot_times", snapshot_times},
                          {"failed_replicas", failed_here}});
  }

  if (exp.cutoff_leg) {
    const ProxyLeg proxy = measure_cutoff_gap(exp, times);
    for (const auto& [n, vals] : proxy.by_n) {
      for (std::size_t i = 0; i < times.size(); ++i) {
        report.per_n.push_back({n, times[i], std::string(legs::kCutoffGap), {vals[i]}, {}});
      }
    }
    report.metadata["cutoff_leg"] = {
        {"proxy_cutoff_radius", std::pow(static_cast<double>(exp.n_max()), -exp.proxy_delta_factor * exp.kernel.delta)},
        {"cloud_size", exp.n_max()},
        {"dt", proxy.dt},
        {"estimator", "synchronously coupled clouds, (mean |dz|^p)^(1/p)"}};
  }

  report.metadata["pilot_size"] = m;
  report.metadata["subsample"] = "disjoint random pilot subsamples of size N per replica";
  report.metadata["per_N"] = per_n_meta;
  report.metadata["failures"] = failures;
  report.metadata["weighted_coupling"] = weighted;
  report.metadata["surrogate_note"] =
      "the headline leg compares with a pilot interacting cloud standing in for the mean-field law";
  if (report.failed_fraction() > 0.1) {
    report.warnings.push_back("more than 10% of replicas failed");
  }
  finalize_report(report, exp.rate(), exp.c_grid.empty() ? default_c_grid() : exp.c_grid);
  return report;
}

// ------------------------------------------------------------ bound curves

BoundCurves bound_curves(double n, double x, double p, double d, double q, double epsilon,
                         double gamma) {
  if (!(n >= 1.0 && x > 0.0 && p >= 1.0 && d > 0.0)) {
    throw std::invalid_argument("bound_curves: parameters out of range");
  }
  BoundCurves b;
  b.moment_term = n * std::pow(n * x, -(q - epsilon) / p);
  b.polynomial_term = std::pow(n, (1.0 / p) * (1.0 - (1.0 - p * gamma) * (q - epsilon) / p));
  if (p > d) {
    b.regime = "p>d";
    b.neg_log_a = n * x * x;
    b.neg_log_cn = std::pow(n, 1.0 - 2.0 * p * gamma) / p;
  } else if (p == d) {
    b.regime = "p=d";
    const double l = std::log(2.0 + 1.0 / x);
    b.neg_log_a = n * (x / l) * (x / l);
    const double lc = std::log(2.0 + std::pow(n, p * gamma));
    b.neg_log_cn = std::pow(n, 1.0 - 2.0 * p * gamma) / (p * lc * lc);
  } else {
    b.regime = "p<d";
    b.neg_log_a = n * std::pow(x, 2.0 * d / p);
    b.neg_log_cn = std::pow(n, 1.0 - 2.0 * d * gamma) / p;
  }
  return b;
}

double sampling_rate_exponent(double p, double d) {
  return p > d ? -1.0 / (2.0 * p) : -1.0 / (2.0 * d);
}

}  // namespace chaoskit
