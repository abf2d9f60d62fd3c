// Acceptance criteria, one PASS/FAIL line each. Usage: chaoskit_acceptance [id ...]
// with ids 1..10; no ids runs everything. Exit status is nonzero if any line fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <omp.h>

#include "chaoskit/config.hpp"
#include "chaoskit/dynamics.hpp"
#include "chaoskit/error.hpp"
#include "chaoskit/experiments.hpp"
#include "chaoskit/gronwall.hpp"
#include "chaoskit/stats.hpp"
#include "chaoskit/validators.hpp"

using namespace chaoskit;

namespace tol {
constexpr double kKernelSeconds = 30.0;
constexpr double kIntegratorSeconds = 10.0;
constexpr double kVarianceSigmas = 5.0;
constexpr double kTransportSeconds = 60.0;
constexpr double kFgOneDimSlope = -0.5;
constexpr double kFgOneDimTol = 0.08;
constexpr double kFgPhaseSlope = -0.25;
constexpr double kFgPhaseTol = 0.10;
constexpr double kFgSeconds = 600.0;
constexpr double kLlnGamma = 1.0;
constexpr double kLlnMargin = 0.3;
constexpr double kLlnSeconds = 600.0;
constexpr double kDecaySlope = -0.15;
constexpr double kJExceedFraction = 0.05;
constexpr double kDtHalvingRel = 0.05;
// Wall-clock budget of the chaos sweeps, stated for 8 workers.
constexpr double kSweepSecondsOn8 = 3600.0;
constexpr double kGronwallSeconds = 60.0;
}  // namespace tol

namespace {

struct Line {
  int id = 0;
  bool passed = false;
  std::string summary;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string num(double x, int digits = 4) {
  std::ostringstream os;
  os.precision(digits);
  os << x;
  return os.str();
}

/// Budget scaled from 8 workers to the ones available.
double sweep_budget() {
  const int workers = std::max(1, std::min(8, omp_get_max_threads()));
  return tol::kSweepSecondsOn8 * 8.0 / workers;
}

std::vector<std::size_t> powers_of_two(int lo, int hi) {
  std::vector<std::size_t> out;
  for (int k = lo; k <= hi; ++k) out.push_back(std::size_t{1} << k);
  return out;
}

std::vector<double> medians(const RateReport& r, std::string_view leg) {
  std::vector<double> out;
  for (const auto& s : r.samples(leg, r.final_time())) out.push_back(median(s.values));
  return out;
}

std::vector<double> grid_of(const RateReport& r, std::string_view leg) {
  std::vector<double> out;
  for (const auto& s : r.samples(leg, r.final_time())) out.push_back(s.n);
  return out;
}

// ------------------------------------------------------------------ 1

Line kernels() {
  const auto start = Clock::now();
  KernelCertificateOptions o = KernelCertificateOptions::defaults();
  o.n_values = {16.0, 256.0, 4096.0};
  o.pairs = 100000;
  const CheckReport r = certify_kernels(o);
  const double secs = seconds_since(start);
  std::size_t failed = 0;
  std::string first;
  for (const auto& c : r.checks) {
    if (!c.passed) {
      if (failed++ == 0) first = c.name;
    }
  }
  Line l{1, failed == 0 && secs < tol::kKernelSeconds, {}};
  l.summary = std::to_string(r.checks.size() - failed) + "/" + std::to_string(r.checks.size()) +
              " kernel checks" + (failed ? " (first failure: " + first + ")" : "") + ", runtime " + num(secs, 3) +
              " s (limit " + num(tol::kKernelSeconds) + " s)";
  return l;
}

// ------------------------------------------------------------------ 2

Ensemble evolve(Ensemble ens, const KernelSpec& spec, const SimParams& sim, const StreamKey& key) {
  for (std::size_t k = 0; k < sim.num_steps(); ++k) {
    ens = step_interacting(ens, spec, sim, key, static_cast<std::uint32_t>(k), sim.step_size(k));
  }
  return ens;
}

Line integrator() {
  const auto start = Clock::now();
  const std::size_t n = 4096;
  const int d = 2;
  const Ensemble e0 = sample_initial(InitialLaw{}, n, d, StreamKey{2, StreamRole::Init, 0});
  const KernelSpec off{KernelFamily::NewtonianCutoff, d, 0.3, 0.0, 0.0, static_cast<double>(n)};
  SimParams sim;
  sim.sigma = 0.5;
  sim.T = 1.0;
  sim.dt = 0.01;
  sim.threads = 1;
  const StreamKey noise{2, StreamRole::Shared, 0};
  const Ensemble one = evolve(e0, off, sim, noise);
  sim.threads = 8;
  const Ensemble eight = evolve(e0, off, sim, noise);

  double worst_sigmas = 0.0;
  for (int c = 0; c < d; ++c) {
    auto var = [&](const Ensemble& e) {
      double s = 0.0, s2 = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        s += e.v[i * d + c];
        s2 += e.v[i * d + c] * e.v[i * d + c];
      }
      return s2 / n - (s / n) * (s / n);
    };
    const double expected = var(e0) + 2.0 * sim.sigma * sim.T;
    worst_sigmas = std::max(worst_sigmas, std::abs(var(one) - expected) / (expected / std::sqrt(double(n))));
  }

  // Thread independence with the interaction switched on.
  KernelSpec on = off;
  on.xi = 1.0;
  SimParams short_run = sim;
  short_run.T = 0.05;
  short_run.threads = 1;
  const Ensemble on1 = evolve(e0, on, short_run, noise);
  short_run.threads = 8;
  const Ensemble on8 = evolve(e0, on, short_run, noise);

  const double secs = seconds_since(start);
  const bool bitwise = one == eight && on1 == on8;
  Line l{2, worst_sigmas <= tol::kVarianceSigmas && bitwise && secs < tol::kIntegratorSeconds, {}};
  l.summary = "velocity variance off by " + num(worst_sigmas, 3) + " Var/sqrt(N) (limit " +
              num(tol::kVarianceSigmas) + "), 1 vs 8 workers " + (bitwise ? "bitwise identical" : "DIFFER") +
              ", runtime " + num(secs, 3) + " s (limit " + num(tol::kIntegratorSeconds) + " s)";
  return l;
}

// ------------------------------------------------------------------ 3

Line transport() {
  const auto start = Clock::now();
  TransportCertificateOptions o;
  o.instances = 200;
  o.max_size = 7;
  const CheckReport r = certify_transport(o);
  const double secs = seconds_since(start);
  std::string failed;
  for (const auto& c : r.checks)
    if (!c.passed) failed += " " + c.name;
  Line l{3, r.passed() && secs < tol::kTransportSeconds, {}};
  l.summary = std::to_string(r.checks.size()) + " transport checks" + (failed.empty() ? "" : ", failed:" + failed) +
              ", runtime " + num(secs, 3) + " s (limit " + num(tol::kTransportSeconds) + " s)";
  return l;
}

// ------------------------------------------------------------------ 4

Line sampling_rates() {
  const auto start = Clock::now();
  SamplingRateOptions line;
  line.d = 1;
  line.phase_space = false;
  line.p = 1.0;
  line.n_grid = powers_of_two(6, 13);
  line.replicas = 50;
  const RateReport r1 = validate_fg(line);

  SamplingRateOptions phase = line;
  phase.d = 2;
  phase.phase_space = true;
  const RateReport r4 = validate_fg(phase);
  const double secs = seconds_since(start);

  const bool ok1 = !r1.fit.degenerate && std::abs(r1.fit.slope - tol::kFgOneDimSlope) <= tol::kFgOneDimTol;
  const bool ok4 = !r4.fit.degenerate && std::abs(r4.fit.slope - tol::kFgPhaseSlope) <= tol::kFgPhaseTol;
  Line l{4, ok1 && ok4 && secs < tol::kFgSeconds, {}};
  l.summary = "m=1 slope " + num(r1.fit.slope) + " (target " + num(tol::kFgOneDimSlope) + " +- " +
              num(tol::kFgOneDimTol) + "), m=4 slope " + num(r4.fit.slope) + " (target " +
              num(tol::kFgPhaseSlope) + " +- " + num(tol::kFgPhaseTol) + "), runtime " + num(secs, 4) +
              " s (limit " + num(tol::kFgSeconds) + " s)";
  return l;
}

// ------------------------------------------------------------------ 5

Line law_of_large_numbers() {
  const auto start = Clock::now();
  LlnOptions o;
  o.kappa = 1.0;
  o.delta = 0.25;
  o.m = 2;
  const RateReport r = validate_lln(o);
  const double secs = seconds_since(start);
  const double bound = -tol::kLlnGamma + tol::kLlnMargin;
  Line l{5, !r.fit.degenerate && r.fit.slope <= bound && secs < tol::kLlnSeconds, {}};
  l.summary = "slope " + num(r.fit.slope) + " (limit " + num(bound) + "), runtime " + num(secs, 3) +
              " s (limit " + num(tol::kLlnSeconds) + " s)";
  return l;
}

// ------------------------------------------------------------ 6, 7, 8

ChaosExperiment newtonian_sweep() {
  ChaosExperiment e;
  e.kernel = KernelSpec{KernelFamily::NewtonianCutoff, 2, 0.3, 0.0, 1.0, 1.0};
  e.sim.sigma = 0.25;
  e.sim.T = 0.5;
  e.sim.noise_substeps = 2;
  e.sim.seed = 1;
  e.auto_dt = true;
  e.dt_cap = INFINITY;
  e.n_grid = powers_of_two(6, 12);
  e.replicas = 50;
  e.p = 1.0;
  e.q = 4.0;
  e.epsilon = 1.0;
  e.gamma = 0.2;
  e.pilot_factor = 8;
  e.c_grid = default_c_grid();
  return e;
}

ChaosExperiment power_sweep() {
  ChaosExperiment e = newtonian_sweep();
  e.kernel = KernelSpec{KernelFamily::PowerCutoff, 3, 0.25, 0.5, 1.0, 1.0};
  e.ell = 4.0;
  e.gamma = 0.25;
  e.cutoff_leg = true;
  return e;
}

struct DecayCheck {
  bool passed = false;
  std::string summary;
};

/// Medians strictly decreasing in N and fitted slope <= the pinned limit.
DecayCheck decay(const RateReport& r, std::string_view leg) {
  const std::vector<double> n = grid_of(r, leg), m = medians(r, leg);
  const double rho = n.size() >= 2 ? spearman(n, m) : 0.0;
  const auto it = r.leg_fits.find(std::string(leg));
  const bool fitted = it != r.leg_fits.end() && !it->second.degenerate;
  const double slope = fitted ? it->second.slope : NAN;
  DecayCheck c;
  c.passed = fitted && rho == -1.0 && slope <= tol::kDecaySlope;
  c.summary = std::string(leg) + " Spearman " + num(rho) + " slope " + num(slope) + " (limit " +
              num(tol::kDecaySlope) + ")";
  return c;
}

double j_exceed_fraction(const RateReport& r) {
  const auto samples = r.samples(legs::kJMax, r.final_time());
  return exceedance_frequency(samples.back().values, 1.0);
}

bool exceedance_monotone(const RateReport& r) {
  for (const auto& rec : r.per_n) {
    if (rec.leg != r.headline_leg) continue;
    for (std::size_t k = 1; k < rec.exceedance.size(); ++k) {
      if (rec.exceedance[k].first <= rec.exceedance[k - 1].first) return false;
      if (rec.exceedance[k].second > rec.exceedance[k - 1].second) return false;
    }
  }
  return true;
}

std::string timing(double secs) {
  return "runtime " + num(secs / 60.0, 3) + " min on " + std::to_string(omp_get_max_threads()) +
         " workers (budget " + num(sweep_budget() / 60.0, 3) + " min)";
}

std::vector<Line> coupling_and_headline(bool want6, bool want7) {
  const ChaosExperiment exp = newtonian_sweep();
  auto start = Clock::now();
  const RateReport r = run_chaos(exp);
  const double secs = seconds_since(start);
  std::vector<Line> out;
  if (want6) {
    const DecayCheck dc = decay(r, legs::kCoupledSup);
    const double jf = j_exceed_fraction(r);
    Line l{6, dc.passed && jf <= tol::kJExceedFraction && secs < sweep_budget(), {}};
    l.summary = dc.summary + ", J>=1 fraction at N_max " + num(jf) + " (limit " + num(tol::kJExceedFraction) +
                "), " + timing(secs);
    out.push_back(l);
  }
  if (want7) {
    const RateFit& f = r.fit;
    const bool slope_ok = !f.degenerate && f.slope <= tol::kDecaySlope && f.ci_high < 0.0;
    const bool mono = exceedance_monotone(r);

    ChaosExperiment fine = exp;
    fine.refinement = 2;
    start = Clock::now();
    const RateReport rf = run_chaos(fine);
    const double fine_secs = seconds_since(start);
    const std::vector<double> coarse_m = medians(r, r.headline_leg), fine_m = medians(rf, rf.headline_leg);
    double worst = coarse_m.size() == fine_m.size() ? 0.0 : INFINITY;
    for (std::size_t i = 0; i < std::min(coarse_m.size(), fine_m.size()); ++i) {
      worst = std::max(worst, std::abs(fine_m[i] - coarse_m[i]) / coarse_m[i]);
    }
    Line l{7, slope_ok && mono && worst < tol::kDtHalvingRel && secs + fine_secs < 2.0 * sweep_budget(), {}};
    l.summary = r.headline_leg + " slope " + num(f.slope) + " CI [" + num(f.ci_low) + ", " + num(f.ci_high) +
                "] (limit " + num(tol::kDecaySlope) + ", CI below 0), exceedance " +
                (mono ? "monotone" : "NOT monotone") + " in c, dt-halving median change " + num(worst) +
                " (limit " + num(tol::kDtHalvingRel) + "), refined " + timing(fine_secs);
    out.push_back(l);
  }
  return out;
}

Line power_variant() {
  const auto start = Clock::now();
  const RateReport r = run_chaos(power_sweep());
  const double secs = seconds_since(start);
  const DecayCheck dc = decay(r, legs::kCoupledSup);
  const DecayCheck hd = decay(r, r.headline_leg);
  const bool headline_ok = !r.fit.degenerate && r.fit.slope <= tol::kDecaySlope;
  Line l{8, dc.passed && hd.passed && headline_ok && secs < sweep_budget(), {}};
  l.summary = dc.summary + "; " + hd.summary + ", " + timing(secs);
  return l;
}

// ------------------------------------------------------------------ 9

Line gronwall() {
  const auto start = Clock::now();
  GronwallSuiteOptions o;
  o.trials = 100;
  const CheckReport r = run_gronwall_suite(o);
  const double secs = seconds_since(start);
  std::size_t failed = 0;
  for (const auto& c : r.checks) failed += c.passed ? 0 : 1;
  Line l{9, failed == 0 && secs < tol::kGronwallSeconds, {}};
  l.summary = std::to_string(r.checks.size() - failed) + "/" + std::to_string(r.checks.size()) +
              " Gronwall checks, runtime " + num(secs, 3) + " s (limit " + num(tol::kGronwallSeconds) + " s)";
  return l;
}

// ----------------------------------------------------------------- 10

struct GateCase {
  std::string inequality;
  std::string config;
  std::string field;  // must appear in the rejection message
};

Line config_gate() {
  const std::string newton_base =
      R"("sim":{"sigma":0.25},"experiment":{"N_grid":[64],"p":1,"q":4,"epsilon":1,"gamma":0.2})";
  auto newton = [](const std::string& kernel, const std::string& rest) {
    return R"({"kernel":)" + kernel + "," + rest + "}";
  };
  const std::string nk = R"({"family":"newtonian_cutoff","d":2,"delta":0.3})";
  auto exp_with = [](const std::string& fields) {
    return R"("sim":{"sigma":0.25},"experiment":{"N_grid":[64],)" + fields + "}";
  };
  const std::string pk = R"({"family":"power_cutoff","d":3,"alpha":0.5,"delta":0.25})";
  auto power_exp = [](const std::string& fields) {
    return R"("sim":{"sigma":0.25},"experiment":{"N_grid":[64],"ell":4,)" + fields + "}";
  };

  const std::vector<GateCase> accepted{
      {"admissible Newtonian", newton(nk, newton_base), ""},
      {"admissible power", newton(pk, power_exp(R"("p":1,"q":4,"epsilon":1,"gamma":0.25)")), ""},
  };
  const std::vector<GateCase> rejected{
      {"d > 1", newton(R"({"d":1,"delta":0.3})", newton_base), "kernel.d"},
      {"delta > 0", newton(R"({"d":2,"delta":0})", newton_base), "kernel.delta"},
      {"delta < 1/d", newton(R"({"d":2,"delta":0.6})", newton_base), "kernel.delta"},
      {"q >= 2", newton(nk, exp_with(R"("p":1,"q":1.5,"epsilon":0.1,"gamma":0.2)")), "experiment.q"},
      {"p >= 1", newton(nk, exp_with(R"("p":0.5,"q":4,"epsilon":1,"gamma":0.2)")), "experiment.p"},
      {"p < 2q", newton(nk, exp_with(R"("p":8,"q":4,"epsilon":1,"gamma":0.05)")), "experiment.p"},
      {"gamma > 0", newton(nk, exp_with(R"("p":1,"q":4,"epsilon":1,"gamma":0)")), "experiment.gamma"},
      {"gamma < 1/(2 max(d,p))", newton(R"({"d":2,"delta":0.45})", exp_with(R"("p":1,"q":4,"epsilon":1,"gamma":0.26)")),
       "experiment.gamma"},
      {"gamma < delta", newton(R"({"d":2,"delta":0.1})", exp_with(R"("p":1,"q":4,"epsilon":1,"gamma":0.15)")),
       "experiment.gamma"},
      {"epsilon > 0", newton(nk, exp_with(R"("p":1,"q":4,"epsilon":0,"gamma":0.2)")), "experiment.epsilon"},
      {"epsilon < q - p/(1 - p gamma)", newton(nk, exp_with(R"("p":1,"q":4,"epsilon":2.8,"gamma":0.2)")),
       "experiment.epsilon"},
      {"sigma > 0", newton(nk, R"("sim":{"sigma":0},"experiment":{"N_grid":[64]})"), "sim.sigma"},
      {"finite q-th moment of f0",
       newton(nk, R"("sim":{"sigma":0.25},"init":{"kind":"poly_decay","gamma_v":5},"experiment":{"N_grid":[64]})"),
       "init"},
      {"alpha >= 0", newton(R"({"family":"power_cutoff","d":3,"alpha":-0.5,"delta":0.25})",
                            power_exp(R"("epsilon":1,"gamma":0.25)")),
       "kernel.alpha"},
      {"alpha < d/ell' - 1 (ell = 4)", newton(R"({"family":"power_cutoff","d":3,"alpha":1.3,"delta":0.25})",
                                              power_exp(R"("epsilon":1,"gamma":0.25)")),
       "kernel.alpha"},
      {"alpha < d/ell' - 1 (ell' = 1)",
       newton(R"({"family":"power_cutoff","d":3,"alpha":2.5,"delta":0.25})",
              R"("sim":{"sigma":0.25},"experiment":{"N_grid":[64],"ell":"inf","gamma":0.25})"),
       "kernel.alpha"},
      {"ell >= 1", newton(pk, R"("sim":{"sigma":0.25},"experiment":{"N_grid":[64],"ell":0.5,"gamma":0.25})"),
       "experiment.ell"},
      {"delta in one of the admissible ranges", newton(R"({"family":"power_cutoff","d":3,"alpha":0.5,"delta":0.7})",
                                                       power_exp(R"("epsilon":0.1,"gamma":0.25)")),
       "kernel.delta"},
      {"epsilon < q - p/(1 - p delta)", newton(pk, power_exp(R"("p":1,"q":4,"epsilon":2.7,"gamma":0.25)")),
       "experiment.epsilon"},
      {"0 < gamma <= delta", newton(pk, power_exp(R"("epsilon":1,"gamma":0.3)")), "experiment.gamma"},
  };

  std::vector<std::string> problems;
  for (const auto& c : accepted) {
    try {
      parse_config(c.config);
    } catch (const std::exception& e) {
      problems.push_back(c.inequality + " wrongly rejected: " + e.what());
    }
  }
  for (const auto& c : rejected) {
    try {
      parse_config(c.config);
      problems.push_back(c.inequality + " not enforced");
    } catch (const ConfigError& e) {
      if (std::string(e.what()).find(c.field) == std::string::npos) {
        problems.push_back(c.inequality + " rejected without naming " + c.field);
      }
    }
  }
  Line l{10, problems.empty(), {}};
  l.summary = std::to_string(rejected.size()) + " targeted rejections, " + std::to_string(accepted.size()) +
              " admissible configurations";
  for (const auto& p : problems) l.summary += "; " + p;
  return l;
}

void print(const Line& l) {
  std::printf("criterion %2d: %s  %s\n", l.id, l.passed ? "PASS" : "FAIL", l.summary.c_str());
  std::fflush(stdout);
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<int> ids;
  for (int i = 1; i < argc; ++i) ids.push_back(std::atoi(argv[i]));
  if (ids.empty()) ids = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  auto wanted = [&](int id) { return std::find(ids.begin(), ids.end(), id) != ids.end(); };

  const std::map<int, std::function<Line()>> single{
      {1, kernels}, {2, integrator},    {3, transport}, {4, sampling_rates}, {5, law_of_large_numbers},
      {8, power_variant}, {9, gronwall}, {10, config_gate}};

  bool all = true;
  auto run_guarded = [&](int id, const std::function<std::vector<Line>()>& fn) {
    try {
      for (const Line& l : fn()) {
        print(l);
        all = all && l.passed;
      }
    } catch (const std::exception& e) {
      print(Line{id, false, std::string("error: ") + e.what()});
      all = false;
    }
  };
  for (int id : ids) {
    if (id == 7 && wanted(6)) continue;
    if (id == 6 || id == 7) {
      run_guarded(id, [&] { return coupling_and_headline(wanted(6), wanted(7)); });
    } else if (auto it = single.find(id); it != single.end()) {
      run_guarded(id, [&] { return std::vector<Line>{it->second()}; });
    } else {
      print(Line{id, false, "unknown criterion"});
      all = false;
    }
  }
  return all ? 0 : 1;
}
