#include "chaoskit/dynamics.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

#include "chaoskit/error.hpp"

namespace chaoskit {

// ---------------------------------------------------------------- ensemble

bool Ensemble::all_finite() const noexcept {
  return std::all_of(x.begin(), x.end(), [](double c) { return std::isfinite(c); }) &&
         std::all_of(v.begin(), v.end(), [](double c) { return std::isfinite(c); });
}

void Ensemble::validate() const {
  if (d < 1) throw std::invalid_argument("ensemble dimension must be >= 1");
  if (x.size() != v.size()) throw std::invalid_argument("positions and velocities differ in length");
  if (x.empty() || x.size() % static_cast<std::size_t>(d) != 0) {
    throw std::invalid_argument("ensemble must hold N >= 1 particles");
  }
}

// --------------------------------------------------------------- parameters

std::size_t SimParams::num_steps() const {
  const double ratio = T / dt;
  return static_cast<std::size_t>(std::ceil(ratio * (1.0 - 1e-12)));
}

double SimParams::step_size(std::size_t k) const {
  const std::size_t n = num_steps();
  if (k + 1 < n) return dt;
  return T - static_cast<double>(n - 1) * dt;
}

void SimParams::validate() const {
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw ConfigError("sim.sigma must be >= 0");
  if (!(T > 0.0) || !std::isfinite(T)) throw ConfigError("sim.T must be > 0");
  if (!(dt > 0.0) || dt > T) throw ConfigError("sim.dt must lie in (0, T]");
  if (noise_substeps < 1) throw ConfigError("sim.noise_substeps must be >= 1");
  if (threads < 0) throw ConfigError("threads must be >= 0");
}

double default_time_step(const KernelSpec& spec, double v_ref, double T, double cap) {
  if (!(v_ref > 0.0) || !std::isfinite(v_ref)) {
    throw ConfigError("automatic dt needs a finite positive reference speed");
  }
  double raw = cap;
  if (spec.has_cutoff()) raw = std::min(cap, spec.cutoff_radius() / (4.0 * v_ref));
  const double steps = std::ceil(T / raw * (1.0 - 1e-12));
  return T / steps;
}

// ------------------------------------------------------------- initial law

std::string_view to_string(InitialKind kind) noexcept {
  switch (kind) {
    case InitialKind::Gaussian: return "gaussian";
    case InitialKind::UniformBox: return "uniform_box";
    case InitialKind::PolyDecay: return "poly_decay";
  }
  return "unknown";
}

InitialKind parse_initial_kind(std::string_view name) {
  if (name == "gaussian") return InitialKind::Gaussian;
  if (name == "uniform_box") return InitialKind::UniformBox;
  if (name == "poly_decay") return InitialKind::PolyDecay;
  throw ConfigError("unknown initial law '" + std::string(name) + "'");
}

void InitialLaw::validate(int d) const {
  switch (kind) {
    case InitialKind::Gaussian:
      if (!(x_scale > 0.0 && v_scale > 0.0)) throw ConfigError("init scales must be > 0");
      break;
    case InitialKind::UniformBox:
      if (!(x_half_width > 0.0 && v_half_width > 0.0)) {
        throw ConfigError("init half widths must be > 0");
      }
      break;
    case InitialKind::PolyDecay:
      if (!(x_half_width > 0.0)) throw ConfigError("init.x_half_width must be > 0");
      if (!(gamma_v > d)) throw ConfigError("non-integrable velocity law");
      break;
  }
}

double InitialLaw::rms_speed(int d) const {
  switch (kind) {
    case InitialKind::Gaussian: return std::sqrt(d * (v_mean * v_mean + v_scale * v_scale));
    case InitialKind::UniformBox: return std::sqrt(d * v_half_width * v_half_width / 3.0);
    case InitialKind::PolyDecay: {
      const double nu = gamma_v - d;
      if (nu <= 2.0) return std::numeric_limits<double>::infinity();
      return std::sqrt(d / (nu - 2.0));
    }
  }
  return 0.0;
}

double InitialLaw::moment_limit(int d) const {
  if (kind == InitialKind::PolyDecay) return gamma_v - d;
  return std::numeric_limits<double>::infinity();
}

double japanese_bracket(std::span<const double> v) noexcept {
  double s = 1.0;
  for (double c : v) s += c * c;
  return std::sqrt(s);
}

Ensemble sample_initial(const InitialLaw& law, std::size_t n, int d, const StreamKey& stream) {
  if (n < 1) throw std::invalid_argument("sample_initial needs N >= 1");
  if (d < 1) throw std::invalid_argument("sample_initial needs d >= 1");
  law.validate(d);
  Ensemble ens(d, n);
  const CounterRng rng(stream);
  const auto ud = static_cast<std::uint32_t>(d);
  for (std::size_t i = 0; i < n; ++i) {
    const auto p = static_cast<std::uint32_t>(i);
    auto x = ens.position(i);
    auto v = ens.velocity(i);
    switch (law.kind) {
      case InitialKind::Gaussian:
        for (std::uint32_t k = 0; k < ud; ++k) {
          x[k] = law.x_mean + law.x_scale * rng.gaussian(p, 0, k);
          v[k] = law.v_mean + law.v_scale * rng.gaussian(p, 0, ud + k);
        }
        break;
      case InitialKind::UniformBox:
        for (std::uint32_t k = 0; k < ud; ++k) {
          const auto [ux, uv] = rng.uniform_pair(p, 0, k);
          x[k] = law.x_half_width * (2.0 * ux - 1.0);
          v[k] = law.v_half_width * (2.0 * uv - 1.0);
        }
        break;
      case InitialKind::PolyDecay: {
        // <v>^-gamma is a multivariate t law: v = Z / sqrt(chi2_nu), nu = gamma - d.
        CounterEngine engine(stream, p, 1);
        std::chi_squared_distribution<double> chi2(law.gamma_v - d);
        const double scale = 1.0 / std::sqrt(chi2(engine));
        for (std::uint32_t k = 0; k < ud; ++k) {
          const auto [ux, unused] = rng.uniform_pair(p, 0, k);
          (void)unused;
          x[k] = law.x_half_width * (2.0 * ux - 1.0);
          v[k] = scale * rng.gaussian(p, 1, k);
        }
        break;
      }
    }
  }
  return ens;
}

// ------------------------------------------------------------------- drift

namespace {

int resolve_threads(int threads) { return threads > 0 ? threads : omp_get_max_threads(); }

struct SourceColumns {
  int d = 0;
  std::size_t m = 0;
  std::vector<double> coords;  // d columns of length m

  SourceColumns(std::span<const double> rows, int dim)
      : d(dim), m(rows.size() / static_cast<std::size_t>(dim)), coords(rows.size()) {
    for (std::size_t j = 0; j < m; ++j) {
      for (int k = 0; k < d; ++k) coords[k * m + j] = rows[j * d + k];
    }
  }
  const double* column(int k) const noexcept { return coords.data() + k * m; }
};

// Cut-off kernels only: the clamp keeps m > 0, so no branch is needed and the
// loop vectorizes. Each target sums its sources in a fixed order, which makes
// the result independent of the thread count.
template <int D, class Inv>
void drift_rows_fixed(std::span<const double> targets, const SourceColumns& src, double cut2,
                      double scale, Inv inv, std::span<double> out, int threads) {
  const std::size_t n = targets.size() / D;
  const std::size_t m = src.m;
  const double* s0 = src.column(0);
  const double* s1 = D > 1 ? src.column(1) : nullptr;
  const double* s2 = D > 2 ? src.column(2) : nullptr;
#pragma omp parallel for num_threads(threads) schedule(static)
  for (std::size_t i = 0; i < n; ++i) {
    const double t0 = targets[i * D];
    const double t1 = D > 1 ? targets[i * D + 1] : 0.0;
    const double t2 = D > 2 ? targets[i * D + 2] : 0.0;
    double a0 = 0.0, a1 = 0.0, a2 = 0.0;
#pragma omp simd reduction(+ : a0, a1, a2)
    for (std::size_t j = 0; j < m; ++j) {
      const double d0 = t0 - s0[j];
      double r2 = d0 * d0;
      double d1 = 0.0, d2 = 0.0;
      if constexpr (D > 1) {
        d1 = t1 - s1[j];
        r2 = r2 + d1 * d1;
      }
      if constexpr (D > 2) {
        d2 = t2 - s2[j];
        r2 = r2 + d2 * d2;
      }
      const double f = inv(r2 > cut2 ? r2 : cut2);
      a0 += d0 * f;
      if constexpr (D > 1) a1 += d1 * f;
      if constexpr (D > 2) a2 += d2 * f;
    }
    out[i * D] = a0 * scale;
    if constexpr (D > 1) out[i * D + 1] = a1 * scale;
    if constexpr (D > 2) out[i * D + 2] = a2 * scale;
  }
}

template <int D>
void drift_dispatch(std::span<const double> targets, const SourceColumns& src,
                    const RadialFactor& factor, double scale, std::span<double> out, int threads) {
  const double cut2 = factor.cutoff_squared();
  switch (factor.shape()) {
    case RadialFactor::Shape::Inv1:
      drift_rows_fixed<D>(targets, src, cut2, scale, [](double m) { return 1.0 / std::sqrt(m); },
                          out, threads);
      return;
    case RadialFactor::Shape::Inv1p5:
      drift_rows_fixed<D>(
          targets, src, cut2, scale,
          [](double m) {
            const double s = std::sqrt(m);
            return 1.0 / (s * std::sqrt(s));
          },
          out, threads);
      return;
    case RadialFactor::Shape::Inv2:
      drift_rows_fixed<D>(targets, src, cut2, scale, [](double m) { return 1.0 / m; }, out,
                          threads);
      return;
    case RadialFactor::Shape::Inv3:
      drift_rows_fixed<D>(targets, src, cut2, scale,
                          [](double m) { return 1.0 / (m * std::sqrt(m)); }, out, threads);
      return;
    case RadialFactor::Shape::Generic: {
      const double e = -0.5 * factor.exponent();
      drift_rows_fixed<D>(targets, src, cut2, scale, [e](double m) { return std::pow(m, e); },
                          out, threads);
      return;
    }
  }
}

// Any dimension, any family. Used for d > 3 and for exact kernels.
void drift_rows_generic(std::span<const double> targets, std::span<const double> sources, int d,
                        const RadialFactor& factor, double inv_m, std::span<double> out,
                        int threads) {
  const std::size_t n = targets.size() / d;
  const std::size_t m = sources.size() / d;
#pragma omp parallel for num_threads(threads) schedule(static)
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> acc(d, 0.0), diff(d);
    for (std::size_t j = 0; j < m; ++j) {
      double r2 = 0.0;
      for (int k = 0; k < d; ++k) {
        diff[k] = targets[i * d + k] - sources[j * d + k];
        r2 += diff[k] * diff[k];
      }
      const double f = factor(r2);
      for (int k = 0; k < d; ++k) acc[k] += diff[k] * f;
    }
    for (int k = 0; k < d; ++k) out[i * d + k] = acc[k] * inv_m;
  }
}

void require_pairwise_kernel(const KernelSpec& spec) {
  if (!spec.has_cutoff()) {
    throw std::invalid_argument("particle dynamics require a cut-off kernel");
  }
}

Ensemble euler_maruyama(const Ensemble& ens, std::span<const double> drift,
                        const SimParams& params, const StreamKey& stream, std::uint32_t step,
                        double h) {
  Ensemble out(ens.d, ens.size(), ens.t + h);
  const std::size_t n = ens.size();
  const int d = ens.d;
  const int substeps = params.noise_substeps;
  const double amp = std::sqrt(2.0 * params.sigma * h / substeps);
  const CounterRng rng(stream);
  const bool noisy = params.sigma > 0.0;
#pragma omp parallel for num_threads(resolve_threads(params.threads)) schedule(static)
  for (std::size_t i = 0; i < n; ++i) {
    const auto p = static_cast<std::uint32_t>(i);
    for (int k = 0; k < d; ++k) {
      const std::size_t c = i * d + k;
      double kick = 0.0;
      if (noisy) {
        for (int s = 0; s < substeps; ++s) {
          const auto fine = static_cast<std::uint32_t>(step * substeps + s);
          kick += rng.gaussian(p, fine, static_cast<std::uint32_t>(k));
        }
      }
      out.x[c] = ens.x[c] + ens.v[c] * h;
      out.v[c] = ens.v[c] + drift[c] * h + amp * kick;
    }
  }
  if (!out.all_finite()) {
    throw BlowUpError("numerical blow-up at step " + std::to_string(step));
  }
  return out;
}

}  // namespace

std::vector<double> mean_field_drift(std::span<const double> targets,
                                     std::span<const double> sources, int d,
                                     const KernelSpec& spec, int threads) {
  if (d < 1 || targets.size() % d != 0 || sources.size() % d != 0 || sources.empty()) {
    throw std::invalid_argument("mean_field_drift: malformed point sets");
  }
  std::vector<double> out(targets.size(), 0.0);
  const RadialFactor factor(spec);
  const double m = static_cast<double>(sources.size() / d);
  const int nt = resolve_threads(threads);
  if (spec.xi == 0.0) return out;
  if (!spec.has_cutoff() || d > 3) {
    drift_rows_generic(targets, sources, d, factor, 1.0 / m, out, nt);
    return out;
  }
  const SourceColumns src(sources, d);
  const double scale = spec.xi / m;
  switch (d) {
    case 1: drift_dispatch<1>(targets, src, factor, scale, out, nt); break;
    case 2: drift_dispatch<2>(targets, src, factor, scale, out, nt); break;
    case 3: drift_dispatch<3>(targets, src, factor, scale, out, nt); break;
  }
  return out;
}

Ensemble step_interacting(const Ensemble& ens, const KernelSpec& spec, const SimParams& params,
                          const StreamKey& stream, std::uint32_t step, double h) {
  require_pairwise_kernel(spec);
  ens.validate();
  const auto drift = mean_field_drift(ens.x, ens.x, ens.d, spec, params.threads);
  return euler_maruyama(ens, drift, params, stream, step, h);
}

Ensemble step_reference(const Ensemble& ens, const Ensemble& pilot, const KernelSpec& spec,
                        const SimParams& params, const StreamKey& stream, std::uint32_t step,
                        double h) {
  require_pairwise_kernel(spec);
  ens.validate();
  pilot.validate();
  if (pilot.d != ens.d) throw std::invalid_argument("pilot dimension mismatch");
  if (std::abs(pilot.t - ens.t) > 1e-12 * std::max(1.0, std::abs(ens.t))) {
    throw std::invalid_argument("pilot time differs from reference time");
  }
  const auto drift = mean_field_drift(ens.x, pilot.x, ens.d, spec, params.threads);
  return euler_maruyama(ens, drift, params, stream, step, h);
}

// ----------------------------------------------------------------- coupling

CouplingKeys CouplingKeys::for_replica(std::uint64_t seed, std::uint32_t replica,
                                       std::uint32_t pilot_id) {
  return {StreamKey{seed, StreamRole::Shared, replica}, StreamKey{seed, StreamRole::Init, replica},
          StreamKey{seed, StreamRole::Pilot, pilot_id},
          StreamKey{seed, StreamRole::PilotInit, pilot_id}};
}

CoupledEngine::CoupledEngine(const KernelSpec& spec, const SimParams& params,
                             const InitialLaw& law, std::size_t n, std::size_t pilot_size,
                             std::vector<CouplingKeys> replicas)
    : spec_(spec), params_(params) {
  spec_.validate();
  params_.validate();
  require_pairwise_kernel(spec_);
  if (replicas.empty()) throw std::invalid_argument("coupled engine needs at least one replica");
  if (pilot_size < 1) throw std::invalid_argument("pilot size must be >= 1");
  const CouplingKeys& first = replicas.front();
  pilot_noise_ = first.pilot_noise;
  pilot_ = sample_initial(law, pilot_size, spec_.d, first.pilot_initial);
  replicas_.reserve(replicas.size());
  for (const auto& keys : replicas) {
    if (!(keys.pilot_noise == pilot_noise_)) {
      throw std::invalid_argument("replicas of one engine must share the pilot stream");
    }
    Ensemble init = sample_initial(law, n, spec_.d, keys.initial);
    replicas_.push_back(Replica{keys, init, init, false, {}});
  }
}

void CoupledEngine::advance() {
  if (finished()) throw std::logic_error("coupled engine already reached T");
  const auto k = static_cast<std::uint32_t>(step_);
  const double h = params_.step_size(step_);
  const double t_next =
      (step_ + 1 == params_.num_steps()) ? params_.T : static_cast<double>(step_ + 1) * params_.dt;

  for (auto& rep : replicas_) {
    if (rep.failed) continue;
    try {
      Ensemble ref = step_reference(rep.reference, pilot_, spec_, params_, rep.keys.shared_noise, k, h);
      Ensemble inter = step_interacting(rep.interacting, spec_, params_, rep.keys.shared_noise, k, h);
      ref.t = t_next;
      inter.t = t_next;
      rep.reference = std::move(ref);
      rep.interacting = std::move(inter);
    } catch (const BlowUpError& e) {
      rep.failed = true;
      rep.failure = "replica " + std::to_string(rep.keys.shared_noise.replica) + ": " + e.what();
    }
  }
  try {
    Ensemble next = step_interacting(pilot_, spec_, params_, pilot_noise_, k, h);
    next.t = t_next;
    pilot_ = std::move(next);
  } catch (const BlowUpError& e) {
    throw BlowUpError(std::string("pilot: ") + e.what());
  }
  ++step_;
}

std::vector<CoupledRun> run_coupled(const CoupledConfig& config) {
  if (config.pilot_size < config.n) throw std::invalid_argument("pilot size M must be >= N");
  const CouplingKeys keys =
      config.keys.value_or(CouplingKeys::for_replica(config.sim.seed, config.replica, config.pilot_id));
  CoupledEngine engine(config.kernel, config.sim, config.init, config.n, config.pilot_size, {keys});

  std::vector<double> times = config.observation_times;
  times.push_back(config.sim.T);
  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end()), times.end());

  std::vector<CoupledRun> snapshots;
  std::size_t next = 0;
  auto capture = [&] {
    const auto& rep = engine.replicas().front();
    snapshots.push_back(CoupledRun{rep.interacting, rep.reference, engine.pilot(), keys.shared_noise});
  };
  const double eps = 1e-12 * config.sim.T;
  while (next < times.size() && times[next] <= eps) {
    capture();
    ++next;
  }
  while (!engine.finished()) {
    engine.advance();
    if (engine.replicas().front().failed) throw BlowUpError(engine.replicas().front().failure);
    bool taken = false;
    while (next < times.size() && engine.time() >= times[next] - eps) {
      if (!taken) capture();
      taken = true;
      ++next;
    }
  }
  return snapshots;
}

}  // namespace chaoskit
