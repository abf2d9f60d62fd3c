#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "chaoskit/ensemble.hpp"
#include "chaoskit/kernels.hpp"
#include "chaoskit/rng.hpp"

namespace chaoskit {

enum class Scheme { EulerMaruyama };

struct SimParams {
  double sigma = 0.25;
  double dt = 1e-3;
  double T = 0.5;
  std::uint64_t seed = 1;
  Scheme scheme = Scheme::EulerMaruyama;
  /// Each step's Brownian increment is assembled from this many counter
  /// sub-increments. A run with (dt, 2) sees the same Brownian path as a run
  /// with (dt/2, 1), which makes dt-halving comparisons pathwise.
  int noise_substeps = 1;
  /// Worker threads; 0 picks the OpenMP default.
  int threads = 0;

  /// ceil(T / dt), ignoring round-off of at most 1e-12 relative.
  std::size_t num_steps() const;
  /// Length of step k; the last step is shortened to land on T.
  double step_size(std::size_t k) const;
  void validate() const;
};

/// Time step resolving the cut-off: min(cap, r_N / (4 v_ref)), then shrunk so
/// that T is an integer number of steps.
double default_time_step(const KernelSpec& spec, double v_ref, double T,
                         double cap = 1e-3);

enum class InitialKind { Gaussian, UniformBox, PolyDecay };

std::string_view to_string(InitialKind kind) noexcept;
InitialKind parse_initial_kind(std::string_view name);

/// Product law f0(x, v) = rho0(x) g0(v).
///
/// Gaussian: every coordinate independent normal (mean, scale).
/// UniformBox: x uniform on [-x_half_width, x_half_width]^d, v likewise.
/// PolyDecay: x uniform on the box, velocity density proportional to
///   <v>^-gamma_v with <v> = sqrt(1 + |v|^2); requires gamma_v > d.
struct InitialLaw {
  InitialKind kind = InitialKind::Gaussian;
  double x_mean = 0.0;
  double x_scale = 1.0;
  double v_mean = 0.0;
  double v_scale = 1.0;
  double x_half_width = 1.0;
  double v_half_width = 1.0;
  double gamma_v = 5.0;

  void validate(int d) const;
  /// sqrt(E|v|^2); infinite for PolyDecay with gamma_v <= d + 2.
  double rms_speed(int d) const;
  /// Orders q < this have finite moments.
  double moment_limit(int d) const;
};

/// Japanese bracket <v> = sqrt(1 + |v|^2).
double japanese_bracket(std::span<const double> v) noexcept;

/// N i.i.d. draws from `law`; particle i depends only on (stream, i).
Ensemble sample_initial(const InitialLaw& law, std::size_t n, int d, const StreamKey& stream);

/// One Euler-Maruyama step of the interacting system:
///   X <- X + V h,  V <- V + (1/N) sum_j F(X_i - X_j) h + sqrt(2 sigma h) G_i.
/// `step` keys the Gaussian increments. Cut-off kernels only.
Ensemble step_interacting(const Ensemble& ens, const KernelSpec& spec, const SimParams& params,
                          const StreamKey& stream, std::uint32_t step, double h);

/// Same scheme for independent mean-field copies whose drift is the force
/// convolved with the pilot's spatial empirical measure.
Ensemble step_reference(const Ensemble& ens, const Ensemble& pilot, const KernelSpec& spec,
                        const SimParams& params, const StreamKey& stream, std::uint32_t step,
                        double h);

/// (1/M) sum_j F(t_i - s_j) for every target row. Exposed for tests and
/// validators; the dynamics use it for both drifts.
std::vector<double> mean_field_drift(std::span<const double> targets, std::span<const double> sources,
                                     int d, const KernelSpec& spec, int threads = 0);

/// Stream layout of one coupled replica family.
struct CouplingKeys {
  StreamKey shared_noise;   // interacting particle i and reference copy i
  StreamKey initial;        // shared initial data
  StreamKey pilot_noise;
  StreamKey pilot_initial;

  static CouplingKeys for_replica(std::uint64_t seed, std::uint32_t replica,
                                  std::uint32_t pilot_id);
};

/// Snapshot of one coupled replica.
struct CoupledRun {
  Ensemble interacting;
  Ensemble reference;
  Ensemble pilot;
  StreamKey shared_noise;
};

/// Pilot cloud plus any number of coupled replicas, advanced in lockstep so
/// that every reference copy sees the pilot at its own time.
class CoupledEngine {
 public:
  struct Replica {
    CouplingKeys keys;
    Ensemble interacting;
    Ensemble reference;
    /// Set when this replica blew up; it is frozen from then on.
    bool failed = false;
    std::string failure;
  };

  CoupledEngine(const KernelSpec& spec, const SimParams& params, const InitialLaw& law,
                std::size_t n, std::size_t pilot_size, std::vector<CouplingKeys> replicas);

  /// Advance by one step. A replica that blows up is marked failed and
  /// skipped afterwards; a pilot blow-up throws BlowUpError.
  void advance();
  bool finished() const noexcept { return step_ >= params_.num_steps(); }

  double time() const noexcept { return pilot_.t; }
  std::size_t step_index() const noexcept { return step_; }
  const Ensemble& pilot() const noexcept { return pilot_; }
  const std::vector<Replica>& replicas() const noexcept { return replicas_; }
  const KernelSpec& kernel() const noexcept { return spec_; }

 private:
  KernelSpec spec_;
  SimParams params_;
  Ensemble pilot_;
  StreamKey pilot_noise_;
  std::vector<Replica> replicas_;
  std::size_t step_ = 0;
};

struct CoupledConfig {
  KernelSpec kernel;
  SimParams sim;
  InitialLaw init;
  std::size_t n = 64;
  std::size_t pilot_size = 512;
  std::uint32_t replica = 0;
  std::uint32_t pilot_id = 0;
  /// Snapshots are taken at the first step landing at or after each time.
  std::vector<double> observation_times;
  /// Overrides the key layout derived from (sim.seed, replica, pilot_id).
  std::optional<CouplingKeys> keys;
};

/// Evolves pilot, interacting and reference systems from 0 to T and returns
/// snapshots at the configured observation times (always including T).
std::vector<CoupledRun> run_coupled(const CoupledConfig& config);

}  // namespace chaoskit
