#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "chaoskit/experiments.hpp"
#include "chaoskit/gronwall.hpp"
#include "chaoskit/validators.hpp"

namespace chaoskit {

struct OutputConfig {
  std::string dir = "out";
  bool csv = true;
  bool json = true;
  bool binary = false;
};

/// Acceptance thresholds of the validate-* commands.
struct ValidationTolerances {
  double fg_slope = 0.1;     // |slope - expected| for validate-fg
  double lln_margin = 0.3;   // slope <= -gamma_m + margin for validate-lln
};

struct ValidationConfig {
  KernelCertificateOptions kernels = KernelCertificateOptions::defaults();
  TransportCertificateOptions transport;
  SamplingRateOptions fg;
  LlnOptions lln;
  LoglipOptions loglip;
  GronwallSuiteOptions gronwall;
  ValidationTolerances tolerances;
};

/// Everything a command needs, validated at load time.
struct RunConfig {
  /// Model, simulation and sweep parameters; experiment.kernel,
  /// experiment.sim and experiment.init are the `kernel`, `sim` and `init`
  /// sections.
  ChaosExperiment experiment;
  OutputConfig output;
  ValidationConfig validation;
  /// Worker count; 0 means CHAOSKIT_THREADS or the OpenMP default.
  int threads = 0;
  bool threads_set = false;
  /// Canonical echo of the parsed configuration.
  nlohmann::json echo;
};

/// Parses JSON text. Syntax errors throw ConfigError "parse error at line L,
/// column C: ..."; unknown keys and bad values throw ConfigError naming the
/// field path; hypothesis violations are collected and reported together.
RunConfig parse_config(const std::string& text);
/// Reads and parses a file; unreadable files throw IoError.
RunConfig load_config(const std::string& path);

/// Document of every field: type, default and meaning.
nlohmann::json config_schema();

/// Thread count: the config value when set, else CHAOSKIT_THREADS, else 0.
int resolve_threads(const RunConfig& config, const char* env_value);

}  // namespace chaoskit
