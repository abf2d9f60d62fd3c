#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

namespace chaoskit::cli {

enum ExitCode : int { kOk = 0, kConfigOrIo = 1, kBlowUp = 2, kValidationFailed = 3 };

struct Invocation {
  std::string command;
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  /// `report` only: a rate_report.json or a directory holding one.
  std::optional<std::string> input;
};

inline constexpr const char* kCommands[] = {
    "simulate",     "couple",       "chaos",           "validate-kernels", "validate-ot",
    "validate-fg",  "validate-lln", "validate-loglip", "gronwall-check",   "report"};

bool is_command(const std::string& name);

/// Loads the config, runs the command and maps failures to exit codes.
/// Progress and tables go to `log`, errors to `err`.
int dispatch(const Invocation& inv, std::ostream& log, std::ostream& err);

}  // namespace chaoskit::cli
