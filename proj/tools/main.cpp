#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "chaoskit/config.hpp"
#include "commands.hpp"

int main(int argc, char** argv) {
  using namespace chaoskit::cli;
  CLI::App app{"chaoskit: propagation-of-chaos experiments for kinetic particle systems"};
  app.set_help_flag("-h,--help", "Show usage");
  std::string command, config, out, input;
  std::uint64_t seed = 0;
  bool print_schema = false;
  std::string commands;
  for (const char* c : kCommands) commands += std::string(commands.empty() ? "" : ", ") + c;
  app.add_option("command", command, "One of: " + commands);
  app.add_option("--config", config, "JSON configuration file");
  auto* seed_opt = app.add_option("--seed", seed, "Override sim.seed");
  auto* out_opt = app.add_option("--out", out, "Override output.dir");
  auto* input_opt = app.add_option("--input", input, "report: rate_report.json or its directory");
  app.add_flag("--print-schema", print_schema, "Print every configuration field and exit");
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfigOrIo;
  }
  if (print_schema) {
    std::cout << chaoskit::config_schema().dump(2) << "\n";
    return kOk;
  }
  if (command.empty() || !is_command(command)) {
    if (!command.empty()) std::cerr << "unknown command '" << command << "'\n";
    std::cerr << app.help();
    return kConfigOrIo;
  }
  Invocation inv;
  inv.command = command;
  inv.config_path = config;
  if (*seed_opt) inv.seed = seed;
  if (*out_opt) inv.out_dir = out;
  if (*input_opt) inv.input = input;
  return dispatch(inv, std::cout, std::cerr);
}
