#include "commands.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <omp.h>

#include "chaoskit/config.hpp"
#include "chaoskit/error.hpp"
#include "chaoskit/format.hpp"
#include "chaoskit/gronwall.hpp"
#include "chaoskit/measures.hpp"
#include "chaoskit/snapshot.hpp"
#include "chaoskit/stats.hpp"
#include "chaoskit/transport.hpp"
#include "chaoskit/validators.hpp"

namespace chaoskit::cli {

namespace fs = std::filesystem;
using nlohmann::json;

bool is_command(const std::string& name) {
  return std::any_of(std::begin(kCommands), std::end(kCommands), [&](const char* c) { return name == c; });
}

namespace {

// Single writer for every payload of one command run.
class OutputSink {
 public:
  OutputSink(const RunConfig& cfg, const std::string& command) : cfg_(cfg) {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    std::ostringstream stamp;
    stamp << std::put_time(&tm, "%Y%m%dT%H%M%SZ");
    const fs::path base = fs::path(cfg.output.dir) / command;
    fs::path dir = base / stamp.str();
    for (int k = 1; fs::exists(dir); ++k) dir = base / (stamp.str() + "-" + std::to_string(k));
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create '" + dir.string() + "': " + ec.message());
    dir_ = dir;
  }

  const fs::path& dir() const { return dir_; }
  bool csv() const { return cfg_.output.csv; }
  bool json_enabled() const { return cfg_.output.json; }

  void text(const std::string& name, const std::string& body) {
    std::ofstream out(dir_ / name, std::ios::binary);
    out << body;
    if (!out) throw IoError("cannot write '" + (dir_ / name).string() + "'");
  }
  void json_file(const std::string& name, const json& j) {
    if (cfg_.output.json) text(name, j.dump(2) + "\n");
  }
  template <typename Fn>
  void csv_file(const std::string& name, Fn&& fill) {
    if (!cfg_.output.csv) return;
    std::ostringstream s;
    fill(s);
    text(name, s.str());
  }
  void snapshot(const std::string& stem, const Ensemble& ens) {
    if (cfg_.output.csv) save_snapshot((dir_ / (stem + ".csv")).string(), ens, false);
    if (cfg_.output.binary) save_snapshot((dir_ / (stem + ".bin")).string(), ens, true);
  }

 private:
  const RunConfig& cfg_;
  fs::path dir_;
};

std::vector<double> snapshot_times(const ChaosExperiment& exp) {
  std::vector<double> t = exp.observation_times;
  t.push_back(exp.sim.T);
  std::sort(t.begin(), t.end());
  t.erase(std::unique(t.begin(), t.end()), t.end());
  return t;
}

SimParams sim_for(const ChaosExperiment& exp, std::size_t n) {
  SimParams sim = exp.sim;
  sim.threads = exp.threads;
  sim.dt = exp.base_time_step(n) / exp.refinement;
  sim.noise_substeps = exp.sim.noise_substeps / exp.refinement;
  return sim;
}

void print_checks(std::ostream& log, const CheckReport& report) {
  log << report.title << "\n";
  for (const auto& c : report.checks) {
    log << (c.passed ? "  PASS  " : "  FAIL  ") << std::left << std::setw(48) << c.name << " measured "
        << std::setw(12) << fmt_double(c.measured) << " bound " << fmt_double(c.bound) << "\n";
  }
  log << (report.passed() ? "all checks passed" : "some checks FAILED") << "\n";
}

int finish_checks(OutputSink& sink, std::ostream& log, const CheckReport& report) {
  sink.json_file("checks.json", to_json(report));
  sink.csv_file("checks.csv", [&](std::ostream& o) { write_checks_csv(o, report); });
  print_checks(log, report);
  return report.passed() ? kOk : kValidationFailed;
}

void write_rate(OutputSink& sink, const RateReport& report) {
  sink.json_file("rate_report.json", to_json(report));
  sink.csv_file("rate.csv", [&](std::ostream& o) { write_rate_csv(o, report); });
}

void print_fit(std::ostream& log, const std::string& what, const RateFit& fit) {
  log << what << ": ";
  if (fit.degenerate) {
    log << "degenerate fit (" << fit.note << ")\n";
  } else {
    log << "slope " << fmt_double(fit.slope) << " [" << fmt_double(fit.ci_low) << ", " << fmt_double(fit.ci_high)
        << "] over " << fit.grid_points << " N values\n";
  }
}

// ------------------------------------------------------------ commands

int cmd_simulate(const RunConfig& cfg, OutputSink& sink, std::ostream& log) {
  const ChaosExperiment& exp = cfg.experiment;
  const std::size_t n = exp.n_max();
  KernelSpec kernel = exp.kernel;
  kernel.big_n = static_cast<double>(n);
  const SimParams sim = sim_for(exp, n);
  const StreamKey noise{sim.seed, StreamRole::Shared, 0};
  Ensemble ens = sample_initial(exp.init, n, kernel.d, StreamKey{sim.seed, StreamRole::Init, 0});
  std::vector<MonitorRow> monitors = monitor_ensemble(ens);
  sink.snapshot("snapshot_000", ens);
  const auto times = snapshot_times(exp);
  std::size_t next = 0, index = 1;
  const std::size_t steps = sim.num_steps();
  json snaps = json::array({0.0});
  for (std::size_t k = 0; k < steps; ++k) {
    Ensemble nxt = step_interacting(ens, kernel, sim, noise, static_cast<std::uint32_t>(k), sim.step_size(k));
    nxt.t = k + 1 == steps ? sim.T : static_cast<double>(k + 1) * sim.dt;
    ens = std::move(nxt);
    bool due = false;
    while (next < times.size() && ens.t >= times[next] - 1e-12 * sim.T) {
      due = true;
      ++next;
    }
    if (!due) continue;
    std::ostringstream stem;
    stem << "snapshot_" << std::setw(3) << std::setfill('0') << index++;
    sink.snapshot(stem.str(), ens);
    snaps.push_back(ens.t);
    for (auto& row : monitor_ensemble(ens)) monitors.push_back(row);
  }
  sink.csv_file("monitor.csv", [&](std::ostream& o) { write_monitor_csv(o, monitors); });
  sink.json_file("run.json", {{"config", cfg.echo}, {"N", n}, {"dt", sim.dt}, {"steps", steps}, {"snapshot_times", snaps}});
  log << "simulated N=" << n << " for " << steps << " steps (dt=" << fmt_double(sim.dt) << ")\n";
  return kOk;
}

int cmd_couple(const RunConfig& cfg, OutputSink& sink, std::ostream& log) {
  const ChaosExperiment& exp = cfg.experiment;
  CoupledConfig cc;
  cc.n = exp.n_max();
  cc.kernel = exp.kernel;
  cc.kernel.big_n = static_cast<double>(cc.n);
  cc.sim = sim_for(exp, cc.n);
  cc.init = exp.init;
  cc.pilot_size = exp.pilot_size();
  cc.observation_times = exp.observation_times;
  const auto runs = run_coupled(cc);
  std::vector<DistanceRow> rows;
  for (std::size_t k = 0; k < runs.size(); ++k) {
    const CoupledRun& run = runs[k];
    const double t = run.interacting.t;
    rows.push_back({0, t, "interacting-reference", coupled_sup(run, exp.weighted(), cc.kernel.big_n)});
    DistanceResult j;
    j.method = DistanceMethod::CoupledSup;
    j.value = j_functional(run, cc.kernel.delta, cc.kernel.big_n, exp.weighted());
    rows.push_back({0, t, "j_functional", j});
    const EmpiricalMeasure pilot = phase_space(run.pilot);
    rows.push_back({0, t, "interacting-pilot", wp_exact(phase_space(run.interacting), pilot.slice(0, cc.n), exp.p)});
    rows.push_back({0, t, "reference-pilot", wp_exact(phase_space(run.reference), pilot.slice(cc.n, cc.n), exp.p)});
    std::ostringstream stem;
    stem << std::setw(3) << std::setfill('0') << k;
    sink.snapshot("interacting_" + stem.str(), run.interacting);
    sink.snapshot("reference_" + stem.str(), run.reference);
  }
  sink.csv_file("distances.csv", [&](std::ostream& o) { write_distance_csv(o, rows); });
  json j = json::array();
  for (const auto& r : rows) j.push_back({{"t", r.t}, {"pair", r.pair}, {"method", std::string(to_string(r.result.method))}, {"value", r.result.value}});
  sink.json_file("distances.json", {{"config", cfg.echo}, {"N", cc.n}, {"pilot_size", cc.pilot_size}, {"dt", cc.sim.dt}, {"rows", j}});
  log << "coupled run N=" << cc.n << ", final coupled sup " << fmt_double(rows[rows.size() - 4].result.value) << "\n";
  return kOk;
}

int cmd_chaos(const RunConfig& cfg, OutputSink& sink, std::ostream& log) {
  const RateReport report = run_chaos(cfg.experiment);
  write_rate(sink, report);
  print_fit(log, "headline " + report.headline_leg, report.fit);
  for (const auto& [leg, fit] : report.leg_fits) print_fit(log, "leg " + leg, fit);
  for (const auto& w : report.warnings) log << "warning: " << w << "\n";
  if (report.failed_fraction() > 0.1) return kBlowUp;
  return kOk;
}

int cmd_validate_fg(const RunConfig& cfg, OutputSink& sink, std::ostream& log) {
  SamplingRateOptions o = cfg.validation.fg;
  o.threads = cfg.experiment.threads;
  const RateReport report = validate_fg(o);
  write_rate(sink, report);
  const double expected = report.metadata["expected_slope"].get<double>();
  CheckReport checks;
  checks.title = "sampling-rate check";
  const double tol = cfg.validation.tolerances.fg_slope;
  checks.add("median slope near " + fmt_double(expected), !report.fit.degenerate && std::abs(report.fit.slope - expected) <= tol,
             report.fit.slope, tol, "|slope - expected| <= bound");
  return finish_checks(sink, log, checks);
}

int cmd_validate_lln(const RunConfig& cfg, OutputSink& sink, std::ostream& log) {
  LlnOptions o = cfg.validation.lln;
  o.threads = cfg.experiment.threads;
  const RateReport report = validate_lln(o);
  write_rate(sink, report);
  const double gm = report.metadata["gamma_m"].get<double>();
  const double bound = -gm + cfg.validation.tolerances.lln_margin;
  CheckReport checks;
  checks.title = "law of large numbers check";
  checks.add("mean slope of sup deviation", !report.fit.degenerate && report.fit.slope <= bound, report.fit.slope, bound,
             "slope <= -gamma_m + margin");
  return finish_checks(sink, log, checks);
}

int cmd_validate_loglip(const RunConfig& cfg, OutputSink& sink, std::ostream& log) {
  const LoglipReport report = validate_loglip(cfg.validation.loglip);
  sink.csv_file("loglip.csv", [&](std::ostream& o) {
    o << "scale,N,lhs,moment,log_factor,sup_norms,ratio\n";
    for (const auto& r : report.rows) {
      o << fmt_double(r.scale) << ',' << fmt_double(r.big_n) << ',' << fmt_double(r.lhs) << ',' << fmt_double(r.moment)
        << ',' << fmt_double(r.log_factor) << ',' << fmt_double(r.sup_norms) << ',' << fmt_double(r.ratio) << '\n';
    }
  });
  return finish_checks(sink, log, report.checks);
}

std::optional<fs::path> latest_report(const fs::path& root) {
  const fs::path base = root / "chaos";
  if (!fs::exists(base)) return std::nullopt;
  std::vector<fs::path> dirs;
  for (const auto& e : fs::directory_iterator(base)) {
    if (fs::exists(e.path() / "rate_report.json")) dirs.push_back(e.path());
  }
  if (dirs.empty()) return std::nullopt;
  std::sort(dirs.begin(), dirs.end());
  return dirs.back() / "rate_report.json";
}

std::string render_markdown(const json& r) {
  std::ostringstream md;
  auto num = [](const json& v) { return v.is_number() ? fmt_double(v.get<double>()) : std::string("n/a"); };
  md << "# Propagation-of-chaos rate report\n\n";
  const json& cfg = r.at("config");
  if (cfg.contains("kernel")) {
    md << "Kernel `" << cfg["kernel"].value("family", "?") << "`, d = " << cfg["kernel"].value("d", 0)
       << ", delta = " << num(cfg["kernel"]["delta"]) << ".\n\n";
  }
  md << "Headline leg `" << r.value("headline_leg", "") << "`: ";
  const json& fit = r.at("fit");
  if (fit.value("degenerate", false)) {
    md << "degenerate fit (" << fit.value("note", "") << ").\n\n";
  } else {
    md << "slope " << num(fit["slope"]) << ", 95% interval [" << num(fit["ci_low"]) << ", " << num(fit["ci_high"]) << "].\n\n";
  }
  md << "## Leg fits\n\n| leg | slope | ci low | ci high | N values |\n|---|---|---|---|---|\n";
  for (const auto& [leg, f] : r.at("leg_fits").items()) {
    md << "| " << leg << " | " << num(f["slope"]) << " | " << num(f["ci_low"]) << " | " << num(f["ci_high"]) << " | "
       << f.value("grid_points", 0) << " |\n";
  }
  md << "\n## Medians per N\n\n| N | t | leg | replicas | median |\n|---|---|---|---|---|\n";
  for (const auto& e : r.at("per_N")) {
    const auto vals = e.at("values").get<std::vector<double>>();
    md << "| " << e.value("N", 0) << " | " << num(e["t"]) << " | " << e.value("leg", "") << " | " << vals.size() << " | "
       << (vals.empty() ? std::string("n/a") : fmt_double(median(vals))) << " |\n";
  }
  if (r.contains("warnings") && !r["warnings"].empty()) {
    md << "\n## Warnings\n\n";
    for (const auto& w : r["warnings"]) md << "- " << w.get<std::string>() << "\n";
  }
  return md.str();
}

int cmd_report(const RunConfig& cfg, const Invocation& inv, OutputSink& sink, std::ostream& log) {
  std::optional<fs::path> src;
  if (inv.input) {
    fs::path p(*inv.input);
    src = fs::is_directory(p) ? p / "rate_report.json" : p;
  } else {
    src = latest_report(cfg.output.dir);
  }
  if (!src || !fs::exists(*src)) throw IoError("no rate_report.json found; run `chaos` first or pass --input");
  std::ifstream in(*src);
  json r;
  try {
    r = json::parse(in);
  } catch (const json::exception& e) {
    throw IoError("cannot parse '" + src->string() + "': " + e.what());
  }
  const std::string md = render_markdown(r);
  sink.text("report.md", md);
  log << md;
  return kOk;
}

int run_command(const Invocation& inv, const RunConfig& cfg, std::ostream& log) {
  OutputSink sink(cfg, inv.command);
  log << "output: " << sink.dir().string() << "\n";
  const std::string& c = inv.command;
  if (c == "simulate") return cmd_simulate(cfg, sink, log);
  if (c == "couple") return cmd_couple(cfg, sink, log);
  if (c == "chaos") return cmd_chaos(cfg, sink, log);
  if (c == "validate-kernels") return finish_checks(sink, log, certify_kernels(cfg.validation.kernels));
  if (c == "validate-ot") return finish_checks(sink, log, certify_transport(cfg.validation.transport));
  if (c == "validate-fg") return cmd_validate_fg(cfg, sink, log);
  if (c == "validate-lln") return cmd_validate_lln(cfg, sink, log);
  if (c == "validate-loglip") return cmd_validate_loglip(cfg, sink, log);
  if (c == "gronwall-check") return finish_checks(sink, log, run_gronwall_suite(cfg.validation.gronwall));
  if (c == "report") return cmd_report(cfg, inv, sink, log);
  throw ConfigError("unknown command '" + c + "'");
}

void apply_seed(RunConfig& cfg, std::uint64_t seed) {
  cfg.experiment.sim.seed = seed;
  cfg.validation.kernels.seed = seed;
  cfg.validation.transport.seed = seed;
  cfg.validation.fg.seed = seed;
  cfg.validation.lln.seed = seed;
  cfg.validation.loglip.seed = seed;
  cfg.validation.gronwall.seed = seed;
  cfg.echo["sim"]["seed"] = seed;
}

}  // namespace

int dispatch(const Invocation& inv, std::ostream& log, std::ostream& err) {
  if (!is_command(inv.command)) {
    err << "unknown command '" << inv.command << "'\n";
    return kConfigOrIo;
  }
  try {
    RunConfig cfg;
    if (!inv.config_path.empty()) {
      cfg = load_config(inv.config_path);
    } else if (!(inv.command == "report" && inv.input)) {
      throw ConfigError("--config is required");
    }
    if (inv.seed) apply_seed(cfg, *inv.seed);
    if (inv.out_dir) cfg.output.dir = *inv.out_dir;
    const int threads = resolve_threads(cfg, std::getenv("CHAOSKIT_THREADS"));
    cfg.experiment.threads = threads;
    cfg.experiment.sim.threads = threads;
    if (threads > 0) omp_set_num_threads(threads);
    return run_command(inv, cfg, log);
  } catch (const BlowUpError& e) {
    err << "numerical blow-up: " << e.what() << "\n";
    return kBlowUp;
  } catch (const ConfigError& e) {
    err << e.what() << "\n";
    return kConfigOrIo;
  } catch (const IoError& e) {
    err << "io error: " << e.what() << "\n";
    return kConfigOrIo;
  } catch (const std::invalid_argument& e) {
    err << "invalid input: " << e.what() << "\n";
    return kConfigOrIo;
  } catch (const std::domain_error& e) {
    err << "invalid input: " << e.what() << "\n";
    return kConfigOrIo;
  }
}

}  // namespace chaoskit::cli
