#include "chaoskit/config.hpp"

#include <cmath>
#include <cstdlib>
#include <algorithm>
#include <fstream>
#include <functional>
#include <limits>
#include <set>
#include <sstream>

#include "chaoskit/error.hpp"

namespace chaoskit {

namespace {

using nlohmann::json;

struct Field {
  const char* section;
  const char* key;
  const char* type;
  json fallback;
  const char* meaning;
};

const std::vector<Field>& schema_fields() {
  static const std::vector<Field> fields = {
      {"kernel", "family", "string", "newtonian_cutoff",
       "newtonian_exact | newtonian_cutoff | power_exact | power_cutoff"},
      {"kernel", "d", "integer", 2, "spatial dimension"},
      {"kernel", "delta", "number", 0.3, "cut-off exponent: r_N = N^-delta"},
      {"kernel", "alpha", "number", 0.0, "singularity exponent of the power families"},
      {"kernel", "xi", "number", 1.0, "force sign: +1, -1, or 0 to switch forces off"},
      {"sim", "sigma", "number", 0.25, "velocity diffusion coefficient"},
      {"sim", "dt", "number | \"auto\"", "auto", "time step; auto resolves the cut-off radius"},
      {"sim", "dt_cap", "number | \"inf\"", 1e-3, "upper bound for the automatic step"},
      {"sim", "T", "number", 0.5, "final time"},
      {"sim", "seed", "integer", 1, "root seed of every random stream"},
      {"sim", "noise_substeps", "integer", 1, "Brownian sub-increments per step"},
      {"sim", "scheme", "string", "euler_maruyama", "time integrator"},
      {"init", "kind", "string", "gaussian", "gaussian | uniform_box | poly_decay"},
      {"init", "x_mean", "number", 0.0, "gaussian position mean"},
      {"init", "x_scale", "number", 1.0, "gaussian position standard deviation"},
      {"init", "v_mean", "number", 0.0, "gaussian velocity mean"},
      {"init", "v_scale", "number", 1.0, "gaussian velocity standard deviation"},
      {"init", "x_half_width", "number", 1.0, "box half width for positions"},
      {"init", "v_half_width", "number", 1.0, "box half width for velocities"},
      {"init", "gamma_v", "number", 5.0, "velocity tail exponent of poly_decay"},
      {"experiment", "N_grid", "array of integers", json::array({64, 128, 256}), "particle counts, increasing"},
      {"experiment", "replicas", "integer", 10, "independent replicas per N"},
      {"experiment", "observation_times", "array of numbers", json::array(), "times in (0, T]; T is always added"},
      {"experiment", "p", "number", 1.0, "Wasserstein order, p in [1, 2q)"},
      {"experiment", "q", "number", 4.0, "moment order of the initial law, q >= 2"},
      {"experiment", "epsilon", "number", 1.0, "moment slack, 0 < epsilon < q - p/(1 - p gamma)"},
      {"experiment", "gamma", "number", 0.2, "target rate; defaults to delta for power kernels"},
      {"experiment", "ell", "number | \"inf\"", "inf", "integrability exponent of the power-law hypotheses"},
      {"experiment", "pilot_factor", "integer", 8, "pilot size M = pilot_factor * max N"},
      {"experiment", "c_grid", "array of numbers", json::array(), "exceedance coefficients; default 2^(k/2), k = -8..8"},
      {"experiment", "cutoff_leg", "boolean", false, "measure the cut-off leg; default on for power kernels"},
      {"experiment", "proxy_delta_factor", "number", 2.0, "proxy cut-off exponent multiplier"},
      {"experiment", "refinement", "integer", 1, "divides dt and noise_substeps"},
      {"output", "dir", "string", "out", "root of output directories"},
      {"output", "csv", "boolean", true, "write CSV payloads"},
      {"output", "json", "boolean", true, "write JSON payloads"},
      {"output", "binary", "boolean", false, "write binary snapshots"},
      {"", "threads", "integer", 0, "worker threads; 0 uses CHAOSKIT_THREADS or all cores"},
      {"validation.kernels", "pairs", "integer", 100000, "random points per kernel and N"},
      {"validation.kernels", "N_values", "array of numbers", json::array({16, 256, 4096}), "cut-off scales; the constant is fitted at the first"},
      {"validation.kernels", "lipschitz_pairs", "integer", 1000000, "Monte Carlo pairs of the Lipschitz certificate"},
      {"validation.kernels", "calibration_pairs", "integer", 1000000, "independent pairs that fit the envelope constant"},
      {"validation.kernels", "lipschitz_limit", "number", 8.0, "largest admissible Lipschitz ratio"},
      {"validation.kernels", "margin", "number", 1.1, "fitted constant = margin * calibration maximum"},
      {"validation.ot", "instances", "integer", 200, "brute-force instances"},
      {"validation.ot", "max_size", "integer", 7, "largest brute-force size"},
      {"validation.ot", "metric_trials", "integer", 100, "random triples for the metric axioms"},
      {"validation.fg", "d", "integer", 1, "dimension of the law (init section)"},
      {"validation.fg", "phase_space", "boolean", false, "sample (x, v) in R^{2d} instead of x"},
      {"validation.fg", "N_grid", "array of integers", json::array({64, 128, 256, 512, 1024, 2048, 4096, 8192}), "sample sizes"},
      {"validation.fg", "p", "number", 1.0, "Wasserstein order"},
      {"validation.fg", "replicas", "integer", 50, "samples per N"},
      {"validation.fg", "reference_size", "integer", 100000, "reference sample size"},
      {"validation.lln", "kappa", "number", 1.0, "decay exponent of h"},
      {"validation.lln", "delta", "number", 0.25, "cap exponent of h"},
      {"validation.lln", "c0", "number", 1.0, "amplitude of h"},
      {"validation.lln", "m", "integer", 2, "moment exponent"},
      {"validation.lln", "N_grid", "array of integers", json::array({64, 128, 256, 512, 1024, 2048, 4096}), "sample sizes"},
      {"validation.lln", "replicas", "integer", 50, "samples per N"},
      {"validation.lln", "quadrature_nodes", "integer", 64, "Gauss-Legendre nodes per arc"},
      {"validation.loglip", "d", "integer", 2, "dimension of the law (init section, gaussian)"},
      {"validation.loglip", "p", "number", 1.0, "order of the estimate"},
      {"validation.loglip", "scales", "array of numbers", json::array({1e-4, 1e-3, 1e-2, 1e-1}), "perturbation scales"},
      {"validation.loglip", "samples", "integer", 1000000, "Monte Carlo pairs per scale"},
      {"validation.loglip", "cutoff_N", "array of numbers", json::array({256, 4096}), "cut-off variant N values"},
      {"validation.loglip", "delta", "number", 0.3, "cut-off exponent of the cut-off variant"},
      {"validation.loglip", "margin", "number", 1.5, "fitted constant = margin * calibration maximum"},
      {"validation.gronwall", "trials", "integer", 100, "random trials per inequality"},
      {"validation.gronwall", "rk4_step", "number", 1e-5, "RK4 step of the ODE oracles"},
      {"validation.gronwall", "grid_step", "number", 1e-3, "grid step of the linear trials"},
      {"validation.tolerances", "fg_slope", "number", 0.1, "validate-fg: |slope - expected| bound"},
      {"validation.tolerances", "lln_margin", "number", 0.3, "validate-lln: slope <= -gamma_m + margin"},
  };
  return fields;
}

const std::set<std::string>& sections() {
  static const std::set<std::string> s = [] {
    std::set<std::string> out;
    for (const auto& f : schema_fields()) out.insert(f.section);
    return out;
  }();
  return s;
}

std::pair<std::size_t, std::size_t> line_column(const std::string& text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i + 1 < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

// Typed access to one section with path-aware errors.
class Section {
 public:
  Section(const json* obj, std::string path) : obj_(obj), path_(std::move(path)) {}

  bool has(const char* key) const { return obj_ && obj_->contains(key); }

  double number(const char* key, double fallback) const {
    if (!has(key)) return fallback;
    const json& v = obj_->at(key);
    if (v.is_string() && (v == "inf" || v == "infinity")) return std::numeric_limits<double>::infinity();
    if (!v.is_number()) fail(key, "must be a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) fail(key, "must be finite");
    return x;
  }
  long long integer(const char* key, long long fallback) const {
    if (!has(key)) return fallback;
    const json& v = obj_->at(key);
    if (v.is_number_integer() || v.is_number_unsigned()) return v.get<long long>();
    if (v.is_number_float()) {
      const double x = v.get<double>();
      if (std::floor(x) == x && std::abs(x) < 9e15) return static_cast<long long>(x);
    }
    fail(key, "must be an integer");
  }
  std::uint64_t unsigned_integer(const char* key, std::uint64_t fallback) const {
    if (!has(key)) return fallback;
    const json& v = obj_->at(key);
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    if (v.is_number_integer() && v.get<long long>() >= 0) return static_cast<std::uint64_t>(v.get<long long>());
    fail(key, "must be a nonnegative integer");
  }
  bool boolean(const char* key, bool fallback) const {
    if (!has(key)) return fallback;
    const json& v = obj_->at(key);
    if (!v.is_boolean()) fail(key, "must be true or false");
    return v.get<bool>();
  }
  std::string string(const char* key, const std::string& fallback) const {
    if (!has(key)) return fallback;
    const json& v = obj_->at(key);
    if (!v.is_string()) fail(key, "must be a string");
    return v.get<std::string>();
  }
  std::vector<double> numbers(const char* key, std::vector<double> fallback) const {
    if (!has(key)) return fallback;
    const json& v = obj_->at(key);
    if (!v.is_array()) fail(key, "must be an array of numbers");
    std::vector<double> out;
    for (const auto& e : v) {
      if (!e.is_number()) fail(key, "must be an array of numbers");
      out.push_back(e.get<double>());
    }
    return out;
  }
  std::vector<std::size_t> counts(const char* key, std::vector<std::size_t> fallback) const {
    if (!has(key)) return fallback;
    const json& v = obj_->at(key);
    if (!v.is_array()) fail(key, "must be an array of positive integers");
    std::vector<std::size_t> out;
    for (const auto& e : v) {
      if (!(e.is_number_unsigned() || (e.is_number_integer() && e.get<long long>() > 0))) {
        fail(key, "must be an array of positive integers");
      }
      out.push_back(e.get<std::size_t>());
    }
    return out;
  }
  [[noreturn]] void fail(const char* key, const std::string& what) const {
    throw ConfigError(path_ + (path_.empty() ? "" : ".") + key + ": " + what);
  }

 private:
  const json* obj_;
  std::string path_;
};

void check_keys(const json& root) {
  if (!root.is_object()) throw ConfigError("config must be a JSON object");
  std::function<void(const json&, const std::string&)> walk = [&](const json& obj, const std::string& path) {
    for (const auto& [key, value] : obj.items()) {
      const std::string full = path.empty() ? key : path + "." + key;
      if (sections().count(full)) {
        if (!value.is_object()) throw ConfigError(full + ": must be an object");
        walk(value, full);
        continue;
      }
      bool parent = false;
      for (const auto& s : sections()) {
        if (s.rfind(full + ".", 0) == 0) parent = true;
      }
      if (parent) {
        if (!value.is_object()) throw ConfigError(full + ": must be an object");
        walk(value, full);
        continue;
      }
      bool known = false;
      for (const auto& f : schema_fields()) {
        if (f.section == path && key == f.key) known = true;
      }
      if (!known) throw ConfigError("unknown key '" + full + "'");
    }
  };
  walk(root, "");
}

const json* child(const json& root, std::initializer_list<const char*> path) {
  const json* cur = &root;
  for (const char* p : path) {
    if (!cur->contains(p)) return nullptr;
    cur = &cur->at(p);
  }
  return cur;
}

}  // namespace

RunConfig parse_config(const std::string& text) {
  json root;
  try {
    root = json::parse(text, nullptr, true, false);
  } catch (const json::parse_error& e) {
    const auto [line, col] = line_column(text, e.byte);
    std::string what = e.what();
    const auto pos = what.find("syntax error");
    if (pos != std::string::npos) what = what.substr(pos);
    throw ConfigError("parse error at line " + std::to_string(line) + ", column " + std::to_string(col) + ": " + what);
  }
  check_keys(root);

  RunConfig cfg;
  ChaosExperiment& exp = cfg.experiment;

  const Section kernel(child(root, {"kernel"}), "kernel");
  exp.kernel.family = parse_kernel_family(kernel.string("family", "newtonian_cutoff"));
  exp.kernel.d = static_cast<int>(kernel.integer("d", 2));
  exp.kernel.delta = kernel.number("delta", 0.3);
  exp.kernel.alpha = kernel.number("alpha", 0.0);
  exp.kernel.xi = kernel.number("xi", 1.0);

  const Section sim(child(root, {"sim"}), "sim");
  exp.sim.sigma = sim.number("sigma", 0.25);
  exp.sim.T = sim.number("T", 0.5);
  exp.sim.seed = sim.unsigned_integer("seed", 1);
  exp.sim.noise_substeps = static_cast<int>(sim.integer("noise_substeps", 1));
  if (sim.string("scheme", "euler_maruyama") != "euler_maruyama") sim.fail("scheme", "only euler_maruyama is supported");
  if (sim.has("dt") && child(root, {"sim", "dt"})->is_string()) {
    if (sim.string("dt", "auto") != "auto") sim.fail("dt", "must be a number or \"auto\"");
    exp.auto_dt = true;
  } else if (sim.has("dt")) {
    exp.auto_dt = false;
    exp.sim.dt = sim.number("dt", 1e-3);
  }
  exp.dt_cap = sim.number("dt_cap", 1e-3);

  const Section init(child(root, {"init"}), "init");
  exp.init.kind = parse_initial_kind(init.string("kind", "gaussian"));
  exp.init.x_mean = init.number("x_mean", 0.0);
  exp.init.x_scale = init.number("x_scale", 1.0);
  exp.init.v_mean = init.number("v_mean", 0.0);
  exp.init.v_scale = init.number("v_scale", 1.0);
  exp.init.x_half_width = init.number("x_half_width", 1.0);
  exp.init.v_half_width = init.number("v_half_width", 1.0);
  exp.init.gamma_v = init.number("gamma_v", 5.0);

  const Section e(child(root, {"experiment"}), "experiment");
  exp.n_grid = e.counts("N_grid", {64, 128, 256});
  exp.replicas = static_cast<int>(e.integer("replicas", 10));
  exp.observation_times = e.numbers("observation_times", {});
  exp.p = e.number("p", 1.0);
  exp.q = e.number("q", 4.0);
  exp.epsilon = e.number("epsilon", 1.0);
  exp.gamma = e.number("gamma", exp.kernel.is_newtonian() ? 0.2 : exp.kernel.delta);
  exp.ell = e.number("ell", std::numeric_limits<double>::infinity());
  exp.pilot_factor = static_cast<int>(e.integer("pilot_factor", 8));
  exp.c_grid = e.numbers("c_grid", {});
  exp.cutoff_leg = e.boolean("cutoff_leg", !exp.kernel.is_newtonian());
  exp.proxy_delta_factor = e.number("proxy_delta_factor", 2.0);
  exp.refinement = static_cast<int>(e.integer("refinement", 1));

  const Section out(child(root, {"output"}), "output");
  cfg.output.dir = out.string("dir", "out");
  cfg.output.csv = out.boolean("csv", true);
  cfg.output.json = out.boolean("json", true);
  cfg.output.binary = out.boolean("binary", false);

  const Section top(&root, "");
  cfg.threads_set = top.has("threads");
  cfg.threads = static_cast<int>(top.integer("threads", 0));
  if (cfg.threads < 0) top.fail("threads", "must be >= 0");

  ValidationConfig& val = cfg.validation;
  const Section vk(child(root, {"validation", "kernels"}), "validation.kernels");
  val.kernels.pairs = static_cast<std::size_t>(vk.integer("pairs", 100000));
  {
    const auto ns = vk.numbers("N_values", {16, 256, 4096});
    val.kernels.n_values = ns;
  }
  val.kernels.lipschitz_pairs = static_cast<std::size_t>(vk.integer("lipschitz_pairs", 1000000));
  val.kernels.calibration_pairs = static_cast<std::size_t>(vk.integer("calibration_pairs", 1000000));
  val.kernels.lipschitz_limit = vk.number("lipschitz_limit", 8.0);
  val.kernels.margin = vk.number("margin", 1.1);
  val.kernels.seed = exp.sim.seed;

  const Section vo(child(root, {"validation", "ot"}), "validation.ot");
  val.transport.instances = static_cast<int>(vo.integer("instances", 200));
  val.transport.max_size = static_cast<std::size_t>(vo.integer("max_size", 7));
  val.transport.metric_trials = static_cast<int>(vo.integer("metric_trials", 100));
  val.transport.seed = exp.sim.seed;
  if (val.transport.max_size < 1 || val.transport.max_size > 9) vo.fail("max_size", "must lie in [1, 9]");

  const Section vf(child(root, {"validation", "fg"}), "validation.fg");
  val.fg.law = exp.init;
  val.fg.d = static_cast<int>(vf.integer("d", 1));
  val.fg.phase_space = vf.boolean("phase_space", false);
  val.fg.n_grid = vf.counts("N_grid", val.fg.n_grid);
  val.fg.p = vf.number("p", 1.0);
  val.fg.replicas = static_cast<int>(vf.integer("replicas", 50));
  val.fg.reference_size = static_cast<std::size_t>(vf.integer("reference_size", 100000));
  val.fg.seed = exp.sim.seed;
  if (val.fg.d < 1) vf.fail("d", "must be >= 1");

  const Section vl(child(root, {"validation", "lln"}), "validation.lln");
  val.lln.kappa = vl.number("kappa", 1.0);
  val.lln.delta = vl.number("delta", 0.25);
  val.lln.c0 = vl.number("c0", 1.0);
  val.lln.m = static_cast<int>(vl.integer("m", 2));
  val.lln.n_grid = vl.counts("N_grid", val.lln.n_grid);
  val.lln.replicas = static_cast<int>(vl.integer("replicas", 50));
  val.lln.quadrature_nodes = static_cast<int>(vl.integer("quadrature_nodes", 64));
  val.lln.seed = exp.sim.seed;
  if (val.lln.quadrature_nodes < 2) vl.fail("quadrature_nodes", "must be >= 2");

  const Section vg(child(root, {"validation", "loglip"}), "validation.loglip");
  val.loglip.law = exp.init;
  val.loglip.d = static_cast<int>(vg.integer("d", 2));
  val.loglip.p = vg.number("p", 1.0);
  val.loglip.scales = vg.numbers("scales", val.loglip.scales);
  val.loglip.samples = static_cast<std::size_t>(vg.integer("samples", 1000000));
  val.loglip.cutoff_n = vg.numbers("cutoff_N", val.loglip.cutoff_n);
  val.loglip.delta = vg.number("delta", 0.3);
  val.loglip.margin = vg.number("margin", 1.5);
  val.loglip.seed = exp.sim.seed;
  if (val.loglip.d < 1 || val.loglip.d > 8) vg.fail("d", "must lie in [1, 8]");

  const Section vw(child(root, {"validation", "gronwall"}), "validation.gronwall");
  val.gronwall.trials = static_cast<int>(vw.integer("trials", 100));
  val.gronwall.rk4_step = vw.number("rk4_step", 1e-5);
  val.gronwall.grid_step = vw.number("grid_step", 1e-3);
  val.gronwall.seed = exp.sim.seed;
  if (!(val.gronwall.rk4_step > 0.0 && val.gronwall.grid_step > 0.0 && val.gronwall.grid_step <= 0.1)) {
    vw.fail("grid_step", "steps must be positive and grid_step <= 0.1");
  }

  const Section vt(child(root, {"validation", "tolerances"}), "validation.tolerances");
  val.tolerances.fg_slope = vt.number("fg_slope", 0.1);
  val.tolerances.lln_margin = vt.number("lln_margin", 0.3);

  // Collect every violated rule before refusing the config.
  std::vector<std::string> problems;
  auto collect = [&](auto&& fn) {
    try {
      fn();
    } catch (const ConfigError& err) {
      problems.emplace_back(err.what());
    }
  };
  collect([&] { exp.kernel.validate(); });
  collect([&] { exp.init.validate(exp.kernel.d); });
  if (problems.empty()) collect([&] { exp.validate(); });
  if (!(exp.sim.sigma >= 0.0)) problems.emplace_back("sim.sigma: must be >= 0");
  for (auto& v : hypothesis_violations(exp)) {
    if (std::find(problems.begin(), problems.end(), v) == problems.end()) problems.push_back(std::move(v));
  }
  if (!problems.empty()) {
    std::string msg = "configuration rejected:";
    for (const auto& p : problems) msg += "\n  " + p;
    throw ConfigError(msg);
  }

  cfg.echo = describe(exp);
  cfg.echo["output"] = {{"dir", cfg.output.dir}, {"csv", cfg.output.csv}, {"json", cfg.output.json}, {"binary", cfg.output.binary}};
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read config '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

nlohmann::json config_schema() {
  json doc = json::object();
  for (const auto& f : schema_fields()) {
    const std::string path = std::string(f.section).empty() ? f.key : std::string(f.section) + "." + f.key;
    doc[path] = {{"type", f.type}, {"default", f.fallback}, {"meaning", f.meaning}};
  }
  return doc;
}

int resolve_threads(const RunConfig& config, const char* env_value) {
  if (config.threads_set) return config.threads;
  if (env_value != nullptr && *env_value != '\0') {
    char* end = nullptr;
    const long v = std::strtol(env_value, &end, 10);
    if (end == env_value || *end != '\0' || v < 0) throw ConfigError("CHAOSKIT_THREADS must be a nonnegative integer");
    return static_cast<int>(v);
  }
  return 0;
}

}  // namespace chaoskit
