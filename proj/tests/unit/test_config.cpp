#include <doctest.h>

#include <string>

#include "chaoskit/config.hpp"
#include "chaoskit/error.hpp"

using namespace chaoskit;

namespace {

std::string rejection(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_SUITE("config") {
  TEST_CASE("minimal configuration loads") {
    const RunConfig cfg =
        parse_config(R"({"kernel":{"d":2,"delta":0.3},"experiment":{"N_grid":[64]},"sim":{"sigma":0.25}})");
    CHECK(cfg.experiment.kernel.d == 2);
    CHECK(cfg.experiment.kernel.delta == 0.3);
    CHECK(cfg.experiment.n_grid == std::vector<std::size_t>{64});
    CHECK(cfg.experiment.sim.sigma == 0.25);
    CHECK(cfg.experiment.auto_dt);
    CHECK(cfg.output.dir == "out");
  }

  TEST_CASE("cut-off exponent above 1/d is rejected") {
    const std::string msg = rejection(R"({"kernel":{"d":2,"delta":0.6}})");
    CHECK(msg.find("delta < 1/d") != std::string::npos);
  }

  TEST_CASE("power singularity beyond d/ell' - 1 is rejected") {
    const std::string msg =
        rejection(R"({"kernel":{"family":"power_cutoff","d":3,"alpha":2.5,"delta":0.25},"experiment":{"ell":"inf"}})");
    CHECK(msg.find("alpha < d/ell' - 1") != std::string::npos);
  }

  TEST_CASE("power family defaults") {
    const RunConfig cfg = parse_config(
        R"({"kernel":{"family":"power_cutoff","d":3,"alpha":0.5,"delta":0.25},"experiment":{"ell":4}})");
    CHECK(cfg.experiment.gamma == 0.25);
    CHECK(cfg.experiment.cutoff_leg);
  }

  TEST_CASE("unknown keys and bad syntax") {
    CHECK(rejection(R"({"kernel":{"dd":2}})").find("unknown key 'kernel.dd'") != std::string::npos);
    CHECK(rejection(R"({"colour":1})").find("unknown key 'colour'") != std::string::npos);
    const std::string msg = rejection("{\n  \"kernel\": {\"d\": 2,,}\n}");
    CHECK(msg.find("parse error at line 2, column") != std::string::npos);
  }

  TEST_CASE("time step and special numbers") {
    RunConfig cfg = parse_config(R"({"sim":{"dt":0.01,"dt_cap":"inf"}})");
    CHECK_FALSE(cfg.experiment.auto_dt);
    CHECK(cfg.experiment.sim.dt == 0.01);
    CHECK(std::isinf(cfg.experiment.dt_cap));
    CHECK(rejection(R"({"sim":{"dt":"fast"}})").find("sim.dt") != std::string::npos);
  }

  TEST_CASE("violations are reported together") {
    const std::string msg = rejection(R"({"kernel":{"d":2,"delta":0.3},"experiment":{"gamma":0.5,"epsilon":9}})");
    CHECK(msg.find("experiment.gamma") != std::string::npos);
    CHECK(msg.find("experiment.epsilon") != std::string::npos);
  }

  TEST_CASE("thread resolution") {
    RunConfig cfg;
    CHECK(resolve_threads(cfg, nullptr) == 0);
    CHECK(resolve_threads(cfg, "3") == 3);
    cfg.threads = 2;
    cfg.threads_set = true;
    CHECK(resolve_threads(cfg, "3") == 2);
  }

  TEST_CASE("files and schema") {
    CHECK_THROWS_AS(load_config("/nonexistent/config.json"), IoError);
    const nlohmann::json schema = config_schema();
    for (const char* key : {"kernel.delta", "sim.dt", "init.kind", "experiment.N_grid", "output.dir",
                            "validation.kernels.calibration_pairs", "threads"}) {
      CHECK_MESSAGE(schema.contains(key), key);
    }
  }
}
