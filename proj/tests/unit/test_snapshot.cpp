#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <sstream>

#include "chaoskit/dynamics.hpp"
#include "chaoskit/error.hpp"
#include "chaoskit/snapshot.hpp"

using namespace chaoskit;

TEST_SUITE("snapshot") {
  TEST_CASE("text and binary round trips are exact") {
    Ensemble e = sample_initial(InitialLaw{}, 17, 3, StreamKey{1, StreamRole::Init, 0});
    e.t = 0.1 + 0.2;
    std::stringstream text;
    write_snapshot_csv(text, e);
    CHECK(read_snapshot_csv(text) == e);
    std::stringstream bin(std::ios::in | std::ios::out | std::ios::binary);
    write_snapshot_binary(bin, e);
    CHECK(read_snapshot_binary(bin) == e);
  }

  TEST_CASE("files are detected by content") {
    const Ensemble e = sample_initial(InitialLaw{}, 5, 2, StreamKey{2, StreamRole::Init, 0});
    const auto dir = std::filesystem::temp_directory_path() / "chaoskit_snapshot_test";
    std::filesystem::create_directories(dir);
    save_snapshot((dir / "a.csv").string(), e, false);
    save_snapshot((dir / "a.bin").string(), e, true);
    CHECK(load_snapshot((dir / "a.csv").string()) == e);
    CHECK(load_snapshot((dir / "a.bin").string()) == e);
    std::filesystem::remove_all(dir);
  }

  TEST_CASE("malformed input") {
    std::stringstream bad("id,x\n1,2\n");
    CHECK_THROWS_AS(read_snapshot_csv(bad), IoError);
    std::stringstream truncated(std::string("CHKS\x01", 5));
    CHECK_THROWS_AS(read_snapshot_binary(truncated), IoError);
    CHECK_THROWS_AS(load_snapshot("/nonexistent/snapshot.csv"), IoError);
  }
}
