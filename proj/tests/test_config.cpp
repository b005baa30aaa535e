#include <doctest.h>

#include <string>

#include "v2xsim/config.hpp"
#include "v2xsim/errors.hpp"

using namespace v2xsim;
using config::RunConfig;

namespace {

ConfigError::Kind kind_of(const std::string& text) {
  try {
    (void)config::parse_config_text(text);
  } catch (const ConfigError& e) {
    return e.kind();
  }
  FAIL("expected the config to be rejected");
  return ConfigError::Kind::Syntax;
}

}  // namespace

TEST_SUITE("config") {

TEST_CASE("empty text yields the built-in defaults") {
  CHECK(config::parse_config_text("") == RunConfig{});
  CHECK(config::parse_config_text("\n# only a comment\n") == RunConfig{});
}

TEST_CASE("the printed default document parses back to the defaults") {
  CHECK(config::parse_config_text(config::print_default_config()) == RunConfig{});
}

TEST_CASE("error classes stay distinct and carry line numbers") {
  try {
    (void)config::parse_config_file("definitely_missing_config_file.ini");
    FAIL("missing file accepted");
  } catch (const ConfigError& e) {
    CHECK(e.kind() == ConfigError::Kind::MissingFile);
  }

  CHECK(kind_of("[run\n") == ConfigError::Kind::Syntax);
  CHECK(kind_of("[run]\nno equals sign here\n") == ConfigError::Kind::Syntax);
  CHECK(kind_of("[run]\nhorizon_s = banana\n") == ConfigError::Kind::Syntax);
  CHECK(kind_of("[run]\nbogus_key = 1\n") == ConfigError::Kind::UnknownKey);
  CHECK(kind_of("[nosuchsection]\nx = 1\n") == ConfigError::Kind::UnknownKey);
  // Well-formed value of the wrong type vs a value outside its range.
  CHECK(kind_of("[run]\nhorizon_s = \"banana\"\n") == ConfigError::Kind::BadValue);
  CHECK(kind_of("[mac]\nmax_retx = 1.5\n") == ConfigError::Kind::BadValue);
  CHECK(kind_of("[run]\nhorizon_s = -1\n") == ConfigError::Kind::OutOfRange);

  try {
    (void)config::parse_config_text("[run]\n\nhorizon_s = \"banana\"\n");
    FAIL("bad value accepted");
  } catch (const ConfigError& e) {
    CHECK(e.line() == 3);
  }
}

TEST_CASE("values of every shape parse") {
  const auto cfg = config::parse_config_text(
      "[scenario]\n"
      "mobility = true\n"
      "density_per_km2 = 250.5\n"
      "[mac]\n"
      "dl_policy = \"rr\"\n"
      "[run]\n"
      "seeds = [3, 5, 8]\n"
      "downlink_mode = \"unicast\"\n");
  CHECK(cfg.scenario.mobility);
  CHECK(cfg.scenario.density_per_km2 == doctest::Approx(250.5));
  CHECK(cfg.mac.dl_policy == "rr");
  CHECK(cfg.run.downlink_mode == "unicast");
  REQUIRE(cfg.run.seeds.size() == 3);
  CHECK(cfg.run.seeds[1] == 5);
}

TEST_CASE("bandwidth maps to prb counts with a guarded custom path") {
  CHECK(config::prbs_for_bandwidth(10.0, false) == 50);
  CHECK(config::prbs_for_bandwidth(20.0, false) == 100);
  CHECK(config::prbs_for_bandwidth(40.0, false) == 200);
  CHECK(config::prbs_for_bandwidth(100.0, false) == 500);

  CHECK_THROWS_AS((void)config::prbs_for_bandwidth(15.0, false), ConfigError);
  // floor(15 / 0.18) = 83, rounded down to a multiple of 12.
  CHECK(config::prbs_for_bandwidth(15.0, true) == 72);

  CHECK(kind_of("[run]\nbandwidth_dl_mhz = 15\n") == ConfigError::Kind::OutOfRange);
  const auto cfg = config::parse_config_text(
      "[run]\nbandwidth_dl_mhz = 15\nallow_custom_bw = true\n");
  CHECK(config::prbs_for_bandwidth(cfg.run.bandwidth_dl_mhz, true) == 72);
}

TEST_CASE("cross-field validation rejects inconsistent settings") {
  CHECK(kind_of("[run]\ndownlink_mode = \"broadcast\"\n") ==
        ConfigError::Kind::OutOfRange);
  CHECK(kind_of("[run]\nmulticast_max_replicas = -1\n") ==
        ConfigError::Kind::OutOfRange);
  CHECK(kind_of("[run]\nmulticast_mcs_efficiency = 0.9\n") ==
        ConfigError::Kind::OutOfRange);  // not an MCS table entry
  CHECK(kind_of("[run]\nseeds = []\n") == ConfigError::Kind::OutOfRange);
  CHECK(kind_of("[scenario]\nvehicle_fraction = 1.5\n") ==
        ConfigError::Kind::OutOfRange);
  CHECK(kind_of("[scenario]\npark_row = 9\n") == ConfigError::Kind::OutOfRange);
  CHECK(kind_of("[output]\ncdf_resolution_ms = 0\n") ==
        ConfigError::Kind::OutOfRange);

  // Uncapped repetition and an explicit cap are both in range.
  CHECK(config::parse_config_text("[run]\nmulticast_max_replicas = 0\n")
            .run.multicast_max_replicas == 0);
  CHECK(config::parse_config_text("[run]\nmulticast_max_replicas = 4\n")
            .run.multicast_max_replicas == 4);

  // An override changes what multicast efficiencies are legal.
  const auto cfg = config::parse_config_text(
      "[phy.mcs_override]\n"
      "mcs5 = [0.9, 0.0, 1.0]\n"
      "[run]\n"
      "multicast_mcs_efficiency = 0.9\n");
  CHECK(cfg.run.multicast_mcs_efficiency == doctest::Approx(0.9));
  REQUIRE(cfg.phy.mcs_overrides.size() == 1);
  CHECK(cfg.phy.mcs_overrides[0].index == 5);
}

}  // TEST_SUITE("config")
