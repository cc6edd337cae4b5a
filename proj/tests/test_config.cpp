#include <doctest.h>

#include "hflsim/config.hpp"

using namespace hflsim;

TEST_CASE("parse_config: empty text and empty sections give the shipped defaults") {
  for (const char* text : {"", "[game]\n", "[game]\n[hfl]\n[data]\n"}) {
    auto cfg = parse_config(text);
    CHECK(cfg.game.alpha == 0.001);
    CHECK(cfg.game.beta == 0.001);
    CHECK(cfg.data.spec.edges == 3);
    CHECK(cfg.data.spec.workers == 50);
    CHECK(cfg.game.num_servers() == 3);
    CHECK(cfg.game.servers[2].reward_pool == 500);
  }
}

TEST_CASE("parse_config: populations and servers parse structured values") {
  auto cfg = parse_config(
      "[game]\npopulations = 2000:10:10, 4000:10:10\nservers = 100:2, 300:4\n");
  REQUIRE(cfg.game.num_populations() == 2);
  CHECK(cfg.game.populations[1].data_quantity == 4000);
  CHECK(cfg.game.servers[1].synth_cost == 4);
}

TEST_CASE("parse_config: a nine-value reward sweep parses into nine runs") {
  auto cfg = parse_config(
      "mode = sweep\n[sweep]\nparameter = gamma_1\n"
      "values = 100,200,300,400,500,600,700,800,900\n");
  CHECK(cfg.mode == RunMode::Sweep);
  CHECK(cfg.sweep.values.size() == 9);
  CHECK(cfg.sweep.parameter == "gamma_1");
}

TEST_CASE("parse_config: malformed numerics name the key and line") {
  CHECK_THROWS_WITH_AS(parse_config("[game]\nalpha = banana\n"),
                       doctest::Contains("line 2, key 'alpha'"), ConfigError);
}

TEST_CASE("parse_config: unknown keys are hard errors") {
  CHECK_THROWS_WITH_AS(parse_config("[game]\nturbo = 11\n"),
                       doctest::Contains("game.turbo"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_config("[goop]\n"), doctest::Contains("unknown section"),
                       ConfigError);
}

TEST_CASE("parse_config: invariant violations are config errors") {
  CHECK_THROWS_AS(parse_config("[game]\ndelta = 0\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[hfl]\nkappa1 = 7\nK = 100\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[data]\nsynthetic_fraction = 0.5\n"), ConfigError);
}

TEST_CASE("parse_config: sweep axis existence is validated") {
  CHECK_THROWS_WITH_AS(
      parse_config("mode = sweep\n[sweep]\nparameter = gamma_9\nvalues = 1,2\n"),
      doctest::Contains("out of range"), ConfigError);
  CHECK_THROWS_WITH_AS(
      parse_config("mode = sweep\n[sweep]\nparameter = warp\nvalues = 1\n"),
      doctest::Contains("unknown sweep parameter"), ConfigError);
}

TEST_CASE("config_hash: stable under key order and whitespace, sensitive to values") {
  std::string a = "[game]\nalpha = 0.001\nbeta = 0.002\n";
  std::string b = "[game]\nbeta   =   0.002\nalpha=0.001\n";
  std::string c = "[game]\nalpha = 0.001\nbeta = 0.003\n";
  CHECK(config_hash(a) == config_hash(b));
  CHECK(config_hash(a) != config_hash(c));
}

TEST_CASE("apply_sweep_value: kappa axes update the schedule") {
  auto cfg = default_config();
  apply_sweep_value(cfg, "kappa1", 10);
  apply_sweep_value(cfg, "kappa2", 6);
  CHECK(cfg.hfl.kappa1 == 10);
  CHECK(cfg.hfl.kappa2 == 6);
  apply_sweep_value(cfg, "c_1", 40.0);
  CHECK(cfg.game.populations[0].compute_cost == 40.0);
}

TEST_CASE("data root resolution prefers the explicit key") {
  auto cfg = parse_config("[data]\nroot = /explicit/path\n");
  CHECK(cfg.data.resolved_root() == "/explicit/path");
}
