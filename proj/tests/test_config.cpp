#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "hypolab/config.hpp"

using namespace hypolab;

TEST_CASE("config round-trip through the canonical echo") {
  ExperimentConfig cfg;
  cfg.potential_id = "power:4";
  cfg.alphas = {0.5, 1.0, 2.0};
  cfg.beta = 2.0;
  cfg.nx = 10;
  cfg.nw = 12;
  cfg.upsilon = 0.7;
  cfg.stepper = "crank-nicolson";
  cfg.scheme = "euler-maruyama";
  cfg.sde_dt = 1e-3;
  cfg.n_paths = 123;
  cfg.seed = 99;
  cfg.observables = {"x", "w2"};
  cfg.sde_initial = InitialLaw::equilibrium();
  cfg.output_dir = "/tmp/xyz";

  const ExperimentConfig back = parse_config(config_to_json(cfg), "echo");
  CHECK(back.potential_id == cfg.potential_id);
  CHECK(back.alphas == cfg.alphas);
  CHECK(back.beta == cfg.beta);
  CHECK(back.nx == cfg.nx);
  CHECK(back.nw == cfg.nw);
  CHECK(back.upsilon == cfg.upsilon);
  CHECK(back.stepper == cfg.stepper);
  CHECK(back.scheme == cfg.scheme);
  CHECK(back.n_paths == cfg.n_paths);
  CHECK(back.seed == cfg.seed);
  CHECK(back.observables == cfg.observables);
  CHECK(back.sde_initial.kind == InitialLaw::Kind::Equilibrium);
  CHECK(back.output_dir == cfg.output_dir);
  CHECK(config_hash(back) == config_hash(cfg));
}

TEST_CASE("unknown keys are rejected with their path") {
  CHECK_THROWS_WITH_AS(
      parse_config(R"({"potentials": {"id": "harmonic"}})", "t"),
      doctest::Contains("/potentials"), std::invalid_argument);
  CHECK_THROWS_WITH_AS(
      parse_config(R"({"params": {"alpha": 1.0, "gamma": 2.0}})", "t"),
      doctest::Contains("/params/gamma"), std::invalid_argument);
  CHECK_THROWS_WITH_AS(
      parse_config(R"({"sde": {"initial": {"type": "point", "v": [1]}}})",
                   "t"),
      doctest::Contains("/sde/initial/v"), std::invalid_argument);
}

TEST_CASE("alpha grid forms") {
  CHECK(parse_config(R"({"params": {"alpha": 2.5}})", "t").alphas ==
        std::vector<double>{2.5});
  CHECK(parse_config(R"({"params": {"alpha": [1, 2, 4]}})", "t").alphas ==
        std::vector<double>{1.0, 2.0, 4.0});
  const auto grid = parse_config(
      R"({"params": {"alpha": {"from": 1, "to": 100, "count": 3, "log": true}}})",
      "t");
  REQUIRE(grid.alphas.size() == 3);
  CHECK(grid.alphas[1] == doctest::Approx(10.0).epsilon(1e-12));
  CHECK_THROWS_AS(
      parse_config(R"({"params": {"alpha": {"from": -1, "to": 2, "count": 3}}})",
                   "t"),
      std::invalid_argument);
  CHECK_THROWS_AS(parse_config(R"({"params": {"alpha": [0.0]}})", "t"),
                  std::invalid_argument);
}

TEST_CASE("cross-field validation") {
  CHECK_THROWS_AS(parse_config(R"({"params": {"beta": -1}})", "t"),
                  std::invalid_argument);
  CHECK_THROWS_AS(parse_config(R"({"truncation": {"nx": 1}})", "t"),
                  std::invalid_argument);
  CHECK_THROWS_AS(
      parse_config(R"({"evolution": {"stepper": "euler"}})", "t"),
      std::invalid_argument);
  CHECK_THROWS_AS(
      parse_config(
          R"({"params": {"alpha": 10}, "sde": {"scheme": "euler-maruyama", "dt": 0.1}})",
          "t"),
      std::invalid_argument);
  CHECK_THROWS_AS(parse_config(R"({"potential": {"id": "mystery"}})", "t"),
                  std::invalid_argument);
  CHECK_THROWS_AS(parse_config(R"({"params": {"d": 5}})", "t"),
                  std::invalid_argument);
  CHECK_THROWS_AS(parse_config("not json", "t"), std::invalid_argument);
}

TEST_CASE("defaults parse and are usable") {
  const ExperimentConfig cfg = parse_config("{}", "t");
  CHECK(cfg.potential_id == "harmonic");
  CHECK(cfg.alpha() == 1.0);
  CHECK_NOTHROW(cfg.make_pot());
  CHECK_NOTHROW(cfg.params(cfg.alpha()));
}
