// Copyright (c) 2026 the kdmc developers.
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include "kdmc/config.hpp"
#include "kdmc/errors.hpp"

using namespace kdmc;

TEST_CASE("parses a full experiment manifest") {
  const char* text = R"(
# total estimation over the epsilon grid
kind = total-estimation
background = homogeneous
u_p = 30
epsilon = 0.1, 0.05, 0.02, 0.01
K = 1, 5, 25, 75
I = 100000
J = 100
t_bar = 0.0275
seed = 12345
scoring = time-integrated
out = out/total
)";
  const ExperimentConfig cfg = parse_config_text(text);
  CHECK(cfg.kind == "total-estimation");
  CHECK(cfg.epsilons.size() == 4);
  CHECK(cfg.epsilons[2] == doctest::Approx(0.02));
  CHECK(cfg.step_counts == std::vector<int>{1, 5, 25, 75});
  CHECK(cfg.particles == 100000);
  CHECK(cfg.cells == 100);
  CHECK(cfg.t_final == doctest::Approx(0.0275));
  CHECK(cfg.seed == 12345);
  CHECK(cfg.out_dir == "out/total");
  CHECK(cfg.mean_velocity == doctest::Approx(30.0));
}

TEST_CASE("sim-error kinds default to the u_p = 2 test case") {
  const ExperimentConfig cfg = parse_config_text(
      "kind = local-sim-error\nepsilon = 0.1, 0.2\nK = 5\n");
  CHECK(cfg.mean_velocity == doctest::Approx(2.0));
  CHECK(cfg.t_final == doctest::Approx(0.0275));
}

TEST_CASE("fusion case defaults t_final to 0.001 and requires the profile") {
  const ExperimentConfig cfg = parse_config_text(
      "kind = fusion-case\nbackground = fusion\nepsilon = 0.0027\nK = 1, 2\n");
  CHECK(cfg.t_final == doctest::Approx(0.001));
  CHECK_THROWS_AS(
      parse_config_text("kind = fusion-case\nepsilon = 0.0027\nK = 1\n"),
      ConfigError);
}

TEST_CASE("rejects malformed input") {
  CHECK_THROWS_AS(parse_config_text("kind = run\nmethod = kdmc\n"),
                  ConfigError);  // missing epsilon
  CHECK_THROWS_AS(
      parse_config_text("kind = run\nepsilon = 0.1\nK = 1\nbanana = 3\n"),
      ConfigError);  // unknown key
  CHECK_THROWS_AS(
      parse_config_text("kind = run\nepsilon = -0.1\nK = 1\n"), ConfigError);
  CHECK_THROWS_AS(
      parse_config_text("kind = run\nepsilon = 0.1\nK = 0\n"), ConfigError);
  CHECK_THROWS_AS(
      parse_config_text("kind = mystery\nepsilon = 0.1\nK = 1\n"), ConfigError);
  CHECK_THROWS_AS(
      parse_config_text("kind = run\nepsilon = 0.1\nK = 1\nI = -5\n"),
      ConfigError);
  CHECK_THROWS_AS(parse_config_text("kind = run\nepsilon = 0.1\nK = 1\n"
                                    "scoring = sometimes\n"),
                  ConfigError);
  CHECK_THROWS_AS(parse_config_text("not a key value line\n"), ConfigError);
}

TEST_CASE("string-to-enum helpers") {
  CHECK(to_method("kinetic") == Method::kKinetic);
  CHECK(to_method("kdmc-mimicked") == Method::kKdmcMimicked);
  CHECK_THROWS_AS(to_method("warp-drive"), ConfigError);
  CHECK(to_scoring("terminal-time") == ScoringMode::kTerminalTime);
  CHECK(to_deposition("linear") == DepositionKernel::kLinear);
  CHECK(to_theta_average("flat") == ThetaAverage::kFlat);
}
