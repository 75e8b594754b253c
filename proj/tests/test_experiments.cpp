// Copyright (c) 2026 the kdmc developers.
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "kdmc/experiments.hpp"
#include "kdmc/io.hpp"
#include "kdmc/rng.hpp"

using namespace kdmc;

namespace {

Eigen::Array<bool, Eigen::Dynamic, 1> all_true(Eigen::Index n) {
  return Eigen::Array<bool, Eigen::Dynamic, 1>::Constant(n, true);
}

}  // namespace

TEST_CASE("slope fit recovers an exact power law with zero stderr") {
  Eigen::ArrayXd x(5);
  x << 0.1, 0.2, 0.4, 0.8, 1.6;
  Eigen::ArrayXd y = x * x;
  const SlopeFit fit = fit_loglog_slope(x, y, all_true(5), 0.0, 10.0);
  CHECK(fit.valid);
  CHECK(fit.slope == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(fit.std_error == doctest::Approx(0.0));
  CHECK(fit.points == 5);
}

TEST_CASE("slope fit of a constant is zero") {
  Eigen::ArrayXd x(4);
  x << 1.0, 2.0, 4.0, 8.0;
  Eigen::ArrayXd y = Eigen::ArrayXd::Constant(4, 3.5);
  const SlopeFit fit = fit_loglog_slope(x, y, all_true(4), 0.0, 10.0);
  CHECK(fit.valid);
  CHECK(fit.slope == doctest::Approx(0.0));
}

TEST_CASE("slope fit under 5% multiplicative noise stays near 2") {
  RngStream rng(3, 0);
  Eigen::ArrayXd x(8), y(8);
  for (int i = 0; i < 8; ++i) {
    x[i] = std::pow(2.0, -i);
    y[i] = x[i] * x[i] * (1.0 + 0.05 * (2.0 * rng.uniform01() - 1.0));
  }
  const SlopeFit fit = fit_loglog_slope(x, y, all_true(8), 0.0, 10.0);
  CHECK(fit.valid);
  CHECK(fit.slope > 1.8);
  CHECK(fit.slope < 2.2);
}

TEST_CASE("slope fit rejects fewer than three admissible points") {
  Eigen::ArrayXd x(5);
  x << 1, 2, 3, 4, 5;
  Eigen::ArrayXd y = x;
  auto admissible = all_true(5);
  admissible[0] = admissible[1] = admissible[2] = false;
  const SlopeFit fit = fit_loglog_slope(x, y, admissible, 0.0, 10.0);
  CHECK_FALSE(fit.valid);
  CHECK(fit.points == 2);
}

TEST_CASE("window restriction drops out-of-range points") {
  Eigen::ArrayXd x(6);
  x << 1, 2, 4, 8, 16, 32;
  Eigen::ArrayXd y = x.pow(1.5);
  const SlopeFit fit = fit_loglog_slope(x, y, all_true(6), 3.0, 20.0);
  CHECK(fit.points == 3);  // 4, 8, 16
  CHECK(fit.slope == doctest::Approx(1.5).epsilon(1e-12));
}

TEST_CASE("derived seeds separate roles and indices") {
  const auto a = derive_seed(1, "ref", 0);
  CHECK(a != derive_seed(1, "ref", 1));
  CHECK(a != derive_seed(1, "approx", 0));
  CHECK(a != derive_seed(2, "ref", 0));
  CHECK(a == derive_seed(1, "ref", 0));
}

TEST_CASE("reference cache round-trips moments and positions on disk") {
  const auto dir = std::filesystem::temp_directory_path() / "kdmc_cache_test";
  std::filesystem::remove_all(dir);
  {
    ReferenceCache cache(dir);
    MomentTable table;
    table.x_center = Eigen::ArrayXd::LinSpaced(4, 0.125, 0.875);
    table.m0 = Eigen::ArrayXd::Constant(4, 1.5);
    table.m1 = Eigen::ArrayXd::Constant(4, -0.5);
    table.m2 = Eigen::ArrayXd::Constant(4, 2.5);
    cache.put_moments("key-a", table);
    Eigen::ArrayXd pos(3);
    pos << 0.1, 0.2, 0.3;
    cache.put_positions("key-b", pos);
  }
  ReferenceCache reopened(dir);
  const auto table = reopened.get_moments("key-a");
  REQUIRE(table.has_value());
  CHECK(table->m0[2] == 1.5);
  CHECK(table->m1[0] == -0.5);
  const auto pos = reopened.get_positions("key-b");
  REQUIRE(pos.has_value());
  CHECK((*pos)[1] == 0.2);
  CHECK_FALSE(reopened.get_moments("missing").has_value());
  std::filesystem::remove_all(dir);
}

TEST_CASE("local sim error smoke run produces a full curve") {
  ExperimentConfig cfg;
  cfg.kind = "local-sim-error";
  cfg.mean_velocity = 2.0;
  cfg.epsilons = {0.1, 0.2, 0.4};
  cfg.step_counts = {5};
  cfg.particles = 20000;
  cfg.seed = 99;
  const ExperimentResult result = run_local_sim_error(cfg);
  REQUIRE(result.curves.size() == 1);
  const ErrorCurve& curve = result.curves[0];
  CHECK(curve.sweep.size() == 3);
  REQUIRE(curve.series.size() == 1);
  CHECK((curve.series[0].error > 0.0).all());
  CHECK((curve.series[0].noise_floor > 0.0).all());
  REQUIRE(result.slopes.size() == 1);
}

TEST_CASE("experiment outputs are byte-identical for identical config") {
  ExperimentConfig cfg;
  cfg.kind = "local-sim-error";
  cfg.mean_velocity = 2.0;
  cfg.epsilons = {0.2, 0.4};
  cfg.step_counts = {5};
  cfg.particles = 5000;
  cfg.seed = 4242;

  auto render = [&]() {
    const ExperimentResult result = run_local_sim_error(cfg);
    const auto dir =
        std::filesystem::temp_directory_path() / "kdmc_determinism_test";
    std::filesystem::remove_all(dir);
    write_experiment_output(dir, cfg, result);
    std::ifstream in(dir / "local_sim_error_vs_epsilon.csv");
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };
  const std::string first = render();
  const std::string second = render();
  CHECK(first == second);
  CHECK(first.find("sweep_value,moment,error,noise_floor") == 0);
}

TEST_CASE("cost study reports plausible operation ratios") {
  ExperimentConfig cfg;
  cfg.kind = "cost-study";
  cfg.epsilons = {0.05};  // R = 400
  cfg.step_counts = {1, 2};
  cfg.particles = 20000;
  cfg.cells = 20;
  cfg.t_final = 0.0275;
  const ExperimentResult result = run_cost_study(cfg);
  REQUIRE(result.cost.size() == 2);
  const CostRow& row = result.cost[0];  // K = 1: R dt = 11
  CHECK(row.predicted_ratio == doctest::Approx(0.0275 * 400.0 / 2.0));
  CHECK(row.measured_ratio ==
        doctest::Approx(row.predicted_ratio).epsilon(0.2));
  CHECK(result.cost[1].measured_ratio < row.measured_ratio);
}
