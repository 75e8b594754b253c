// Copyright (c) 2026 the kdmc developers.
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <vector>

#include "kdmc/fluid.hpp"
#include "kdmc/metrics.hpp"
#include "kdmc/rng.hpp"
#include "kdmc/sampling.hpp"
#include "test_support.hpp"

using namespace kdmc;
using kdmc_test::ConstantBackground;
using kdmc_test::SmoothTestBackground;

namespace {

constexpr double kPi = 3.14159265358979323846;

double gaussian_periodic(double x, double center, double sigma) {
  double total = 0.0;
  for (int image = -6; image <= 6; ++image) {
    const double d = x - center + image;
    total += std::exp(-0.5 * d * d / (sigma * sigma)) /
             (sigma * std::sqrt(2.0 * kPi));
  }
  return total;
}

}  // namespace

TEST_CASE("uniform density with zero mean velocity is a steady state") {
  ConstantBackground bg(100.0, 100.0, 0.0);
  const DensityField rho0 = density_from_profile(64, [](double) { return 1.0; });
  const DensityField rho = solve_fluid(rho0, bg, 0.01);
  for (int j = 0; j < 64; ++j) {
    CHECK(rho.rho[j] == doctest::Approx(1.0).epsilon(1e-13));
  }
}

TEST_CASE("solver rejects negative duration and CFL-violating forced steps") {
  ConstantBackground bg(100.0, 100.0, 1.0);
  const DensityField rho0 = density_from_profile(16, [](double) { return 1.0; });
  CHECK_THROWS_AS(solve_fluid(rho0, bg, -1.0), std::invalid_argument);
  FluidOptions opts;
  opts.forced_dt = 1.0;  // far above the stability limit
  CHECK_THROWS_AS(solve_fluid(rho0, bg, 0.01, opts), std::invalid_argument);
}

TEST_CASE("pure advection translates the profile and conserves mass") {
  // Huge rate with fixed variance turns diffusion off (D = sigma^2/R -> 0).
  ConstantBackground bg(1e9, 1.0, 1.0);
  const int cells = 200;
  const DensityField rho0 = density_from_profile(
      cells, [](double x) { return 1.0 + 0.5 * std::sin(2.0 * kPi * x); });
  const double period = 1.0;  // one full domain traversal at u_p = 1
  const DensityField rho = solve_fluid(rho0, bg, period);
  CHECK(rho.total_mass() == doctest::Approx(rho0.total_mass()).epsilon(1e-13));
  // First-order upwind diffuses the profile but keeps it centered: the
  // translated solution must match rho0 better than a half-period shift.
  double err_same = 0.0, err_shifted = 0.0;
  for (int j = 0; j < cells; ++j) {
    err_same += std::pow(rho.rho[j] - rho0.rho[j], 2);
    err_shifted +=
        std::pow(rho.rho[j] - rho0.rho[(j + cells / 2) % cells], 2);
  }
  CHECK(err_same < 0.25 * err_shifted);
}

TEST_CASE("heat-kernel check: narrow gaussian spreading") {
  ConstantBackground bg(100.0, 100.0, 0.0);  // D = 1
  const int cells = 1000;
  const double sigma0 = 0.02;
  const double t_run = 0.001;
  const DensityField rho0 = density_from_profile(
      cells, [&](double x) { return gaussian_periodic(x, 0.5, sigma0); });
  const DensityField rho = solve_fluid(rho0, bg, t_run);
  const double sigma_t = std::sqrt(sigma0 * sigma0 + 2.0 * 1.0 * t_run);
  Eigen::ArrayXd exact(cells);
  for (int j = 0; j < cells; ++j) {
    exact[j] = gaussian_periodic((j + 0.5) / cells, 0.5, sigma_t);
  }
  CHECK(relative_l2_error(exact, rho.rho) < 0.02);
  CHECK(rho.total_mass() == doctest::Approx(rho0.total_mass()).epsilon(1e-12));
}

TEST_CASE("first-order spatial convergence on a drifting heat kernel") {
  // With advection on, the upwind flux dominates the error at first order
  // (the pure-diffusion path is centered and converges faster).
  const double u_p = 20.0;
  ConstantBackground bg(100.0, 100.0, u_p);
  const double sigma0 = 0.05;
  const double t_run = 0.0005;
  const double sigma_t = std::sqrt(sigma0 * sigma0 + 2.0 * t_run);
  auto error_at = [&](int cells) {
    const DensityField rho0 = density_from_profile(
        cells, [&](double x) { return gaussian_periodic(x, 0.5, sigma0); });
    const DensityField rho = solve_fluid(rho0, bg, t_run);
    Eigen::ArrayXd exact(cells);
    for (int j = 0; j < cells; ++j) {
      exact[j] =
          gaussian_periodic((j + 0.5) / cells, 0.5 + u_p * t_run, sigma_t);
    }
    return relative_l2_error(exact, rho.rho);
  };
  const double coarse = error_at(100);
  const double fine = error_at(200);
  const double order = std::log2(coarse / fine);
  CHECK(order > 0.8);
  CHECK(order < 1.3);
}

TEST_CASE("constant-field moments match the closed forms") {
  const double u_p = 7.0;
  const double sigma2 = 5.0;
  ConstantBackground bg(40.0, sigma2, u_p);
  const int cells = 25;
  const double t_run = 0.01;
  const MomentTable moments =
      fluid_only_method(bg, t_run, cells, [](double) { return 1.0; });
  const double dx = 1.0 / cells;
  for (int j = 0; j < cells; ++j) {
    CHECK(moments.m0[j] == doctest::Approx(t_run * dx).epsilon(1e-12));
    CHECK(moments.m1[j] == doctest::Approx(t_run * u_p * dx).epsilon(1e-12));
    CHECK(moments.m2[j] ==
          doctest::Approx(t_run * 0.5 * (u_p * u_p + sigma2) * dx).epsilon(1e-12));
  }
}

TEST_CASE("m1 sums to zero for u_p = 0 with a varying variance profile") {
  SmoothTestBackground bg(200.0, 0.0, 3.0, 0.5, 0.0);  // sigma^2 varies, u_p = 0
  const MomentTable moments = fluid_only_method(
      bg, 0.004, 64, [](double x) { return 1.0 + 0.3 * std::cos(2.0 * kPi * x); });
  // Periodic sum of central differences telescopes to zero exactly.
  CHECK(std::abs(moments.m1.sum()) < 1e-13 * moments.m0.sum());
}

TEST_CASE("single-cell grid reduces to the constant-field case") {
  ConstantBackground bg(30.0, 2.0, 4.0);
  const MomentTable moments =
      fluid_only_method(bg, 0.02, 1, [](double) { return 3.0; });
  CHECK(moments.m0[0] == doctest::Approx(0.02 * 3.0).epsilon(1e-12));
  CHECK(moments.m1[0] == doctest::Approx(0.02 * 3.0 * 4.0).epsilon(1e-12));
  CHECK(moments.m2[0] ==
        doctest::Approx(0.02 * 3.0 * 0.5 * (16.0 + 2.0)).epsilon(1e-12));
}

TEST_CASE("fluid-only mass is conserved over the estimation horizon") {
  HomogeneousBackground bg(0.05, 30.0);
  const DensityField rho0 = density_from_profile(100, initial_density);
  MomentGrid grid(100);
  const DensityField rho = solve_fluid(rho0, bg, 0.0275, {}, &grid);
  CHECK(rho.total_mass() == doctest::Approx(rho0.total_mass()).epsilon(1e-12));
}

TEST_CASE("m1 derivative term is the grid-sensitive one: J=200 vs J=1000") {
  // The m1 integrand carries (1/R) d_x(sigma^2 rho); its central-difference
  // discretization dominates the fluid-only m1 error on coarse grids.
  HomogeneousBackground bg(0.01, 30.0);
  auto aggregated = [&](int cells, int target) {
    const MomentTable fine = fluid_only_method(bg, 0.0275, cells, initial_density);
    const int factor = cells / target;
    Eigen::ArrayXd out = Eigen::ArrayXd::Zero(target);
    for (int j = 0; j < cells; ++j) out[j / factor] += fine.m1[j];
    return out;
  };
  const Eigen::ArrayXd truth = aggregated(4000, 200);
  const Eigen::ArrayXd coarse = aggregated(200, 200);
  const Eigen::ArrayXd medium = aggregated(1000, 200);
  const double err_coarse = relative_l2_error(truth, coarse);
  const double err_medium = relative_l2_error(truth, medium);
  CHECK(err_medium < 0.5 * err_coarse);
}

TEST_CASE("deposit accumulator: nearest binning and theta averages") {
  DepositAccumulator acc(4, DepositionKernel::kNearest, ThetaAverage::kPerParticle);
  acc.begin_particle();
  acc.add({0.1, 0.2, 1.0});
  acc.add({0.1, 0.4, 1.0});
  acc.end_particle();
  acc.begin_particle();
  acc.add({0.6, 0.1, 1.0});
  acc.end_particle();
  acc.begin_particle();  // particle without deposits
  acc.end_particle();
  const DepositSummary s = acc.summary();
  CHECK(s.deposit_count == 3);
  CHECK(s.contributing_particles == 2);
  // Per-particle means: (0.3 + 0.1)/2.
  CHECK(s.theta_hat == doctest::Approx(0.2));
  CHECK(s.density[0] == doctest::Approx(2.0 / 0.25));
  CHECK(s.density[2] == doctest::Approx(1.0 / 0.25));
  CHECK(s.total_weight == doctest::Approx(3.0));

  DepositAccumulator flat(4, DepositionKernel::kNearest, ThetaAverage::kFlat);
  flat.begin_particle();
  flat.add({0.1, 0.2, 1.0});
  flat.add({0.1, 0.4, 1.0});
  flat.end_particle();
  flat.begin_particle();
  flat.add({0.6, 0.1, 1.0});
  flat.end_particle();
  CHECK(flat.summary().theta_hat == doctest::Approx((0.2 + 0.4 + 0.1) / 3.0));
}

TEST_CASE("linear deposition splits weight between neighboring centers") {
  DepositAccumulator acc(4, DepositionKernel::kLinear, ThetaAverage::kFlat);
  acc.begin_particle();
  acc.add({0.25, 0.1, 1.0});  // exactly between centers of cells 0 and 1
  acc.end_particle();
  const DepositSummary s = acc.summary();
  CHECK(s.density[0] == doctest::Approx(0.5 / 0.25));
  CHECK(s.density[1] == doctest::Approx(0.5 / 0.25));
  CHECK(s.density.sum() * 0.25 == doctest::Approx(1.0));
}

TEST_CASE("single deposit: theta_hat is that duration exactly") {
  std::vector<std::vector<DiffusiveDeposit>> deposits(1);
  deposits[0].push_back({0.5, 0.003, 1.0});
  ConstantBackground bg(100.0, 100.0, 0.0);
  const FluidEstimationResult r = fluid_estimation(deposits, bg, 10);
  CHECK(r.theta_hat == doctest::Approx(0.003));
  CHECK_FALSE(r.empty);
}

TEST_CASE("empty deposit list returns zero moments, flagged") {
  std::vector<std::vector<DiffusiveDeposit>> deposits;
  ConstantBackground bg(100.0, 100.0, 0.0);
  const FluidEstimationResult r = fluid_estimation(deposits, bg, 10);
  CHECK(r.empty);
  CHECK(r.moments.m0.abs().sum() == 0.0);
}

TEST_CASE("concentrated deposits: m0 total equals mass times theta_hat") {
  std::vector<std::vector<DiffusiveDeposit>> deposits(50);
  const double theta = 1e-4;
  for (auto& d : deposits) {
    d.push_back({0.31, theta, 0.02});
  }
  ConstantBackground bg(1000.0, 1000.0, 0.0);
  const FluidEstimationResult r = fluid_estimation(deposits, bg, 20);
  CHECK(r.theta_hat == doctest::Approx(theta));
  // total m0 = (sum of weights) * theta_hat to solver tolerance
  CHECK(r.moments.m0.sum() == doctest::Approx(1.0 * theta).epsilon(1e-10));
  Eigen::Index argmax = 0;
  r.moments.m0.maxCoeff(&argmax);
  CHECK(argmax == 6);  // cell containing x = 0.31
}

TEST_CASE("theta_hat of truncated exponentials matches the analytic mean") {
  const double rate = 400.0;
  const double dt = 0.005;
  RngStream rng(21, 0);
  std::vector<std::vector<DiffusiveDeposit>> deposits(1);
  const int n = 200000;
  double check_sum = 0.0, check_sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double tau = sample_exponential(rng, rate);
    if (tau < dt) {
      const double theta = dt - tau;
      deposits[0].push_back({0.5, theta, 1.0});
      check_sum += theta;
      check_sq += theta * theta;
    }
  }
  ConstantBackground bg(rate, rate, 0.0);
  FluidOptions opts;
  opts.theta_average = ThetaAverage::kFlat;
  const FluidEstimationResult r = fluid_estimation(deposits, bg, 10, opts);
  const double m = static_cast<double>(deposits[0].size());
  const double expected =
      dt - (1.0 / rate) * (1.0 - std::exp(-rate * dt) * (1.0 + rate * dt)) /
               (1.0 - std::exp(-rate * dt));
  const double sample_sd =
      std::sqrt(check_sq / m - (check_sum / m) * (check_sum / m));
  CHECK(std::abs(r.theta_hat - expected) < 3.0 * sample_sd / std::sqrt(m));
}

TEST_CASE("fluid estimation is additive for equal-theta deposit sets") {
  ConstantBackground bg(200.0, 100.0, 5.0);
  const double theta = 2e-3;
  std::vector<std::vector<DiffusiveDeposit>> set_a(3), set_b(2), set_ab(5);
  RngStream rng(33, 0);
  for (std::size_t i = 0; i < 3; ++i)
    set_a[i].push_back({rng.uniform01(), theta, 0.5});
  for (std::size_t i = 0; i < 2; ++i)
    set_b[i].push_back({rng.uniform01(), theta, 0.5});
  for (std::size_t i = 0; i < 3; ++i) set_ab[i] = set_a[i];
  for (std::size_t i = 0; i < 2; ++i) set_ab[3 + i] = set_b[i];

  const auto ra = fluid_estimation(set_a, bg, 16);
  const auto rb = fluid_estimation(set_b, bg, 16);
  const auto rab = fluid_estimation(set_ab, bg, 16);
  for (int j = 0; j < 16; ++j) {
    CHECK(rab.moments.m0[j] ==
          doctest::Approx(ra.moments.m0[j] + rb.moments.m0[j]).epsilon(1e-12));
    CHECK(rab.moments.m1[j] ==
          doctest::Approx(ra.moments.m1[j] + rb.moments.m1[j]).epsilon(1e-12));
    CHECK(rab.moments.m2[j] ==
          doctest::Approx(ra.moments.m2[j] + rb.moments.m2[j]).epsilon(1e-12));
  }
}

TEST_CASE("uniform synthetic deposits reproduce constant-field moments") {
  const double u_p = 6.0;
  const double sigma2 = 4.0;
  ConstantBackground bg(500.0, sigma2, u_p);
  RngStream rng(44, 0);
  const int particles = 20000;
  const double theta = 5e-4;
  std::vector<std::vector<DiffusiveDeposit>> deposits(particles);
  const double w = 1.0 / particles;
  for (auto& d : deposits) {
    d.push_back({rng.uniform01(), theta, w});
  }
  const int cells = 10;
  const auto r = propagate_initial_density(deposits, bg, cells);
  const double dx = 1.0 / cells;
  // Law of large numbers: each cell approaches the constant-field values
  // with relative statistical error ~ 1/sqrt(I dx) ~ 2%.
  for (int j = 0; j < cells; ++j) {
    CHECK(r.moments.m0[j] ==
          doctest::Approx(theta * dx).epsilon(0.08));
    CHECK(r.moments.m1[j] ==
          doctest::Approx(theta * u_p * dx).epsilon(0.08));
    CHECK(r.moments.m2[j] ==
          doctest::Approx(theta * 0.5 * (u_p * u_p + sigma2) * dx).epsilon(0.08));
  }
}

TEST_CASE("streaming accumulator equals the list-based estimation path") {
  HomogeneousBackground bg(0.1, 30.0);
  RngStream rng(55, 0);
  std::vector<std::vector<DiffusiveDeposit>> deposits(40);
  DepositAccumulator acc(12, DepositionKernel::kNearest,
                         ThetaAverage::kPerParticle);
  for (auto& particle : deposits) {
    acc.begin_particle();
    const int count = static_cast<int>(rng.uniform01() * 4);
    for (int c = 0; c < count; ++c) {
      DiffusiveDeposit d{rng.uniform01(), 1e-3 * (0.2 + rng.uniform01()), 0.025};
      particle.push_back(d);
      acc.add(d);
    }
    acc.end_particle();
  }
  const auto from_list = fluid_estimation(deposits, bg, 12);
  const auto from_stream = fluid_estimation(acc.summary(), bg);
  CHECK(from_list.theta_hat == from_stream.theta_hat);
  for (int j = 0; j < 12; ++j) {
    CHECK(from_list.moments.m0[j] == from_stream.moments.m0[j]);
    CHECK(from_list.moments.m1[j] == from_stream.moments.m1[j]);
    CHECK(from_list.moments.m2[j] == from_stream.moments.m2[j]);
  }
}
