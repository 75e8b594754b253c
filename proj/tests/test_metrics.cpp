// Copyright (c) 2026 the kdmc developers.
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <vector>

#include "kdmc/metrics.hpp"
#include "kdmc/rng.hpp"
#include "test_support.hpp"

using namespace kdmc;

namespace {

EmpiricalDistribution dist_from(std::vector<double> xs) {
  Eigen::ArrayXd arr =
      Eigen::Map<Eigen::ArrayXd>(xs.data(), static_cast<Eigen::Index>(xs.size()));
  return EmpiricalDistribution::from_positions(arr);
}

}  // namespace

TEST_CASE("w1 of identical distributions is zero") {
  auto f = dist_from({0.1, 0.5, 0.9, 0.5});
  CHECK(w1_distance(f, f) == 0.0);
}

TEST_CASE("w1 between diracs is the translation distance") {
  auto f = dist_from({0.0});
  auto g = dist_from({3.0});
  CHECK(w1_distance(f, g) == doctest::Approx(3.0));
}

TEST_CASE("w1 rejects empty inputs") {
  EmpiricalDistribution empty;
  auto f = dist_from({1.0});
  CHECK_THROWS_AS(w1_distance(empty, f), std::invalid_argument);
}

TEST_CASE("w1 equals the sorted-coupling oracle on 100 random instances") {
  RngStream rng(555, 0);
  for (int instance = 0; instance < 100; ++instance) {
    const int n = 10 + static_cast<int>(rng.uniform01() * 9990);
    std::vector<double> xs(n), ys(n);
    for (int i = 0; i < n; ++i) {
      xs[i] = 10.0 * rng.uniform01() - 5.0;
      ys[i] = 8.0 * rng.uniform01() - 3.0;
    }
    const double oracle = kdmc_test::w1_sorted_coupling(xs, ys);
    const double cdf_integral = w1_distance(dist_from(xs), dist_from(ys));
    CHECK(std::abs(oracle - cdf_integral) <= 1e-12 * std::max(1.0, oracle));
  }
}

TEST_CASE("w1 symmetry, triangle inequality and translation") {
  RngStream rng(808, 1);
  for (int instance = 0; instance < 100; ++instance) {
    const int n = 5 + static_cast<int>(rng.uniform01() * 200);
    std::vector<double> xs(n), ys(n), zs(n);
    for (int i = 0; i < n; ++i) {
      xs[i] = rng.standard_normal();
      ys[i] = 0.5 + 1.5 * rng.standard_normal();
      zs[i] = -1.0 + 0.3 * rng.standard_normal();
    }
    auto f = dist_from(xs);
    auto g = dist_from(ys);
    auto h = dist_from(zs);
    const double fg = w1_distance(f, g);
    CHECK(w1_distance(g, f) == fg);
    CHECK(w1_distance(f, h) <= fg + w1_distance(g, h) + 1e-12);

    // Shifting both leaves the distance unchanged; shifting only g moves
    // it by at most |c|.
    const double c = 0.8;
    std::vector<double> xs_c(xs), ys_c(ys);
    for (auto& x : xs_c) x += c;
    for (auto& y : ys_c) y += c;
    CHECK(w1_distance(dist_from(xs_c), dist_from(ys_c)) ==
          doctest::Approx(fg).epsilon(1e-12));
    CHECK(std::abs(w1_distance(f, dist_from(ys_c)) - fg) <= c + 1e-12);
  }

  // Ordered supports: shifting g by c changes the distance by exactly |c|.
  auto f = dist_from({0.0, 1.0});
  auto g = dist_from({5.0, 6.0});
  CHECK(w1_distance(f, g) == doctest::Approx(5.0));
  auto g_shift = dist_from({5.5, 6.5});
  CHECK(w1_distance(f, g_shift) == doctest::Approx(5.5));
}

TEST_CASE("w1 handles weights and reports mass mismatch") {
  EmpiricalDistribution f;
  f.positions = Eigen::ArrayXd(2);
  f.positions << 0.0, 1.0;
  f.weights = Eigen::ArrayXd(2);
  f.weights << 3.0, 1.0;
  // Same distribution expressed with duplicated unweighted samples.
  auto g = dist_from({0.0, 0.0, 0.0, 1.0});
  const auto result = w1_distance_checked(f, g);
  CHECK(result.distance == doctest::Approx(0.0));
  CHECK(result.mass_mismatch == doctest::Approx(0.0));

  EmpiricalDistribution heavier = f;
  heavier.weights *= 2.0;
  CHECK(w1_distance_checked(f, heavier).mass_mismatch > 0.4);
  CHECK(w1_distance(f, heavier) == doctest::Approx(0.0));  // normalized inside
}

TEST_CASE("relative l2 error basics") {
  Eigen::ArrayXd ref(2);
  ref << 3.0, 4.0;
  CHECK(relative_l2_error(ref, ref) == 0.0);
  CHECK(relative_l2_error(ref, 2.0 * ref) == doctest::Approx(1.0));
  Eigen::ArrayXd zero = Eigen::ArrayXd::Zero(2);
  CHECK(relative_l2_error(ref, zero) == doctest::Approx(1.0));
  CHECK_THROWS_AS(relative_l2_error(zero, ref), std::invalid_argument);
}

TEST_CASE("relative l2 error is scale invariant in the reference") {
  Eigen::ArrayXd ref(3);
  ref << 1.0, -2.0, 0.5;
  Eigen::ArrayXd approx(3);
  approx << 1.2, -1.7, 0.4;
  const double base = relative_l2_error(ref, approx);
  for (double c : {2.0, 0.25, 1024.0}) {
    CHECK(relative_l2_error(c * ref, c * approx) ==
          doctest::Approx(base).epsilon(1e-14));
  }
}

TEST_CASE("alpha limits, value at 1, and quadrature oracle") {
  CHECK(alpha(1e-12) == doctest::Approx(1.0));
  CHECK(alpha(1e6) == doctest::Approx(0.0).epsilon(1e-5));
  CHECK(alpha(1.0) == doctest::Approx(1.0 - std::exp(-1.0)));
  for (double z : {0.1, 1.0, 10.0, 100.0}) {
    CHECK(alpha(z) == doctest::Approx(kdmc_test::alpha_by_quadrature(z)).epsilon(1e-8));
  }
}

TEST_CASE("alpha is strictly decreasing over [1e-8, 1e4]") {
  double prev = 2.0;
  for (int i = 0; i <= 120; ++i) {
    const double z = std::pow(10.0, -8.0 + i * 0.1);
    const double a = alpha(z);
    CHECK(a > 0.0);
    CHECK(a <= 1.0);
    CHECK(a < prev);
    prev = a;
  }
}

TEST_CASE("speedup estimate: break-even and plug-in values") {
  OpCounter counter;
  counter.kinetic_steps = 100;
  counter.kdmc_updates = 100;
  // dt = 2/R gives a predicted ratio of exactly 1.
  CHECK(speedup_estimate(counter, 2.0 / 50.0, 50.0).predicted_ratio ==
        doctest::Approx(1.0));
  // Homogeneous eps = 0.1 (R = 100), dt = 0.02.
  CHECK(speedup_estimate(counter, 0.02, 100.0).predicted_ratio ==
        doctest::Approx(1.0));
  counter.kinetic_steps = 300;
  CHECK(speedup_estimate(counter, 0.02, 100.0).measured_ratio ==
        doctest::Approx(3.0));
}
