// Copyright (c) 2026 the kdmc developers.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>

#include "kdmc/background.hpp"
#include "kdmc/rng.hpp"

namespace kdmc {

/// Maxwellian velocity at position x given a standard-normal draw.
inline double maxwellian_from_normal(const Background& bg, double x,
                                     double normal_draw) {
  return bg.mean_velocity(x) + std::sqrt(bg.variance(x)) * normal_draw;
}

/// Velocity drawn from the local drifting Maxwellian M(v|x), a normal
/// distribution with mean u_p(x) and variance sigma_p^2(x).
inline double sample_maxwellian(RngStream& s, const Background& bg, double x) {
  return maxwellian_from_normal(bg, x, s.standard_normal());
}

/// Initial test-case density rho(x,0) = 1 + sin(2 pi x)/(2 pi) on [0,1).
inline double initial_density(double x) {
  constexpr double two_pi = 6.283185307179586476925286766559;
  return 1.0 + std::sin(two_pi * x) / two_pi;
}

/// CDF of the initial density: F(x) = x + (1 - cos(2 pi x)) / (4 pi^2).
inline double initial_density_cdf(double x) {
  constexpr double two_pi = 6.283185307179586476925286766559;
  return x + (1.0 - std::cos(two_pi * x)) / (two_pi * two_pi);
}

/// Inverse CDF of the initial density, solved with Newton iterations and a
/// bisection fallback. The residual |F(x) - u| is driven below 1e-13; the
/// density is bounded away from zero so Newton converges quadratically.
inline double initial_position_from_uniform(double u) {
  double lo = 0.0;
  double hi = 1.0;
  double x = u;  // F(x) ~ x, good starting point
  for (int iter = 0; iter < 64; ++iter) {
    const double residual = initial_density_cdf(x) - u;
    if (std::abs(residual) <= 1e-14) {
      break;
    }
    if (residual > 0.0) {
      hi = x;
    } else {
      lo = x;
    }
    double next = x - residual / initial_density(x);
    if (!(next > lo) || !(next < hi)) {
      next = 0.5 * (lo + hi);
    }
    x = next;
  }
  return x < 0.0 ? 0.0 : (x >= 1.0 ? std::nextafter(1.0, 0.0) : x);
}

/// Initial position x0 in [0,1) with density 1 + sin(2 pi x)/(2 pi).
inline double sample_initial_position(RngStream& s) {
  return initial_position_from_uniform(s.uniform01());
}

}  // namespace kdmc
