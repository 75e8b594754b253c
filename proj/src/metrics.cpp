// Copyright (c) 2026 the kdmc developers.
// SPDX-License-Identifier: Apache-2.0

#include "kdmc/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace kdmc {

namespace {

struct SupportPoint {
  double x;
  double weight_f;
  double weight_g;
};

}  // namespace

W1Result w1_distance_checked(const EmpiricalDistribution& f,
                             const EmpiricalDistribution& g) {
  const auto nf = f.positions.size();
  const auto ng = g.positions.size();
  if (nf == 0 || ng == 0) {
    throw std::invalid_argument("w1_distance: empty distribution");
  }
  const double mass_f = f.total_weight();
  const double mass_g = g.total_weight();
  if (!(mass_f > 0.0) || !(mass_g > 0.0)) {
    throw std::invalid_argument("w1_distance: nonpositive total weight");
  }

  std::vector<SupportPoint> support;
  support.reserve(static_cast<std::size_t>(nf + ng));
  for (Eigen::Index i = 0; i < nf; ++i) {
    const double w = f.weights.size() ? f.weights[i] : 1.0;
    support.push_back({f.positions[i], w / mass_f, 0.0});
  }
  for (Eigen::Index i = 0; i < ng; ++i) {
    const double w = g.weights.size() ? g.weights[i] : 1.0;
    support.push_back({g.positions[i], 0.0, w / mass_g});
  }
  std::sort(support.begin(), support.end(),
            [](const SupportPoint& a, const SupportPoint& b) { return a.x < b.x; });

  double distance = 0.0;
  double cdf_f = 0.0;
  double cdf_g = 0.0;
  double prev_x = support.front().x;
  for (const SupportPoint& p : support) {
    distance += std::abs(cdf_f - cdf_g) * (p.x - prev_x);
    cdf_f += p.weight_f;
    cdf_g += p.weight_g;
    prev_x = p.x;
  }

  W1Result result;
  result.distance = distance;
  result.mass_mismatch =
      std::abs(mass_f - mass_g) / std::max(std::abs(mass_f), std::abs(mass_g));
  return result;
}

double relative_l2_error(const Eigen::ArrayXd& ref,
                         const Eigen::ArrayXd& approx) {
  if (ref.size() != approx.size()) {
    throw std::invalid_argument("relative_l2_error: size mismatch");
  }
  const double ref_norm = ref.matrix().norm();
  if (!(ref_norm > 0.0)) {
    throw std::invalid_argument("relative_l2_error: zero reference norm");
  }
  return (ref - approx).matrix().norm() / ref_norm;
}

double alpha(double rate_dt) {
  if (!(rate_dt > 0.0)) {
    return 1.0;  // limit value as R dt -> 0
  }
  if (rate_dt < 1e-6) {
    // 1 - z/2 + z^2/6 - z^3/24, accurate to ~1e-26 here
    return 1.0 - rate_dt / 2.0 + rate_dt * rate_dt / 6.0 -
           rate_dt * rate_dt * rate_dt / 24.0;
  }
  return (1.0 - std::exp(-rate_dt)) / rate_dt;
}

SpeedupEstimate speedup_estimate(const OpCounter& counter, double dt,
                                 double mean_rate) {
  SpeedupEstimate est;
  est.predicted_ratio = dt * mean_rate / 2.0;
  est.measured_ratio =
      counter.kdmc_updates > 0
          ? static_cast<double>(counter.kinetic_steps) /
                static_cast<double>(counter.kdmc_updates)
          : 0.0;
  return est;
}

}  // namespace kdmc
