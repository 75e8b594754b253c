// Copyright (c) 2026 the kdmc developers.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

namespace kdmc {

/// Weighted sample set of positions. Weights need not sum to one;
/// w1_distance normalizes internally without mutating its inputs.
struct EmpiricalDistribution {
  Eigen::ArrayXd positions;
  Eigen::ArrayXd weights;  // empty => unit weights

  static EmpiricalDistribution from_positions(Eigen::ArrayXd x) {
    return {std::move(x), Eigen::ArrayXd()};
  }

  double total_weight() const {
    if (weights.size() == 0) return static_cast<double>(positions.size());
    return weights.sum();
  }
};

struct W1Result {
  double distance = 0.0;
  /// Relative raw-mass mismatch between the two inputs; mass conservation
  /// should keep this at round-off, anything beyond 1e-9 is suspicious.
  double mass_mismatch = 0.0;
};

/// 1-Wasserstein distance between two weighted empirical distributions on
/// the line, computed as the exact integral of |F - G| over the pooled
/// sorted support (both CDFs are piecewise constant).
W1Result w1_distance_checked(const EmpiricalDistribution& f,
                             const EmpiricalDistribution& g);

inline double w1_distance(const EmpiricalDistribution& f,
                          const EmpiricalDistribution& g) {
  return w1_distance_checked(f, g).distance;
}

/// Relative L2 error ||ref - approx||_2 / ||ref||_2 over cells.
double relative_l2_error(const Eigen::ArrayXd& ref,
                         const Eigen::ArrayXd& approx);

/// Expected fraction of a time step of size dt spent in kinetic motion:
/// alpha = (1 - exp(-R dt)) / (R dt). A series expansion is used for small
/// arguments to avoid cancellation; the limit value for R dt -> 0 is 1.
double alpha(double rate_dt);

/// Exact event tallies for the cost model: one unit operation per kinetic
/// position update, and for KDMC two updates per collided step, one per
/// uncollided step.
struct OpCounter {
  std::uint64_t kinetic_steps = 0;   // C_k
  std::uint64_t kdmc_updates = 0;    // C_kd

  OpCounter& operator+=(const OpCounter& other) {
    kinetic_steps += other.kinetic_steps;
    kdmc_updates += other.kdmc_updates;
    return *this;
  }
};

struct SpeedupEstimate {
  double measured_ratio = 0.0;   // C_k / C_kd from event tallies
  double predicted_ratio = 0.0;  // dt * R_mean / 2
};

/// Measured operation ratio C_k/C_kd next to the model prediction
/// dt * R_mean / 2 for a pair of completed runs.
SpeedupEstimate speedup_estimate(const OpCounter& counter, double dt,
                                 double mean_rate);

}  // namespace kdmc
