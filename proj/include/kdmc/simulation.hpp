// Copyright (c) 2026 the kdmc developers.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "kdmc/background.hpp"
#include "kdmc/fluid.hpp"
#include "kdmc/metrics.hpp"
#include "kdmc/moments.hpp"
#include "kdmc/particle.hpp"

namespace kdmc {

enum class Method {
  kKinetic,        // exponential flights until the final time
  kDiffusive,      // Euler-Maruyama steps of size dt
  kKdmc,           // hybrid: truncated flight + diffusive remainder
  kKdmcMimicked,   // hybrid with the diffusive remainder replaced by
                   // unscored kinetic motion (error-isolation runs)
};

enum class Domain { kUnbounded, kPeriodicUnit };

enum class InitialCondition {
  kPointAtOrigin,   // x0 = 0, v0 ~ M(v|0)
  kDensityProfile,  // x0 ~ 1 + sin(2 pi x)/(2 pi), v0 ~ M(v|x0)
};

enum class ScoringMode { kTerminalTime, kTimeIntegrated };

/// Which kinetic flights feed the track-length estimator. Per time step of
/// a fixed-dt method, the "first" flight is the kinetic part and the rest
/// is mimicked diffusive motion.
enum class FlightFilter { kAll, kFirstPerStep, kAllButFirst };

struct RunConfig {
  Method method = Method::kKinetic;
  Domain domain = Domain::kPeriodicUnit;
  InitialCondition init = InitialCondition::kDensityProfile;
  ScoringMode scoring = ScoringMode::kTimeIntegrated;
  FlightFilter filter = FlightFilter::kAll;
  bool start_cell_estimator = false;

  std::uint64_t particle_count = 0;  // I
  int step_count = 1;                // K; dt = t_final / K
  double t_final = 0.0;
  int cell_count = 0;                // J; 0 disables moment scoring
  std::uint64_t seed = 1;
  int threads = 0;  // 0 => default_thread_count()
  double total_mass = 1.0;

  bool collect_terminal_positions = false;
  bool collect_klimontovich = false;
  bool collect_deposits = false;
  bool dump_events = false;
  DepositionKernel deposition = DepositionKernel::kNearest;
  ThetaAverage theta_average = ThetaAverage::kPerParticle;
};

struct EventRow {
  std::uint64_t particle = 0;
  int step = 0;
  EventKind kind = EventKind::kKineticFlight;
  double x_start = 0, v_start = 0, x_end = 0, v_end = 0, duration = 0;
};

struct RunResult {
  double dt = 0.0;
  double weight_sum = 0.0;
  OpCounter ops;
  MomentTable moments;                   // empty arrays when scoring disabled
  DepositSummary deposits;               // empty when not collected
  Eigen::ArrayXd terminal_positions;     // size I when collected
  Eigen::ArrayXd initial_positions;      // klimontovich: x^0 states
  Eigen::ArrayXd snapshot_positions;     // klimontovich: x^k, k = 1..K
  Eigen::ArrayXd postflight_positions;   // klimontovich: x^k', k = 0..K-1
  std::vector<EventRow> events;          // dump_events only
  double sim_seconds = 0.0;
};

/// Number of worker threads: KDMC_THREADS env var if set, otherwise the
/// hardware concurrency (at least 1).
int default_thread_count();

/// Runs I independent particles of the configured method, scoring flights
/// through the track-length estimator and collecting deposits/positions as
/// requested. Particles own RNG streams keyed by (seed, particle index),
/// and accumulators merge in fixed chunk order, so results are
/// bit-identical for a fixed seed regardless of the worker count.
RunResult run_simulation(const RunConfig& cfg, const Background& bg);

}  // namespace kdmc
