// Copyright (c) 2026 the kdmc developers.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "kdmc/background.hpp"
#include "kdmc/fluid.hpp"
#include "kdmc/metrics.hpp"
#include "kdmc/simulation.hpp"

namespace kdmc {

/// Full description of one convergence experiment. Lists with a single
/// entry pin the parameter; lists with several entries are swept.
struct ExperimentConfig {
  std::string kind;  // local-sim-error | global-sim-error | kinetic-part |
                     // time-evolution-error | diffusive-part |
                     // total-estimation | fusion-case | cost-study |
                     // appendix-a-modes | run
  std::string background = "homogeneous";
  double mean_velocity = 30.0;
  std::vector<double> epsilons;
  std::vector<int> step_counts;                 // K values; dt = t_final/K
  std::vector<std::uint64_t> particle_sweep;    // I sweep (time evolution)
  std::uint64_t particles = 100000;
  int cells = 100;
  double t_final = 0.0275;
  std::uint64_t seed = 1;
  int threads = 0;
  int replicates = 30;  // appendix-a-modes
  std::string scoring = "time-integrated";
  std::string method = "kdmc";  // kind = run only
  std::string estimator = "track-length";
  std::string deposition = "nearest";
  std::string theta_average = "per-particle";
  double cfl_safety = 0.9;
  std::string out_dir = "out";
  bool dump_events = false;
};

/// Deterministically derives the RNG seed of one run from the master seed,
/// the run's role (approximation, reference, floor reference) and a sweep
/// index, so reference and approximation runs never share streams.
std::uint64_t derive_seed(std::uint64_t master, const std::string& role,
                          std::uint64_t index);

std::unique_ptr<Background> make_background(const ExperimentConfig& cfg,
                                            double epsilon);

struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;  // in log space: log(err) = intercept + slope*log(x)
  double std_error = 0.0;
  int points = 0;
  double window_lo = 0.0;
  double window_hi = 0.0;
  bool valid = false;
};

/// Least-squares slope of log(error) vs log(sweep) over the points inside
/// [window_lo, window_hi] whose admissible flag is set. Requires at least
/// three points.
SlopeFit fit_loglog_slope(const Eigen::ArrayXd& sweep,
                          const Eigen::ArrayXd& error,
                          const Eigen::Array<bool, Eigen::Dynamic, 1>& admissible,
                          double window_lo, double window_hi);

struct Series {
  std::string name;  // "w1" or "m0"/"m1"/"m2"
  Eigen::ArrayXd error;
  Eigen::ArrayXd noise_floor;

  /// A point is admissible for slope fits when it sits at least three
  /// noise floors above zero.
  Eigen::Array<bool, Eigen::Dynamic, 1> admissible() const {
    return error >= 3.0 * noise_floor;
  }
};

struct ErrorCurve {
  std::string name;
  std::string sweep_name;  // "epsilon" | "dt" | "I"
  Eigen::ArrayXd sweep;
  std::vector<Series> series;

  const Series* find(const std::string& series_name) const {
    for (const auto& s : series)
      if (s.name == series_name) return &s;
    return nullptr;
  }
};

struct SlopeRow {
  std::string curve;
  std::string series;
  SlopeFit fit;
};

struct CostRow {
  int step_count = 0;
  double sim_seconds = 0.0;
  double est_seconds = 0.0;
  double speedup = 0.0;
  double predicted_ratio = 0.0;
  double measured_ratio = 0.0;
};

struct AppendixAResult {
  Eigen::ArrayXd terminal_variance;       // per cell
  Eigen::ArrayXd time_integrated_variance;
  double fraction_lower_variance = 0.0;   // cells where time-integrated wins
  double fraction_means_within_3se = 0.0;
  double terminal_scoring_seconds = 0.0;
  double integrated_scoring_seconds = 0.0;
};

struct ExperimentResult {
  std::vector<ErrorCurve> curves;
  std::vector<SlopeRow> slopes;
  std::vector<CostRow> cost;
  std::optional<AppendixAResult> appendix_a;
  std::vector<std::string> notes;
  /// Sweep-variable location markers (e.g. dt = eps^2 or mean(1/R)).
  std::map<std::string, double> markers;
};

class ReferenceCache;  // io.hpp

struct ExperimentContext {
  ReferenceCache* cache = nullptr;
};

ExperimentResult run_local_sim_error(const ExperimentConfig& cfg,
                                     ExperimentContext ctx = {});
ExperimentResult run_global_sim_error(const ExperimentConfig& cfg,
                                      ExperimentContext ctx = {});
ExperimentResult run_kinetic_part(const ExperimentConfig& cfg,
                                  ExperimentContext ctx = {});
ExperimentResult run_time_evolution_error(const ExperimentConfig& cfg,
                                          ExperimentContext ctx = {});
ExperimentResult run_diffusive_part(const ExperimentConfig& cfg,
                                    ExperimentContext ctx = {});
ExperimentResult run_total_estimation(const ExperimentConfig& cfg,
                                      ExperimentContext ctx = {});
ExperimentResult run_fusion_case(const ExperimentConfig& cfg,
                                 ExperimentContext ctx = {});
ExperimentResult run_cost_study(const ExperimentConfig& cfg,
                                ExperimentContext ctx = {});
ExperimentResult run_appendix_a_modes(const ExperimentConfig& cfg,
                                      ExperimentContext ctx = {});

/// Dispatches on cfg.kind.
ExperimentResult run_experiment(const ExperimentConfig& cfg,
                                ExperimentContext ctx = {});

}  // namespace kdmc
