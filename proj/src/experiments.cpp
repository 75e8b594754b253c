// Copyright (c) 2026 the kdmc developers.
// SPDX-License-Identifier: Apache-2.0

#include "kdmc/experiments.hpp"

#include <chrono>
#include <cmath>
#include <memory>
#include <sstream>

#include "kdmc/config.hpp"
#include "kdmc/errors.hpp"
#include "kdmc/io.hpp"
#include "kdmc/metrics.hpp"

namespace kdmc {

namespace {

constexpr const char* kMomentNames[3] = {"m0", "m1", "m2"};

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

double elapsed_seconds(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                       start)
      .count();
}

std::array<double, 3> moment_errors(const MomentTable& ref,
                                    const MomentTable& approx) {
  return {relative_l2_error(ref.m0, approx.m0),
          relative_l2_error(ref.m1, approx.m1),
          relative_l2_error(ref.m2, approx.m2)};
}

FluidOptions fluid_options(const ExperimentConfig& cfg) {
  FluidOptions fo;
  fo.cfl_safety = cfg.cfl_safety;
  fo.deposition = to_deposition(cfg.deposition);
  fo.theta_average = to_theta_average(cfg.theta_average);
  return fo;
}

/// Kinetic part (track-length grid) plus fluid-estimated diffusive part.
MomentTable kdmc_total_moments(const RunResult& run, const Background& bg,
                               const FluidOptions& fo,
                               double* est_seconds = nullptr) {
  const auto start = std::chrono::steady_clock::now();
  const FluidEstimationResult fe = fluid_estimation(run.deposits, bg, fo);
  if (est_seconds != nullptr) *est_seconds = elapsed_seconds(start);
  MomentTable total = run.moments;
  total += fe.moments;
  return total;
}

std::string cache_key(const ExperimentConfig& cfg, double eps, double t_run,
                      int cells, std::uint64_t seed, const char* what) {
  std::ostringstream key;
  key << what << "|bg=" << cfg.background << "|up="
      << format_double(cfg.mean_velocity) << "|eps=" << format_double(eps)
      << "|I=" << cfg.particles << "|J=" << cells
      << "|T=" << format_double(t_run) << "|est=" << cfg.estimator
      << "|seed=" << seed;
  return key.str();
}

/// Kinetic reference positions at time t_run in the unbounded domain,
/// reused across sweeps through the content-addressed cache.
Eigen::ArrayXd kinetic_reference_positions(const ExperimentConfig& cfg,
                                           ExperimentContext& ctx,
                                           const Background& bg, double eps,
                                           double t_run, std::uint64_t seed) {
  const std::string key = cache_key(cfg, eps, t_run, 0, seed, "positions");
  if (ctx.cache != nullptr) {
    if (auto hit = ctx.cache->get_positions(key)) return *hit;
  }
  RunConfig rc;
  rc.method = Method::kKinetic;
  rc.domain = Domain::kUnbounded;
  rc.init = InitialCondition::kPointAtOrigin;
  rc.scoring = ScoringMode::kTerminalTime;
  rc.particle_count = cfg.particles;
  rc.step_count = 1;
  rc.t_final = t_run;
  rc.cell_count = 0;
  rc.seed = seed;
  rc.threads = cfg.threads;
  rc.collect_terminal_positions = true;
  const RunResult run = run_simulation(rc, bg);
  if (ctx.cache != nullptr) ctx.cache->put_positions(key, run.terminal_positions);
  return run.terminal_positions;
}

/// Kinetic reference moments on the periodic estimation domain.
MomentTable kinetic_reference_moments(const ExperimentConfig& cfg,
                                      ExperimentContext& ctx,
                                      const Background& bg, double eps,
                                      std::uint64_t seed) {
  const std::string key =
      cache_key(cfg, eps, cfg.t_final, cfg.cells, seed, "moments");
  if (ctx.cache != nullptr) {
    if (auto hit = ctx.cache->get_moments(key)) return *hit;
  }
  RunConfig rc;
  rc.method = Method::kKinetic;
  rc.domain = Domain::kPeriodicUnit;
  rc.init = InitialCondition::kDensityProfile;
  rc.scoring = ScoringMode::kTimeIntegrated;
  rc.particle_count = cfg.particles;
  rc.step_count = 1;
  rc.t_final = cfg.t_final;
  rc.cell_count = cfg.cells;
  rc.seed = seed;
  rc.threads = cfg.threads;
  rc.start_cell_estimator = cfg.estimator == "start-cell";
  const RunResult run = run_simulation(rc, bg);
  if (ctx.cache != nullptr) ctx.cache->put_moments(key, run.moments);
  return run.moments;
}

struct SweepAxis {
  std::string name;          // "epsilon" or "dt"
  Eigen::ArrayXd values;     // plotted sweep values
  std::vector<double> eps;   // per-point epsilon
  std::vector<int> steps;    // per-point K
};

/// Either an epsilon sweep (fixed K) or a dt sweep (fixed epsilon). A
/// configuration with several values on both axes is rejected.
SweepAxis make_axis(const ExperimentConfig& cfg) {
  const bool eps_sweep = cfg.epsilons.size() > 1;
  const bool dt_sweep = cfg.step_counts.size() > 1;
  if (eps_sweep && dt_sweep) {
    throw ConfigError(cfg.kind + ": sweep either epsilon or K, not both");
  }
  SweepAxis axis;
  const std::size_t n = eps_sweep ? cfg.epsilons.size() : cfg.step_counts.size();
  axis.name = eps_sweep ? "epsilon" : "dt";
  axis.values.resize(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const double eps = eps_sweep ? cfg.epsilons[i] : cfg.epsilons.at(0);
    const int k = eps_sweep ? cfg.step_counts.at(0) : cfg.step_counts[i];
    axis.eps.push_back(eps);
    axis.steps.push_back(k);
    axis.values[static_cast<Eigen::Index>(i)] =
        eps_sweep ? eps : cfg.t_final / k;
  }
  return axis;
}

Series make_series(const std::string& name, Eigen::Index n) {
  return {name, Eigen::ArrayXd::Zero(n), Eigen::ArrayXd::Zero(n)};
}

/// Simulation-error experiment shared by the local and global variants:
/// kinetic vs KDMC from identical initial ensembles (all particles at the
/// origin), compared in W1 over terminal positions, with the statistical
/// floor taken from two independent kinetic runs.
ExperimentResult sim_error_experiment(const ExperimentConfig& cfg,
                                      ExperimentContext ctx, bool local) {
  const SweepAxis axis = make_axis(cfg);
  const Eigen::Index n = axis.values.size();
  ErrorCurve curve;
  curve.name = std::string(local ? "local" : "global") + "_sim_error_vs_" +
               axis.name;
  curve.sweep_name = axis.name;
  curve.sweep = axis.values;
  Series w1 = make_series("w1", n);

  for (Eigen::Index i = 0; i < n; ++i) {
    const double eps = axis.eps[static_cast<std::size_t>(i)];
    const int k = axis.steps[static_cast<std::size_t>(i)];
    const double dt = cfg.t_final / k;
    const double t_run = local ? dt : cfg.t_final;
    const int kdmc_steps = local ? 1 : k;
    const auto bg = make_background(cfg, eps);

    const auto ref_a = kinetic_reference_positions(
        cfg, ctx, *bg, eps, t_run,
        derive_seed(cfg.seed, "sim-ref-a", static_cast<std::uint64_t>(i)));
    const auto ref_b = kinetic_reference_positions(
        cfg, ctx, *bg, eps, t_run,
        derive_seed(cfg.seed, "sim-ref-b", static_cast<std::uint64_t>(i)));

    RunConfig rc;
    rc.method = Method::kKdmc;
    rc.domain = Domain::kUnbounded;
    rc.init = InitialCondition::kPointAtOrigin;
    rc.scoring = ScoringMode::kTerminalTime;
    rc.particle_count = cfg.particles;
    rc.step_count = kdmc_steps;
    rc.t_final = t_run;
    rc.seed = derive_seed(cfg.seed, "sim-approx", static_cast<std::uint64_t>(i));
    rc.threads = cfg.threads;
    rc.collect_terminal_positions = true;
    const RunResult approx = run_simulation(rc, *bg);

    const auto dist_f = EmpiricalDistribution::from_positions(ref_a);
    const auto dist_g =
        EmpiricalDistribution::from_positions(approx.terminal_positions);
    const auto dist_b = EmpiricalDistribution::from_positions(ref_b);
    w1.error[i] = w1_distance(dist_f, dist_g);
    w1.noise_floor[i] = w1_distance(dist_f, dist_b);
  }

  ExperimentResult result;
  curve.series.push_back(w1);

  SlopeRow row;
  row.curve = curve.name;
  row.series = "w1";
  row.fit = fit_loglog_slope(curve.sweep, w1.error, w1.admissible(),
                             curve.sweep.minCoeff(), curve.sweep.maxCoeff());
  result.slopes.push_back(row);

  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(w1.error[i] >= 3.0 * w1.noise_floor[i])) {
      std::ostringstream note;
      note << curve.name << ": point " << format_double(curve.sweep[i])
           << " below 3x noise floor, excluded from fits";
      result.notes.push_back(note.str());
    }
  }

  if (!local) {
    Eigen::Index argmax = 0;
    w1.error.maxCoeff(&argmax);
    result.markers["argmax_" + axis.name] = curve.sweep[argmax];
    if (axis.name == "epsilon") {
      result.markers["expected_peak_epsilon"] =
          std::sqrt(cfg.t_final / cfg.step_counts.at(0));
    } else {
      result.markers["expected_peak_dt"] =
          cfg.epsilons.at(0) * cfg.epsilons.at(0);
    }
  }
  result.curves.push_back(std::move(curve));
  return result;
}

/// Two-branch slope fits around the dt = eps^2 transition, with windows
/// pinned a factor 3 away from the transition on each side.
void branch_fits(ExperimentResult& result, const ErrorCurve& curve,
                 double transition, bool high_branch_is_large_sweep) {
  for (const Series& s : curve.series) {
    SlopeRow high;
    high.curve = curve.name;
    high.series = s.name + (high_branch_is_large_sweep ? "/above" : "/below");
    high.fit = fit_loglog_slope(curve.sweep, s.error, s.admissible(),
                                3.0 * transition, 1e300);
    result.slopes.push_back(high);

    SlopeRow low;
    low.curve = curve.name;
    low.series = s.name + (high_branch_is_large_sweep ? "/below" : "/above");
    low.fit = fit_loglog_slope(curve.sweep, s.error, s.admissible(), 0.0,
                               transition / 3.0);
    result.slopes.push_back(low);
  }
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t master, const std::string& role,
                          std::uint64_t index) {
  std::uint64_t z =
      master ^ (fnv1a(role) + 0x9e3779b97f4a7c15ULL * (index + 1));
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::unique_ptr<Background> make_background(const ExperimentConfig& cfg,
                                            double epsilon) {
  if (cfg.background == "fusion") {
    return std::make_unique<FusionBackground>(epsilon);
  }
  return std::make_unique<HomogeneousBackground>(epsilon, cfg.mean_velocity);
}

SlopeFit fit_loglog_slope(
    const Eigen::ArrayXd& sweep, const Eigen::ArrayXd& error,
    const Eigen::Array<bool, Eigen::Dynamic, 1>& admissible, double window_lo,
    double window_hi) {
  std::vector<double> xs;
  std::vector<double> ys;
  for (Eigen::Index i = 0; i < sweep.size(); ++i) {
    if (!admissible[i]) continue;
    if (sweep[i] < window_lo || sweep[i] > window_hi) continue;
    if (!(sweep[i] > 0.0) || !(error[i] > 0.0)) continue;
    xs.push_back(std::log(sweep[i]));
    ys.push_back(std::log(error[i]));
  }

  SlopeFit fit;
  fit.window_lo = window_lo;
  fit.window_hi = window_hi;
  fit.points = static_cast<int>(xs.size());
  if (fit.points < 3) {
    return fit;
  }
  const auto n = static_cast<double>(xs.size());
  double sx = 0, sy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += ys[i];
  }
  const double mx = sx / n;
  const double my = sy / n;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = xs[i] - mx;
    const double dy = ys[i] - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  if (!(sxx > 0.0)) {
    return fit;
  }
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ssr = syy - fit.slope * sxy;
  if (ssr < 0.0) ssr = 0.0;
  fit.std_error =
      fit.points > 2 ? std::sqrt(ssr / (n - 2.0) / sxx) : 0.0;
  fit.valid = true;
  return fit;
}

ExperimentResult run_local_sim_error(const ExperimentConfig& cfg,
                                     ExperimentContext ctx) {
  return sim_error_experiment(cfg, ctx, /*local=*/true);
}

ExperimentResult run_global_sim_error(const ExperimentConfig& cfg,
                                      ExperimentContext ctx) {
  return sim_error_experiment(cfg, ctx, /*local=*/false);
}

ExperimentResult run_kinetic_part(const ExperimentConfig& cfg,
                                  ExperimentContext /*ctx*/) {
  const SweepAxis axis = make_axis(cfg);
  const Eigen::Index n = axis.values.size();
  ErrorCurve curve;
  curve.name = "kinetic_part_error_vs_" + axis.name;
  curve.sweep_name = axis.name;
  curve.sweep = axis.values;
  for (int l = 0; l < 3; ++l) curve.series.push_back(make_series(kMomentNames[l], n));

  for (Eigen::Index i = 0; i < n; ++i) {
    const auto bg = make_background(cfg, axis.eps[static_cast<std::size_t>(i)]);
    RunConfig rc;
    rc.method = Method::kKdmcMimicked;
    rc.domain = Domain::kPeriodicUnit;
    rc.init = InitialCondition::kDensityProfile;
    rc.scoring = ScoringMode::kTimeIntegrated;
    rc.filter = FlightFilter::kFirstPerStep;
    rc.particle_count = cfg.particles;
    rc.step_count = axis.steps[static_cast<std::size_t>(i)];
    rc.t_final = cfg.t_final;
    rc.cell_count = cfg.cells;
    rc.threads = cfg.threads;
    rc.start_cell_estimator = cfg.estimator == "start-cell";

    rc.seed = derive_seed(cfg.seed, "kpart-approx", static_cast<std::uint64_t>(i));
    const MomentTable approx = run_simulation(rc, *bg).moments;
    rc.seed = derive_seed(cfg.seed, "kpart-ref", static_cast<std::uint64_t>(i));
    const MomentTable ref = run_simulation(rc, *bg).moments;

    const auto err = moment_errors(ref, approx);
    for (int l = 0; l < 3; ++l) curve.series[l].error[i] = err[l];
    // The measured quantity is itself the statistical error of the kinetic
    // part; the noise-floor column is zero by construction.
  }

  ExperimentResult result;
  const double eps0 = cfg.epsilons.at(0);
  const double transition =
      axis.name == "dt" ? eps0 * eps0 : std::sqrt(cfg.t_final / cfg.step_counts.at(0));
  result.markers[axis.name == "dt" ? "dt_eq_eps_sq" : "eps_eq_sqrt_dt"] =
      transition;
  branch_fits(result, curve, transition, true);
  result.notes.push_back(
      "kinetic-part error is purely statistical; noise floor column is zero");
  result.curves.push_back(std::move(curve));
  return result;
}

ExperimentResult run_time_evolution_error(const ExperimentConfig& cfg,
                                          ExperimentContext /*ctx*/) {
  const bool i_sweep = !cfg.particle_sweep.empty();
  const double eps = cfg.epsilons.at(0);
  const auto bg = make_background(cfg, eps);
  const FluidOptions fo = fluid_options(cfg);

  Eigen::Index n = i_sweep ? static_cast<Eigen::Index>(cfg.particle_sweep.size())
                           : static_cast<Eigen::Index>(cfg.step_counts.size());
  ErrorCurve curve;
  curve.name = std::string("time_evolution_error_vs_") + (i_sweep ? "I" : "dt");
  curve.sweep_name = i_sweep ? "I" : "dt";
  curve.sweep.resize(n);
  for (int l = 0; l < 3; ++l) curve.series.push_back(make_series(kMomentNames[l], n));

  for (Eigen::Index i = 0; i < n; ++i) {
    const int k = i_sweep ? cfg.step_counts.at(0)
                          : cfg.step_counts[static_cast<std::size_t>(i)];
    const std::uint64_t particles =
        i_sweep ? cfg.particle_sweep[static_cast<std::size_t>(i)] : cfg.particles;
    curve.sweep[i] = i_sweep ? static_cast<double>(particles) : cfg.t_final / k;

    RunConfig rc;
    rc.method = Method::kKdmcMimicked;
    rc.domain = Domain::kPeriodicUnit;
    rc.init = InitialCondition::kDensityProfile;
    rc.particle_count = particles;
    rc.step_count = k;
    rc.t_final = cfg.t_final;
    rc.cell_count = cfg.cells;
    rc.threads = cfg.threads;
    rc.start_cell_estimator = cfg.estimator == "start-cell";
    rc.deposition = fo.deposition;
    rc.theta_average = fo.theta_average;

    // Approximation: synthetic deposits through the fluid estimation; the
    // trajectories stay fully kinetic, so no simulation bias propagates.
    rc.scoring = ScoringMode::kTerminalTime;
    rc.collect_deposits = true;
    rc.seed = derive_seed(cfg.seed, "tevol-approx", static_cast<std::uint64_t>(i));
    const RunResult approx_run = run_simulation(rc, *bg);
    const FluidEstimationResult approx = fluid_estimation(approx_run.deposits, *bg, fo);

    // Reference: the mimicked diffusive part scored kinetically.
    rc.scoring = ScoringMode::kTimeIntegrated;
    rc.collect_deposits = false;
    rc.filter = FlightFilter::kAllButFirst;
    rc.seed = derive_seed(cfg.seed, "tevol-ref", static_cast<std::uint64_t>(i));
    const MomentTable ref = run_simulation(rc, *bg).moments;

    const auto err = moment_errors(ref, approx.moments);
    for (int l = 0; l < 3; ++l) curve.series[l].error[i] = err[l];
  }

  ExperimentResult result;
  for (const Series& s : curve.series) {
    SlopeRow row;
    row.curve = curve.name;
    row.series = s.name;
    row.fit = fit_loglog_slope(curve.sweep, s.error, s.admissible(),
                               curve.sweep.minCoeff(), curve.sweep.maxCoeff());
    result.slopes.push_back(row);
  }
  result.notes.push_back(
      "time-evolution error is purely statistical; noise floor column is zero");
  result.curves.push_back(std::move(curve));
  return result;
}

ExperimentResult run_diffusive_part(const ExperimentConfig& cfg,
                                    ExperimentContext /*ctx*/) {
  const SweepAxis axis = make_axis(cfg);
  const Eigen::Index n = axis.values.size();
  const FluidOptions fo = fluid_options(cfg);
  ErrorCurve curve;
  curve.name = "diffusive_part_error_vs_" + axis.name;
  curve.sweep_name = axis.name;
  curve.sweep = axis.values;
  for (int l = 0; l < 3; ++l) curve.series.push_back(make_series(kMomentNames[l], n));

  for (Eigen::Index i = 0; i < n; ++i) {
    const auto bg = make_background(cfg, axis.eps[static_cast<std::size_t>(i)]);
    const int k = axis.steps[static_cast<std::size_t>(i)];

    // Approximation: real KDMC without scoring the kinetic part; only the
    // fluid estimation contributes.
    RunConfig rc;
    rc.domain = Domain::kPeriodicUnit;
    rc.init = InitialCondition::kDensityProfile;
    rc.particle_count = cfg.particles;
    rc.step_count = k;
    rc.t_final = cfg.t_final;
    rc.cell_count = cfg.cells;
    rc.threads = cfg.threads;
    rc.start_cell_estimator = cfg.estimator == "start-cell";
    rc.deposition = fo.deposition;
    rc.theta_average = fo.theta_average;

    rc.method = Method::kKdmc;
    rc.scoring = ScoringMode::kTerminalTime;
    rc.collect_deposits = true;
    rc.seed = derive_seed(cfg.seed, "dpart-approx", static_cast<std::uint64_t>(i));
    const RunResult approx_run = run_simulation(rc, *bg);
    const FluidEstimationResult approx =
        fluid_estimation(approx_run.deposits, *bg, fo);

    // Reference: kinetic method with the fixed time step, first flight per
    // step unscored.
    rc.method = Method::kKdmcMimicked;
    rc.scoring = ScoringMode::kTimeIntegrated;
    rc.collect_deposits = false;
    rc.filter = FlightFilter::kAllButFirst;
    rc.seed = derive_seed(cfg.seed, "dpart-ref-a", static_cast<std::uint64_t>(i));
    const MomentTable ref_a = run_simulation(rc, *bg).moments;
    rc.seed = derive_seed(cfg.seed, "dpart-ref-b", static_cast<std::uint64_t>(i));
    const MomentTable ref_b = run_simulation(rc, *bg).moments;

    const auto err = moment_errors(ref_a, approx.moments);
    const auto floor = moment_errors(ref_a, ref_b);
    for (int l = 0; l < 3; ++l) {
      curve.series[l].error[i] = err[l];
      curve.series[l].noise_floor[i] = floor[l];
    }
  }

  ExperimentResult result;
  const double eps0 = cfg.epsilons.at(0);
  const double transition =
      axis.name == "dt" ? eps0 * eps0 : std::sqrt(cfg.t_final / cfg.step_counts.at(0));
  result.markers[axis.name == "dt" ? "dt_eq_eps_sq" : "eps_eq_sqrt_dt"] =
      transition;
  branch_fits(result, curve, transition, true);
  result.curves.push_back(std::move(curve));
  return result;
}

ExperimentResult run_total_estimation(const ExperimentConfig& cfg,
                                      ExperimentContext ctx) {
  const bool eps_sweep = cfg.epsilons.size() > 1;
  const FluidOptions fo = fluid_options(cfg);
  ExperimentResult result;

  const auto panel_count = eps_sweep ? cfg.step_counts.size() : cfg.epsilons.size();
  for (std::size_t panel = 0; panel < panel_count; ++panel) {
    const Eigen::Index n = eps_sweep
                               ? static_cast<Eigen::Index>(cfg.epsilons.size())
                               : static_cast<Eigen::Index>(cfg.step_counts.size());
    ErrorCurve kd_curve;
    ErrorCurve fl_curve;
    std::ostringstream panel_tag;
    if (eps_sweep) {
      panel_tag << "K" << cfg.step_counts[panel];
    } else {
      panel_tag << "eps" << format_double(cfg.epsilons[panel]);
    }
    kd_curve.name = "total_estimation_kdmc_" + panel_tag.str();
    fl_curve.name = "total_estimation_fluid_" + panel_tag.str();
    kd_curve.sweep_name = fl_curve.sweep_name = eps_sweep ? "epsilon" : "dt";
    kd_curve.sweep.resize(n);
    for (int l = 0; l < 3; ++l) {
      kd_curve.series.push_back(make_series(kMomentNames[l], n));
      fl_curve.series.push_back(make_series(kMomentNames[l], n));
    }

    for (Eigen::Index i = 0; i < n; ++i) {
      const double eps =
          eps_sweep ? cfg.epsilons[static_cast<std::size_t>(i)] : cfg.epsilons[panel];
      const int k = eps_sweep ? cfg.step_counts[panel]
                              : cfg.step_counts[static_cast<std::size_t>(i)];
      kd_curve.sweep[i] = eps_sweep ? eps : cfg.t_final / k;
      const auto bg = make_background(cfg, eps);
      const std::uint64_t eps_index =
          eps_sweep ? static_cast<std::uint64_t>(i) : panel;

      const MomentTable ref_a = kinetic_reference_moments(
          cfg, ctx, *bg, eps, derive_seed(cfg.seed, "total-ref-a", eps_index));
      const MomentTable ref_b = kinetic_reference_moments(
          cfg, ctx, *bg, eps, derive_seed(cfg.seed, "total-ref-b", eps_index));
      const auto floor = moment_errors(ref_a, ref_b);

      const MomentTable fluid_only =
          fluid_only_method(*bg, cfg.t_final, cfg.cells, initial_density, fo);
      const auto fluid_err = moment_errors(ref_a, fluid_only);

      RunConfig rc;
      rc.method = Method::kKdmc;
      rc.domain = Domain::kPeriodicUnit;
      rc.init = InitialCondition::kDensityProfile;
      rc.scoring = ScoringMode::kTimeIntegrated;
      rc.particle_count = cfg.particles;
      rc.step_count = k;
      rc.t_final = cfg.t_final;
      rc.cell_count = cfg.cells;
      rc.threads = cfg.threads;
      rc.start_cell_estimator = cfg.estimator == "start-cell";
      rc.collect_deposits = true;
      rc.deposition = fo.deposition;
      rc.theta_average = fo.theta_average;
      rc.seed = derive_seed(cfg.seed, "total-approx",
                            static_cast<std::uint64_t>(panel * 1000 + i));
      const RunResult kd_run = run_simulation(rc, *bg);
      const MomentTable kd_total = kdmc_total_moments(kd_run, *bg, fo);
      const auto kd_err = moment_errors(ref_a, kd_total);

      for (int l = 0; l < 3; ++l) {
        kd_curve.series[l].error[i] = kd_err[l];
        kd_curve.series[l].noise_floor[i] = floor[l];
        fl_curve.series[l].error[i] = fluid_err[l];
        fl_curve.series[l].noise_floor[i] = floor[l];
      }
    }
    fl_curve.sweep = kd_curve.sweep;

    if (!eps_sweep) {
      const double eps = cfg.epsilons[panel];
      result.markers["dt_eq_eps_sq_" + panel_tag.str()] = eps * eps;
    }
    result.curves.push_back(std::move(kd_curve));
    result.curves.push_back(std::move(fl_curve));
  }
  return result;
}

ExperimentResult run_fusion_case(const ExperimentConfig& cfg,
                                 ExperimentContext ctx) {
  if (cfg.background != "fusion") {
    throw ConfigError("fusion-case requires background = fusion");
  }
  ExperimentResult result = run_total_estimation(cfg, ctx);

  // Transition marker: dt = mean(1/R(x)) over the mesh.
  const FusionBackground bg(cfg.epsilons.at(0));
  double inv_rate_sum = 0.0;
  for (int j = 0; j < cfg.cells; ++j) {
    inv_rate_sum += 1.0 / bg.rate((j + 0.5) / cfg.cells);
  }
  result.markers["dt_eq_mean_inv_rate"] = inv_rate_sum / cfg.cells;
  return result;
}

ExperimentResult run_cost_study(const ExperimentConfig& cfg,
                                ExperimentContext /*ctx*/) {
  const double eps = cfg.epsilons.at(0);
  const auto bg = make_background(cfg, eps);
  const FluidOptions fo = fluid_options(cfg);

  RunConfig rc;
  rc.method = Method::kKinetic;
  rc.domain = Domain::kPeriodicUnit;
  rc.init = InitialCondition::kDensityProfile;
  rc.scoring = ScoringMode::kTimeIntegrated;
  rc.particle_count = cfg.particles;
  rc.step_count = 1;
  rc.t_final = cfg.t_final;
  rc.cell_count = cfg.cells;
  rc.threads = cfg.threads;
  rc.seed = derive_seed(cfg.seed, "cost-kinetic", 0);
  const RunResult kinetic = run_simulation(rc, *bg);

  double mean_rate = 0.0;
  for (int j = 0; j < cfg.cells; ++j) {
    mean_rate += bg->rate((j + 0.5) / cfg.cells);
  }
  mean_rate /= cfg.cells;

  ExperimentResult result;
  for (std::size_t idx = 0; idx < cfg.step_counts.size(); ++idx) {
    const int k = cfg.step_counts[idx];
    RunConfig kc = rc;
    kc.method = Method::kKdmc;
    kc.step_count = k;
    kc.collect_deposits = true;
    kc.deposition = fo.deposition;
    kc.theta_average = fo.theta_average;
    kc.seed = derive_seed(cfg.seed, "cost-kdmc", idx);
    const RunResult kd = run_simulation(kc, *bg);

    double est_seconds = 0.0;
    OpCounter combined;
    combined.kinetic_steps = kinetic.ops.kinetic_steps;
    combined.kdmc_updates = kd.ops.kdmc_updates;
    kdmc_total_moments(kd, *bg, fo, &est_seconds);
    const SpeedupEstimate est =
        speedup_estimate(combined, cfg.t_final / k, mean_rate);

    CostRow row;
    row.step_count = k;
    row.sim_seconds = kd.sim_seconds;
    row.est_seconds = est_seconds;
    row.speedup = kinetic.sim_seconds / (kd.sim_seconds + est_seconds);
    row.predicted_ratio = est.predicted_ratio;
    row.measured_ratio = est.measured_ratio;
    result.cost.push_back(row);
  }
  result.markers["kinetic_sim_seconds"] = kinetic.sim_seconds;
  result.markers["mean_rate"] = mean_rate;
  return result;
}

ExperimentResult run_appendix_a_modes(const ExperimentConfig& cfg,
                                      ExperimentContext /*ctx*/) {
  const double eps = cfg.epsilons.at(0);
  const int k = cfg.step_counts.at(0);
  const auto bg = make_background(cfg, eps);
  const int cells = cfg.cells;
  const double dx = 1.0 / cells;
  const int replicates = cfg.replicates;

  Eigen::ArrayXd term_sum = Eigen::ArrayXd::Zero(cells);
  Eigen::ArrayXd term_sq = Eigen::ArrayXd::Zero(cells);
  Eigen::ArrayXd integ_sum = Eigen::ArrayXd::Zero(cells);
  Eigen::ArrayXd integ_sq = Eigen::ArrayXd::Zero(cells);
  Eigen::ArrayXd snap_sum = Eigen::ArrayXd::Zero(cells);
  Eigen::ArrayXd snap_sq = Eigen::ArrayXd::Zero(cells);

  const double w = 1.0 / static_cast<double>(cfg.particles);
  for (int r = 0; r < replicates; ++r) {
    RunConfig rc;
    rc.method = Method::kKdmcMimicked;
    rc.domain = Domain::kPeriodicUnit;
    rc.init = InitialCondition::kDensityProfile;
    rc.scoring = ScoringMode::kTimeIntegrated;
    rc.filter = FlightFilter::kAll;
    rc.particle_count = cfg.particles;
    rc.step_count = k;
    rc.t_final = cfg.t_final;
    rc.cell_count = cells;
    rc.threads = cfg.threads;
    rc.collect_terminal_positions = true;
    rc.collect_klimontovich = true;
    rc.seed = derive_seed(cfg.seed, "appendix-a", static_cast<std::uint64_t>(r));
    const RunResult run = run_simulation(rc, *bg);

    Eigen::ArrayXd term = Eigen::ArrayXd::Zero(cells);
    for (Eigen::Index i = 0; i < run.terminal_positions.size(); ++i) {
      int j = static_cast<int>(run.terminal_positions[i] * cells);
      if (j >= cells) j = cells - 1;
      term[j] += w / dx;
    }
    // Track-length m0 normalized to a time-averaged density.
    const Eigen::ArrayXd integ = run.moments.m0 / (cfg.t_final * dx);
    // Average of terminal snapshots on the step-time grid.
    Eigen::ArrayXd snap = Eigen::ArrayXd::Zero(cells);
    for (Eigen::Index i = 0; i < run.snapshot_positions.size(); ++i) {
      int j = static_cast<int>(run.snapshot_positions[i] * cells);
      if (j >= cells) j = cells - 1;
      snap[j] += w / (dx * k);
    }

    term_sum += term;
    term_sq += term * term;
    integ_sum += integ;
    integ_sq += integ * integ;
    snap_sum += snap;
    snap_sq += snap * snap;
  }

  const double nr = static_cast<double>(replicates);
  AppendixAResult a;
  a.terminal_variance = (term_sq - term_sum * term_sum / nr) / (nr - 1.0);
  a.time_integrated_variance =
      (integ_sq - integ_sum * integ_sum / nr) / (nr - 1.0);
  a.fraction_lower_variance =
      (a.time_integrated_variance <= a.terminal_variance).cast<double>().mean();

  const Eigen::ArrayXd mean_integ = integ_sum / nr;
  const Eigen::ArrayXd mean_snap = snap_sum / nr;
  const Eigen::ArrayXd var_snap = (snap_sq - snap_sum * snap_sum / nr) / (nr - 1.0);
  const Eigen::ArrayXd se =
      ((a.time_integrated_variance + var_snap) / nr).sqrt();
  a.fraction_means_within_3se =
      ((mean_integ - mean_snap).abs() <= 3.0 * se).cast<double>().mean();

  // Scoring-cost comparison: same trajectories, one run scoring only the
  // terminal snapshot and one only the time-integrated tally.
  RunConfig tc;
  tc.method = Method::kKdmcMimicked;
  tc.domain = Domain::kPeriodicUnit;
  tc.init = InitialCondition::kDensityProfile;
  tc.particle_count = cfg.particles;
  tc.step_count = k;
  tc.t_final = cfg.t_final;
  tc.threads = cfg.threads;
  tc.seed = derive_seed(cfg.seed, "appendix-a-timing", 0);
  tc.scoring = ScoringMode::kTerminalTime;
  tc.cell_count = 0;
  tc.collect_terminal_positions = true;
  a.terminal_scoring_seconds = run_simulation(tc, *bg).sim_seconds;
  tc.scoring = ScoringMode::kTimeIntegrated;
  tc.cell_count = cells;
  tc.collect_terminal_positions = false;
  a.integrated_scoring_seconds = run_simulation(tc, *bg).sim_seconds;

  ExperimentResult result;
  result.appendix_a = a;
  return result;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg,
                                ExperimentContext ctx) {
  if (cfg.kind == "local-sim-error") return run_local_sim_error(cfg, ctx);
  if (cfg.kind == "global-sim-error") return run_global_sim_error(cfg, ctx);
  if (cfg.kind == "kinetic-part") return run_kinetic_part(cfg, ctx);
  if (cfg.kind == "time-evolution-error")
    return run_time_evolution_error(cfg, ctx);
  if (cfg.kind == "diffusive-part") return run_diffusive_part(cfg, ctx);
  if (cfg.kind == "total-estimation") return run_total_estimation(cfg, ctx);
  if (cfg.kind == "fusion-case") return run_fusion_case(cfg, ctx);
  if (cfg.kind == "cost-study") return run_cost_study(cfg, ctx);
  if (cfg.kind == "appendix-a-modes") return run_appendix_a_modes(cfg, ctx);
  throw ConfigError("run_experiment: '" + cfg.kind +
                    "' is not a sweep experiment");
}

}  // namespace kdmc
