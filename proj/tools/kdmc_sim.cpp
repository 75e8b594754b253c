// Copyright (c) 2026 the kdmc developers.
// SPDX-License-Identifier: Apache-2.0

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "kdmc/config.hpp"
#include "kdmc/errors.hpp"
#include "kdmc/experiments.hpp"
#include "kdmc/io.hpp"
#include "kdmc/sampling.hpp"
#include "kdmc/simulation.hpp"

namespace {

namespace fs = std::filesystem;
using namespace kdmc;

struct CliOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::optional<std::string> out;
  bool dump_events = false;
};

void apply_overrides(ExperimentConfig& cfg, const CliOverrides& o) {
  if (o.seed) cfg.seed = *o.seed;
  if (o.threads) cfg.threads = *o.threads;
  if (o.out) cfg.out_dir = *o.out;
  if (o.dump_events) cfg.dump_events = true;
}

Eigen::ArrayXd histogram_density(const Eigen::ArrayXd& positions, int cells,
                                 double weight) {
  Eigen::ArrayXd density = Eigen::ArrayXd::Zero(cells);
  const double dx = 1.0 / cells;
  for (Eigen::Index i = 0; i < positions.size(); ++i) {
    int j = static_cast<int>(wrap_unit(positions[i]) * cells);
    if (j >= cells) j = cells - 1;
    density[j] += weight / dx;
  }
  return density;
}

int cmd_run(const ExperimentConfig& cfg) {
  const fs::path out_dir(cfg.out_dir);
  fs::create_directories(out_dir);
  const double eps = cfg.epsilons.at(0);
  const auto bg = make_background(cfg, eps);
  const FluidOptions fo{cfg.cfl_safety, 0.0, to_deposition(cfg.deposition),
                        to_theta_average(cfg.theta_average)};

  if (cfg.method == "fluid-only") {
    const DensityField rho0 = density_from_profile(cfg.cells, initial_density);
    const FluidSolution solution =
        solve_fluid_with_moments(rho0, *bg, cfg.t_final, fo);
    write_moments_csv(out_dir / "moments.csv", solution.moments);
    write_density_csv(out_dir / "density.csv",
                      solution.moments.x_center, solution.density.rho);
    std::cout << "fluid-only run complete; moments in "
              << (out_dir / "moments.csv").string() << "\n";
    return 0;
  }

  RunConfig rc;
  rc.method = to_method(cfg.method);
  rc.domain = Domain::kPeriodicUnit;
  rc.init = InitialCondition::kDensityProfile;
  rc.scoring = to_scoring(cfg.scoring);
  rc.particle_count = cfg.particles;
  rc.step_count = cfg.step_counts.at(0);
  rc.t_final = cfg.t_final;
  rc.cell_count = cfg.cells;
  rc.seed = cfg.seed;
  rc.threads = cfg.threads;
  rc.start_cell_estimator = cfg.estimator == "start-cell";
  rc.collect_terminal_positions = true;
  rc.collect_deposits =
      rc.method == Method::kKdmc || rc.method == Method::kKdmcMimicked;
  rc.deposition = fo.deposition;
  rc.theta_average = fo.theta_average;
  rc.dump_events = cfg.dump_events;

  const RunResult run = run_simulation(rc, *bg);

  if (rc.scoring == ScoringMode::kTimeIntegrated && cfg.cells > 0) {
    MomentTable total = run.moments;
    if (rc.method == Method::kKdmc) {
      const FluidEstimationResult fe = fluid_estimation(run.deposits, *bg, fo);
      write_moments_csv(out_dir / "kinetic_part_moments.csv", run.moments);
      write_moments_csv(out_dir / "fluid_part_moments.csv", fe.moments);
      total += fe.moments;
      if (fe.empty) {
        std::cout << "note: no diffusive deposits were collected\n";
      }
    }
    write_moments_csv(out_dir / "moments.csv", total);
  }

  const MomentGrid layout(cfg.cells);
  write_density_csv(out_dir / "terminal_density.csv", layout.cell_centers(),
                    histogram_density(run.terminal_positions, cfg.cells,
                                      1.0 / static_cast<double>(cfg.particles)));
  if (cfg.dump_events) {
    write_events_csv(out_dir / "events.csv", run.events);
  }
  std::cout << "run complete: " << cfg.method << ", I=" << cfg.particles
            << ", K=" << rc.step_count << ", sim " << run.sim_seconds
            << " s; outputs in " << out_dir.string() << "\n";
  return 0;
}

int cmd_sweep(const ExperimentConfig& cfg) {
  ReferenceCache cache(fs::path(cfg.out_dir) / "cache");
  ExperimentContext ctx;
  ctx.cache = &cache;
  const ExperimentResult result = run_experiment(cfg, ctx);
  write_experiment_output(cfg.out_dir, cfg, result);
  std::cout << "sweep complete: " << cfg.kind << "; outputs in " << cfg.out_dir
            << "\n";
  for (const SlopeRow& row : result.slopes) {
    if (row.fit.valid) {
      std::cout << "  slope " << row.curve << " " << row.series << " = "
                << row.fit.slope << " +- " << row.fit.std_error << "\n";
    }
  }
  return 0;
}

int cmd_report(const std::string& dir) {
  const fs::path path(dir);
  if (!fs::exists(path)) {
    throw ConfigError("report: no such directory: " + dir);
  }
  const fs::path summary = path / "summary.txt";
  if (fs::exists(summary)) {
    std::ifstream in(summary);
    std::cout << in.rdbuf();
  }
  for (const auto& entry : fs::directory_iterator(path)) {
    if (entry.path().extension() == ".csv") {
      std::cout << "\n== " << entry.path().filename().string() << " ==\n";
      std::ifstream in(entry.path());
      std::string line;
      int shown = 0;
      while (std::getline(in, line) && shown < 12) {
        std::cout << line << "\n";
        ++shown;
      }
      if (std::getline(in, line)) {
        std::cout << "... (truncated)\n";
      }
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"KDMC particle-transport experiment harness"};
  app.require_subcommand(1);

  CliOverrides overrides;
  std::string config_path;
  std::string report_dir;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("config", config_path, "experiment config file")
        ->required();
    cmd->add_option("--seed", overrides.seed, "master RNG seed override");
    cmd->add_option("--threads", overrides.threads, "worker thread count");
    cmd->add_option("--out", overrides.out, "output directory override");
    cmd->add_flag("--dump-events", overrides.dump_events,
                  "write raw event CSV (small runs only)");
  };

  CLI::App* run_cmd = app.add_subcommand("run", "single simulation run");
  add_common(run_cmd);
  CLI::App* sweep_cmd =
      app.add_subcommand("sweep", "convergence experiment sweep");
  add_common(sweep_cmd);
  CLI::App* report_cmd =
      app.add_subcommand("report", "summarize an output directory");
  report_cmd->add_option("dir", report_dir, "output directory")->required();

  try {
    app.parse(argc, argv);
    if (report_cmd->parsed()) {
      return cmd_report(report_dir);
    }
    ExperimentConfig cfg = parse_config_file(config_path);
    apply_overrides(cfg, overrides);
    if (run_cmd->parsed()) {
      if (cfg.kind != "run") {
        throw ConfigError("'" + cfg.kind + "' config given to the run command"
                          " (use: kdmc-sim sweep)");
      }
      return cmd_run(cfg);
    }
    if (cfg.kind == "run") {
      throw ConfigError("'run' config given to the sweep command");
    }
    return cmd_sweep(cfg);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
