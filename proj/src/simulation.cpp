// Copyright (c) 2026 the kdmc developers.
// SPDX-License-Identifier: Apache-2.0

#include "kdmc/simulation.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <memory>
#include <thread>

#include "kdmc/errors.hpp"
#include "kdmc/rng.hpp"
#include "kdmc/sampling.hpp"

namespace kdmc {

namespace {

constexpr std::uint64_t kChunkSize = 16384;

struct ChunkAccumulators {
  ChunkAccumulators(const RunConfig& cfg)
      : grid(cfg.cell_count > 0 ? cfg.cell_count : 1),
        deposits(cfg.cell_count > 0 ? cfg.cell_count : 1, cfg.deposition,
                 cfg.theta_average) {}

  MomentGrid grid;
  DepositAccumulator deposits;
  OpCounter ops;
  double weight_sum = 0.0;
  std::vector<EventRow> events;
};

struct SharedBuffers {
  Eigen::ArrayXd terminal;
  Eigen::ArrayXd initial;
  Eigen::ArrayXd snapshots;   // particle-major: i * K + (k-1)
  Eigen::ArrayXd postflight;  // particle-major: i * K + k
};

class ParticleDriver {
 public:
  ParticleDriver(const RunConfig& cfg, const Background& bg,
                 ChunkAccumulators& acc, SharedBuffers& buffers)
      : cfg_(cfg),
        bg_(bg),
        acc_(acc),
        buffers_(buffers),
        periodic_(cfg.domain == Domain::kPeriodicUnit),
        score_grid_(cfg.cell_count > 0 &&
                    cfg.scoring == ScoringMode::kTimeIntegrated),
        dt_(cfg.t_final / cfg.step_count) {}

  void run_particle(std::uint64_t index) {
    RngStream rng(cfg_.seed, index);
    ParticleState p;
    p.w = cfg_.total_mass / static_cast<double>(cfg_.particle_count);
    if (cfg_.init == InitialCondition::kDensityProfile) {
      p.x = sample_initial_position(rng);
    } else {
      p.x = 0.0;
    }
    p.v = sample_maxwellian(rng, bg_, p.x);
    if (cfg_.collect_klimontovich) {
      buffers_.initial[index] = p.x;
    }
    if (cfg_.collect_deposits) {
      acc_.deposits.begin_particle();
    }

    switch (cfg_.method) {
      case Method::kKinetic:
        run_kinetic(p, index, rng);
        break;
      case Method::kDiffusive:
        run_diffusive(p, index, rng);
        break;
      case Method::kKdmc:
        run_kdmc(p, index, rng);
        break;
      case Method::kKdmcMimicked:
        run_mimicked(p, index, rng);
        break;
    }

    if (cfg_.collect_deposits) {
      acc_.deposits.end_particle();
    }
    // Audited after stepping: the weight must have stayed untouched.
    acc_.weight_sum += p.w;
    if (cfg_.collect_terminal_positions) {
      buffers_.terminal[index] = position_of(p.x);
    }
  }

 private:
  double position_of(double x) const { return periodic_ ? wrap_unit(x) : x; }

  void score(const StepEvent& ev, double w, bool is_first_flight) {
    if (score_grid_) {
      const bool pass = cfg_.filter == FlightFilter::kAll ||
                        (cfg_.filter == FlightFilter::kFirstPerStep
                             ? is_first_flight
                             : !is_first_flight);
      if (pass) {
        const double x0 = periodic_ ? wrap_unit(ev.x_start) : ev.x_start;
        if (cfg_.start_cell_estimator) {
          score_flight_start_cell(acc_.grid, x0, ev.v_start, ev.duration, w);
        } else {
          score_flight(acc_.grid, x0, ev.v_start, ev.duration, w);
        }
      }
    }
  }

  void record_event(std::uint64_t particle, int step, const StepEvent& ev) {
    if (!cfg_.dump_events) return;
    EventRow row;
    row.particle = particle;
    row.step = step;
    row.kind = ev.kind;
    row.x_start = position_of(ev.x_start);
    row.v_start = ev.v_start;
    row.x_end = position_of(ev.x_end);
    row.v_end = ev.v_end;
    row.duration = ev.duration;
    acc_.events.push_back(row);
  }

  void record_snapshot(std::uint64_t index, int k, double x) {
    if (cfg_.collect_klimontovich && k >= 1) {
      buffers_.snapshots[index * cfg_.step_count + (k - 1)] = position_of(x);
    }
  }

  void record_postflight(std::uint64_t index, int k, double x) {
    if (cfg_.collect_klimontovich) {
      buffers_.postflight[index * cfg_.step_count + k] = position_of(x);
    }
  }

  void run_kinetic(ParticleState& p, std::uint64_t index, RngStream& rng) {
    int flight = 0;
    while (p.t < cfg_.t_final) {
      const double rate = bg_.rate(p.x);
      const double tau = sample_exponential(rng, rate);
      const double remaining = cfg_.t_final - p.t;
      StepEvent ev;
      ev.kind = EventKind::kKineticFlight;
      ev.x_start = p.x;
      ev.v_start = p.v;
      ev.t_start = p.t;
      if (tau < remaining) {
        ev.duration = tau;
        p.x = kinetic_move(p.x, p.v, tau);
        p.t += tau;
        ev.x_end = p.x;
        ev.v_end = p.v;
        ev.t_end = p.t;
        if (periodic_) p.x = wrap_unit(p.x);
        p.v = sample_maxwellian(rng, bg_, p.x);
        acc_.ops.kinetic_steps += 1;
      } else {
        // Truncate the last flight at the final time; no collision.
        ev.duration = remaining;
        p.x = kinetic_move(p.x, p.v, remaining);
        p.t = cfg_.t_final;
        ev.x_end = p.x;
        ev.v_end = p.v;
        ev.t_end = p.t;
        if (periodic_) p.x = wrap_unit(p.x);
      }
      score(ev, p.w, true);
      record_event(index, flight++, ev);
    }
  }

  void run_diffusive(ParticleState& p, std::uint64_t index, RngStream& rng) {
    for (int k = 0; k < cfg_.step_count; ++k) {
      StepEvent ev = diffusive_step(p, bg_, dt_, rng);
      if (periodic_) p.x = wrap_unit(p.x);
      acc_.ops.kdmc_updates += 1;
      record_event(index, k, ev);
      record_postflight(index, k, ev.x_start);
      record_snapshot(index, k + 1, p.x);
    }
  }

  void run_kdmc(ParticleState& p, std::uint64_t index, RngStream& rng) {
    for (int k = 0; k < cfg_.step_count; ++k) {
      KdmcStepResult step = kdmc_step(p, bg_, dt_, rng);
      if (periodic_) p.x = wrap_unit(p.x);
      acc_.ops.kdmc_updates += step.collided ? 2 : 1;
      score(step.flight, p.w, true);
      record_event(index, k, step.flight);
      record_postflight(index, k, step.flight.x_end);
      if (step.jump) {
        record_event(index, k, *step.jump);
      }
      if (step.deposit && cfg_.collect_deposits) {
        DiffusiveDeposit d = *step.deposit;
        d.x = wrap_unit(d.x);
        acc_.deposits.add(d);
      }
      record_snapshot(index, k + 1, p.x);
    }
  }

  void run_mimicked(ParticleState& p, std::uint64_t index, RngStream& rng) {
    for (int k = 0; k < cfg_.step_count; ++k) {
      // First flight of the step: the kinetic part, truncated at dt.
      const double tau = sample_exponential(rng, bg_.rate(p.x));
      const double flight_time = tau < dt_ ? tau : dt_;
      StepEvent ev;
      ev.kind = EventKind::kKineticFlight;
      ev.x_start = p.x;
      ev.v_start = p.v;
      ev.t_start = p.t;
      ev.duration = flight_time;
      p.x = kinetic_move(p.x, p.v, flight_time);
      p.t += flight_time;
      ev.x_end = p.x;
      ev.v_end = p.v;
      ev.t_end = p.t;
      if (periodic_) p.x = wrap_unit(p.x);
      score(ev, p.w, true);
      record_event(index, k, ev);
      record_postflight(index, k, ev.x_end);

      if (tau < dt_) {
        p.v = sample_maxwellian(rng, bg_, p.x);
        acc_.ops.kinetic_steps += 1;
        const double theta = dt_ - tau;
        if (cfg_.collect_deposits) {
          acc_.deposits.add(DiffusiveDeposit{wrap_unit(p.x), theta, p.w});
        }
        // Mimic the diffusive remainder with unscored-or-scored kinetic
        // motion, depending on the flight filter.
        mimicked_diffusion_advance(p, bg_, theta, rng, [&](const StepEvent& f) {
          StepEvent flight = f;
          if (periodic_) p.x = wrap_unit(p.x);
          score(flight, p.w, false);
          record_event(index, k, flight);
          acc_.ops.kinetic_steps += 1;
        });
      }
      record_snapshot(index, k + 1, p.x);
    }
  }

  const RunConfig& cfg_;
  const Background& bg_;
  ChunkAccumulators& acc_;
  SharedBuffers& buffers_;
  bool periodic_;
  bool score_grid_;
  double dt_;
};

void validate(const RunConfig& cfg) {
  if (cfg.particle_count == 0) {
    throw ConfigError("run_simulation: particle count must be positive");
  }
  if (!(cfg.t_final > 0.0)) {
    throw ConfigError("run_simulation: final time must be positive");
  }
  if (cfg.step_count < 1) {
    throw ConfigError("run_simulation: step count must be at least 1");
  }
  if (cfg.cell_count > 0 && cfg.domain == Domain::kUnbounded) {
    throw ConfigError("run_simulation: cell scoring requires the periodic domain");
  }
  if (cfg.collect_klimontovich && cfg.method == Method::kKinetic) {
    throw ConfigError(
        "run_simulation: per-step states need a fixed-step method");
  }
  if (cfg.collect_deposits && cfg.method != Method::kKdmc &&
      cfg.method != Method::kKdmcMimicked) {
    throw ConfigError("run_simulation: deposits exist only for KDMC methods");
  }
}

}  // namespace

int default_thread_count() {
  if (const char* env = std::getenv("KDMC_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

RunResult run_simulation(const RunConfig& cfg, const Background& bg) {
  validate(cfg);
  const auto start_time = std::chrono::steady_clock::now();

  const std::uint64_t chunk_count =
      (cfg.particle_count + kChunkSize - 1) / kChunkSize;
  std::vector<std::unique_ptr<ChunkAccumulators>> chunks(chunk_count);

  SharedBuffers buffers;
  if (cfg.collect_terminal_positions) {
    buffers.terminal.resize(static_cast<Eigen::Index>(cfg.particle_count));
  }
  if (cfg.collect_klimontovich) {
    const auto states =
        static_cast<Eigen::Index>(cfg.particle_count) * cfg.step_count;
    buffers.initial.resize(static_cast<Eigen::Index>(cfg.particle_count));
    buffers.snapshots.resize(states);
    buffers.postflight.resize(states);
  }

  const int threads =
      cfg.threads > 0 ? cfg.threads : default_thread_count();
  const int workers =
      static_cast<int>(std::min<std::uint64_t>(threads, chunk_count));

  std::atomic<std::uint64_t> next_chunk{0};
  auto work = [&]() {
    for (;;) {
      const std::uint64_t c = next_chunk.fetch_add(1);
      if (c >= chunk_count) break;
      auto acc = std::make_unique<ChunkAccumulators>(cfg);
      ParticleDriver driver(cfg, bg, *acc, buffers);
      const std::uint64_t begin = c * kChunkSize;
      const std::uint64_t end =
          std::min(cfg.particle_count, begin + kChunkSize);
      for (std::uint64_t i = begin; i < end; ++i) {
        driver.run_particle(i);
      }
      chunks[c] = std::move(acc);
    }
  };

  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int t = 0; t < workers; ++t) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }

  // Merge in fixed chunk order for bit-reproducible results.
  RunResult result;
  result.dt = cfg.t_final / cfg.step_count;
  MomentGrid grid(cfg.cell_count > 0 ? cfg.cell_count : 1);
  DepositAccumulator deposits(cfg.cell_count > 0 ? cfg.cell_count : 1,
                              cfg.deposition, cfg.theta_average);
  for (const auto& chunk : chunks) {
    grid += chunk->grid;
    deposits.merge(chunk->deposits);
    result.ops += chunk->ops;
    result.weight_sum += chunk->weight_sum;
    if (cfg.dump_events) {
      result.events.insert(result.events.end(), chunk->events.begin(),
                           chunk->events.end());
    }
  }
  if (cfg.cell_count > 0 && cfg.scoring == ScoringMode::kTimeIntegrated) {
    result.moments = finalize(grid);
  }
  if (cfg.collect_deposits) {
    result.deposits = deposits.summary();
  }
  result.terminal_positions = std::move(buffers.terminal);
  result.initial_positions = std::move(buffers.initial);
  result.snapshot_positions = std::move(buffers.snapshots);
  result.postflight_positions = std::move(buffers.postflight);

  // Mass conservation audit: the ensemble weight must match the configured
  // total mass to round-off.
  const double expected = cfg.total_mass;
  if (std::abs(result.weight_sum - expected) >
      1e-12 * std::max(1.0, std::abs(expected))) {
    throw NumericalError("run_simulation: ensemble mass drifted");
  }

  result.sim_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                    start_time)
          .count();
  return result;
}

}  // namespace kdmc
