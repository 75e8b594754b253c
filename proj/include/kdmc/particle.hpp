// Copyright (c) 2026 the kdmc developers.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <optional>

#include "kdmc/background.hpp"
#include "kdmc/rng.hpp"
#include "kdmc/sampling.hpp"

namespace kdmc {

/// One particle: position, velocity, mass fraction and current time. The
/// weight is constant over the particle's lifetime (no ionization).
struct ParticleState {
  double x = 0.0;
  double v = 0.0;
  double w = 1.0;
  double t = 0.0;
};

enum class EventKind { kKineticFlight, kDiffusiveJump, kCollision };

/// One trajectory event. For kinetic flights end.x = start.x + duration *
/// start.v (no periodic wrap applied; the scorer owns wrap bookkeeping).
struct StepEvent {
  EventKind kind = EventKind::kKineticFlight;
  double x_start = 0.0;
  double v_start = 0.0;
  double t_start = 0.0;
  double x_end = 0.0;
  double v_end = 0.0;
  double t_end = 0.0;
  double duration = 0.0;
};

/// Origin of one diffusive step, deposited for the fluid estimation:
/// position right after the kinetic flight, step duration theta in
/// (0, dt], and the particle weight.
struct DiffusiveDeposit {
  double x = 0.0;
  double theta = 0.0;
  double w = 0.0;
};

/// Free flight: x' = x + tau * v.
inline double kinetic_move(double x, double v, double tau) {
  return x + tau * v;
}

/// Euler-Maruyama update with coefficients frozen at the start position:
/// x' = x + A(x) theta + sqrt(2 D(x) theta) * xi.
inline double diffusive_move(double x, double drift_coeff, double diffusivity,
                             double theta, double xi) {
  return x + drift_coeff * theta + std::sqrt(2.0 * diffusivity * theta) * xi;
}

/// Kinetic step: exponential flight time at the start position's rate,
/// free flight, then velocity resampled from the Maxwellian at the NEW
/// position. Returns the flight event; the state is advanced in place.
inline StepEvent kinetic_step(ParticleState& p, const Background& bg,
                              RngStream& s) {
  const double tau = sample_exponential(s, bg.rate(p.x));
  StepEvent ev;
  ev.kind = EventKind::kKineticFlight;
  ev.x_start = p.x;
  ev.v_start = p.v;
  ev.t_start = p.t;
  ev.duration = tau;
  p.x = kinetic_move(p.x, p.v, tau);
  p.t += tau;
  ev.x_end = p.x;
  ev.v_end = p.v;
  ev.t_end = p.t;
  p.v = sample_maxwellian(s, bg, p.x);
  return ev;
}

/// Diffusive step of duration theta; the velocity is left untouched (the
/// next kinetic step resamples it).
inline StepEvent diffusive_step(ParticleState& p, const Background& bg,
                                double theta, RngStream& s) {
  StepEvent ev;
  ev.kind = EventKind::kDiffusiveJump;
  ev.x_start = p.x;
  ev.v_start = p.v;
  ev.t_start = p.t;
  ev.duration = theta;
  const double xi = s.standard_normal();
  p.x = diffusive_move(p.x, drift(bg, p.x), diffusivity(bg, p.x), theta, xi);
  p.t += theta;
  ev.x_end = p.x;
  ev.v_end = p.v;
  ev.t_end = p.t;
  return ev;
}

struct KdmcStepResult {
  StepEvent flight;
  std::optional<StepEvent> jump;
  std::optional<DiffusiveDeposit> deposit;
  bool collided = false;
};

/// Deterministic core of one KDMC step given the sampled flight time and,
/// when a collision occurs (tau < dt), the post-collision velocity and the
/// standard-normal increment of the diffusive step. With tau >= dt the
/// particle flies kinetically for exactly dt; no collision, no velocity
/// resample, no deposit.
inline KdmcStepResult kdmc_step_core(ParticleState& p, const Background& bg,
                                     double dt, double tau, double v_new,
                                     double xi) {
  KdmcStepResult result;
  const double flight_time = tau < dt ? tau : dt;

  result.flight.kind = EventKind::kKineticFlight;
  result.flight.x_start = p.x;
  result.flight.v_start = p.v;
  result.flight.t_start = p.t;
  result.flight.duration = flight_time;
  p.x = kinetic_move(p.x, p.v, flight_time);
  p.t += flight_time;
  result.flight.x_end = p.x;
  result.flight.v_end = p.v;
  result.flight.t_end = p.t;

  if (tau < dt) {
    result.collided = true;
    p.v = v_new;
    const double theta = dt - tau;
    result.deposit = DiffusiveDeposit{p.x, theta, p.w};

    StepEvent jump;
    jump.kind = EventKind::kDiffusiveJump;
    jump.x_start = p.x;
    jump.v_start = p.v;
    jump.t_start = p.t;
    jump.duration = theta;
    p.x = diffusive_move(p.x, drift(bg, p.x), diffusivity(bg, p.x), theta, xi);
    p.t += theta;
    jump.x_end = p.x;
    jump.v_end = p.v;
    jump.t_end = p.t;
    result.jump = jump;
  }
  return result;
}

/// One KDMC hybrid step of size dt: kinetic flight truncated at dt, and if
/// a collision happened (tau < dt), a Maxwellian velocity resample at the
/// collision point followed by a diffusive step over the remaining time.
inline KdmcStepResult kdmc_step(ParticleState& p, const Background& bg,
                                double dt, RngStream& s) {
  const double tau = sample_exponential(s, bg.rate(p.x));
  double v_new = 0.0;
  double xi = 0.0;
  if (tau < dt) {
    // The new velocity is drawn at the collision point, which is known
    // before any state change: x + tau * v.
    v_new = sample_maxwellian(s, bg, kinetic_move(p.x, p.v, tau));
    xi = s.standard_normal();
  }
  return kdmc_step_core(p, bg, dt, tau, v_new, xi);
}

/// Advances the particle over a window of duration theta using kinetic
/// flights truncated at the window end; a flight that would overrun the
/// window is cut short without a velocity resample, which is unbiased by
/// the memorylessness of the exponential flight time. Used to mimic
/// diffusive motion with kinetic motion in the error-isolation
/// experiments. Each flight is reported through on_flight(event).
template <typename FlightHandler>
inline void mimicked_diffusion_advance(ParticleState& p, const Background& bg,
                                       double theta, RngStream& s,
                                       FlightHandler&& on_flight) {
  double remaining = theta;
  while (remaining > 0.0) {
    const double tau = sample_exponential(s, bg.rate(p.x));
    const double flight_time = tau < remaining ? tau : remaining;

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
    on_flight(ev);

    if (tau < remaining) {
      p.v = sample_maxwellian(s, bg, p.x);
    }
    remaining -= flight_time;
  }
}

}  // namespace kdmc
