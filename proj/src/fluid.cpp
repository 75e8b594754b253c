// Copyright (c) 2026 the kdmc developers.
// SPDX-License-Identifier: Apache-2.0

#include "kdmc/fluid.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "kdmc/errors.hpp"

namespace kdmc {

namespace {

struct SolverCoefficients {
  Eigen::ArrayXd u_face;
  Eigen::ArrayXd inv_rate_face;
  Eigen::ArrayXd sigma2_cell;
  Eigen::ArrayXd u_cell;
  Eigen::ArrayXd inv_rate_cell;
  Eigen::ArrayXd u_sigma2_cell;
  Eigen::ArrayXd half_u2_plus_sigma2_cell;
  double max_abs_drift_face = 0.0;
  double max_diffusivity_face = 0.0;
};

SolverCoefficients evaluate_coefficients(const Background& bg, int cells,
                                         double dx) {
  SolverCoefficients c;
  c.u_face.resize(cells);
  c.inv_rate_face.resize(cells);
  c.sigma2_cell.resize(cells);
  c.u_cell.resize(cells);
  c.inv_rate_cell.resize(cells);
  c.u_sigma2_cell.resize(cells);
  c.half_u2_plus_sigma2_cell.resize(cells);
  for (int j = 0; j < cells; ++j) {
    const double x_face = j * dx;
    const double x_center = (j + 0.5) * dx;
    c.u_face[j] = bg.mean_velocity(x_face);
    c.inv_rate_face[j] = 1.0 / bg.rate(x_face);
    c.max_abs_drift_face =
        std::max(c.max_abs_drift_face, std::abs(drift(bg, x_face)));
    c.max_diffusivity_face =
        std::max(c.max_diffusivity_face, diffusivity(bg, x_face));
    const double sigma2 = bg.variance(x_center);
    const double u = bg.mean_velocity(x_center);
    c.sigma2_cell[j] = sigma2;
    c.u_cell[j] = u;
    c.inv_rate_cell[j] = 1.0 / bg.rate(x_center);
    c.u_sigma2_cell[j] = u * sigma2;
    c.half_u2_plus_sigma2_cell[j] = 0.5 * (u * u + sigma2);
  }
  return c;
}

void accumulate_moments(MomentGrid& grid, const Eigen::ArrayXd& rho,
                        const SolverCoefficients& c, double dt, double dx) {
  const double dt_dx = dt * dx;
  const int cells = static_cast<int>(rho.size());
  for (int j = 0; j < cells; ++j) {
    const int left = j > 0 ? j - 1 : cells - 1;
    const int right = j + 1 < cells ? j + 1 : 0;
    const double dg = (c.sigma2_cell[right] * rho[right] -
                       c.sigma2_cell[left] * rho[left]) /
                      (2.0 * dx);
    const double dh = (c.u_sigma2_cell[right] * rho[right] -
                       c.u_sigma2_cell[left] * rho[left]) /
                      (2.0 * dx);
    grid.m0[j] += dt_dx * rho[j];
    grid.m1[j] += dt_dx * (c.u_cell[j] * rho[j] - c.inv_rate_cell[j] * dg);
    grid.m2[j] += dt_dx * (c.half_u2_plus_sigma2_cell[j] * rho[j] -
                           c.inv_rate_cell[j] * dh);
  }
}

}  // namespace

DensityField solve_fluid(const DensityField& rho0, const Background& bg,
                         double duration, const FluidOptions& options,
                         MomentGrid* moments) {
  if (duration < 0.0) {
    throw std::invalid_argument("solve_fluid: negative duration");
  }
  const int cells = rho0.cells();
  if (cells < 1) {
    throw std::invalid_argument("solve_fluid: empty density field");
  }
  const double dx = rho0.cell_width;
  const SolverCoefficients c = evaluate_coefficients(bg, cells, dx);

  // Combined advection-diffusion bound: dt (|A|/dx + 2D/dx^2) <= 1. It is
  // tighter than min(dx/|A|, dx^2/2D), which alone admits unstable steps
  // when both terms are comparable.
  double dt_stable = std::numeric_limits<double>::infinity();
  const double rate_sum = c.max_abs_drift_face / dx +
                          2.0 * c.max_diffusivity_face / (dx * dx);
  if (rate_sum > 0.0) {
    dt_stable = 1.0 / rate_sum;
  }
  double dt = options.cfl_safety * dt_stable;
  if (options.forced_dt > 0.0) {
    if (options.forced_dt > dt_stable) {
      throw std::invalid_argument("solve_fluid: forced step violates CFL");
    }
    dt = options.forced_dt;
  }
  if (!std::isfinite(dt) || dt <= 0.0) {
    dt = duration;  // degenerate zero-coefficient background
  }

  DensityField field = rho0;
  Eigen::ArrayXd g(cells);
  Eigen::ArrayXd flux(cells);
  double remaining = duration;
  while (remaining > 0.0) {
    const double step = remaining < dt ? remaining : dt;
    if (moments != nullptr) {
      accumulate_moments(*moments, field.rho, c, step, dx);
    }
    g = c.sigma2_cell * field.rho;
    // Face j sits between cells j-1 and j; positive flux is rightward.
    for (int j = 0; j < cells; ++j) {
      const int left = j > 0 ? j - 1 : cells - 1;
      const double u = c.u_face[j];
      const double upwind = u > 0.0 ? field.rho[left] : field.rho[j];
      flux[j] = u * upwind - c.inv_rate_face[j] * (g[j] - g[left]) / dx;
    }
    const double scale = step / dx;
    for (int j = 0; j < cells; ++j) {
      const int right = j + 1 < cells ? j + 1 : 0;
      field.rho[j] -= scale * (flux[right] - flux[j]);
    }
    field.time += step;
    remaining -= step;
  }

  if (!field.rho.isFinite().all()) {
    throw NumericalError("solve_fluid: non-finite density");
  }
  return field;
}

FluidSolution solve_fluid_with_moments(const DensityField& rho0,
                                       const Background& bg, double duration,
                                       const FluidOptions& options) {
  MomentGrid grid(rho0.cells());
  FluidSolution solution;
  solution.density = solve_fluid(rho0, bg, duration, options, &grid);
  solution.moments = finalize(grid);
  return solution;
}

void DepositAccumulator::bin(double x, double w) {
  const int cells = static_cast<int>(density_.size());
  const double xw = wrap_unit(x);
  if (kernel_ == DepositionKernel::kNearest) {
    int j = static_cast<int>(xw / cell_width_);
    if (j >= cells) j = cells - 1;
    density_[j] += w / cell_width_;
    return;
  }
  // Linear (cloud-in-cell) split between the two nearest cell centers.
  const double s = xw / cell_width_ - 0.5;
  double lower = std::floor(s);
  const double frac = s - lower;
  int j0 = static_cast<int>(lower);
  j0 = ((j0 % cells) + cells) % cells;
  const int j1 = (j0 + 1) % cells;
  density_[j0] += (1.0 - frac) * w / cell_width_;
  density_[j1] += frac * w / cell_width_;
}

DepositSummary DepositAccumulator::summary() const {
  DepositSummary s;
  s.density = density_;
  s.cell_width = cell_width_;
  s.total_weight = total_weight_;
  s.deposit_count = deposit_count_;
  s.contributing_particles = contributing_particles_;
  if (deposit_count_ > 0) {
    s.theta_hat =
        average_ == ThetaAverage::kPerParticle
            ? theta_particle_mean_sum_ /
                  static_cast<double>(contributing_particles_)
            : theta_flat_sum_ / static_cast<double>(deposit_count_);
  }
  return s;
}

FluidEstimationResult fluid_estimation(const DepositSummary& summary,
                                       const Background& bg,
                                       const FluidOptions& options) {
  FluidEstimationResult result;
  result.theta_hat = summary.theta_hat;
  if (summary.empty()) {
    const int cells = static_cast<int>(summary.density.size());
    MomentGrid zero(cells > 0 ? cells : 1);
    result.moments = finalize(zero);
    result.empty = true;
    return result;
  }
  DensityField rho0;
  rho0.rho = summary.density;
  rho0.cell_width = summary.cell_width;
  result.moments =
      solve_fluid_with_moments(rho0, bg, summary.theta_hat, options).moments;
  return result;
}

FluidEstimationResult fluid_estimation(
    const std::vector<std::vector<DiffusiveDeposit>>& deposits_by_particle,
    const Background& bg, int cells, const FluidOptions& options) {
  DepositAccumulator acc(cells, options.deposition, options.theta_average);
  for (const auto& particle_deposits : deposits_by_particle) {
    acc.begin_particle();
    for (const DiffusiveDeposit& d : particle_deposits) {
      acc.add(d);
    }
    acc.end_particle();
  }
  return fluid_estimation(acc.summary(), bg, options);
}

}  // namespace kdmc
