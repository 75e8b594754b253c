// Copyright (c) 2026 the kdmc developers.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "kdmc/background.hpp"
#include "kdmc/moments.hpp"
#include "kdmc/particle.hpp"

namespace kdmc {

/// Cell-averaged density on the periodic unit domain.
struct DensityField {
  Eigen::ArrayXd rho;
  double cell_width = 0.0;
  double time = 0.0;

  int cells() const { return static_cast<int>(rho.size()); }
  double total_mass() const { return rho.sum() * cell_width; }
};

enum class DepositionKernel { kNearest, kLinear };
enum class ThetaAverage { kPerParticle, kFlat };

struct FluidOptions {
  double cfl_safety = 0.9;
  /// User-forced solver step; 0 means automatic (CFL-limited). A forced
  /// step above the stability limit is rejected.
  double forced_dt = 0.0;
  DepositionKernel deposition = DepositionKernel::kNearest;
  ThetaAverage theta_average = ThetaAverage::kPerParticle;
};

/// Evolves the advection-diffusion fluid model
///   d_t rho + d_x(u_p rho) - d_x((1/R) d_x(sigma_p^2 rho)) = 0
/// on the periodic domain with conservative finite volumes: the advective
/// flux is upwinded by the sign of u_p at each face, the diffusive flux
/// uses central differences, and time stepping is explicit Euler under a
/// CFL bound (last step shortened to hit T exactly). Total mass is
/// conserved to round-off. If `moments` is non-null, the moment integrands
/// are accumulated at every step start (rectangle rule in time).
DensityField solve_fluid(const DensityField& rho0, const Background& bg,
                         double duration, const FluidOptions& options = {},
                         MomentGrid* moments = nullptr);

/// Fluid moments of the constant-in-time integrand form, accumulated over
/// one solve: m0 = int rho dt, m1 = int [rho u_p - (1/R) d_x(sigma^2 rho)]
/// dt, m2 = int [(u_p^2 + sigma^2)/2 rho - (1/R) d_x(u_p sigma^2 rho)] dt,
/// all cell-integrated (multiplied by the cell width).
struct FluidSolution {
  DensityField density;
  MomentTable moments;
};

FluidSolution solve_fluid_with_moments(const DensityField& rho0,
                                       const Background& bg, double duration,
                                       const FluidOptions& options = {});

/// Density field sampled from an analytic profile at cell centers.
template <typename Profile>
DensityField density_from_profile(int cells, Profile&& profile) {
  DensityField field;
  field.cell_width = 1.0 / cells;
  field.rho.resize(cells);
  for (int j = 0; j < cells; ++j) {
    field.rho[j] = profile((j + 0.5) * field.cell_width);
  }
  return field;
}

/// Fluid-only reference method: solves the fluid model from the analytic
/// initial density over [0, duration] and returns the accumulated moments.
template <typename Profile>
MomentTable fluid_only_method(const Background& bg, double duration, int cells,
                              Profile&& profile,
                              const FluidOptions& options = {}) {
  const DensityField rho0 =
      density_from_profile(cells, std::forward<Profile>(profile));
  return solve_fluid_with_moments(rho0, bg, duration, options).moments;
}

/// Binned initial condition and empirical evolution time assembled from
/// diffusive-step deposits. theta_hat is the double average: per-particle
/// mean of that particle's step durations, then the mean over particles
/// that deposited at least once (a flat average over all deposits is
/// available through FluidOptions::theta_average).
struct DepositSummary {
  Eigen::ArrayXd density;
  double cell_width = 0.0;
  double theta_hat = 0.0;
  double total_weight = 0.0;
  std::uint64_t deposit_count = 0;
  std::uint64_t contributing_particles = 0;

  bool empty() const { return deposit_count == 0; }
};

/// Streaming builder for DepositSummary: deposits of one particle are fed
/// between begin_particle()/end_particle(); partial accumulators merge
/// associatively, so chunked workers combine deterministically.
class DepositAccumulator {
 public:
  DepositAccumulator(int cells, DepositionKernel kernel, ThetaAverage average)
      : kernel_(kernel),
        average_(average),
        cell_width_(1.0 / cells),
        density_(Eigen::ArrayXd::Zero(cells)) {}

  void begin_particle() {
    particle_theta_sum_ = 0.0;
    particle_deposits_ = 0;
  }

  void add(const DiffusiveDeposit& d) {
    bin(d.x, d.w);
    particle_theta_sum_ += d.theta;
    particle_deposits_ += 1;
    theta_flat_sum_ += d.theta;
    total_weight_ += d.w;
    deposit_count_ += 1;
  }

  void end_particle() {
    if (particle_deposits_ > 0) {
      theta_particle_mean_sum_ +=
          particle_theta_sum_ / static_cast<double>(particle_deposits_);
      contributing_particles_ += 1;
    }
  }

  void merge(const DepositAccumulator& other) {
    density_ += other.density_;
    theta_flat_sum_ += other.theta_flat_sum_;
    theta_particle_mean_sum_ += other.theta_particle_mean_sum_;
    total_weight_ += other.total_weight_;
    deposit_count_ += other.deposit_count_;
    contributing_particles_ += other.contributing_particles_;
  }

  DepositSummary summary() const;

 private:
  void bin(double x, double w);

  DepositionKernel kernel_;
  ThetaAverage average_;
  double cell_width_;
  Eigen::ArrayXd density_;
  double theta_flat_sum_ = 0.0;
  double theta_particle_mean_sum_ = 0.0;
  double total_weight_ = 0.0;
  std::uint64_t deposit_count_ = 0;
  std::uint64_t contributing_particles_ = 0;
  double particle_theta_sum_ = 0.0;
  std::uint64_t particle_deposits_ = 0;
};

struct FluidEstimationResult {
  MomentTable moments;
  double theta_hat = 0.0;
  bool empty = false;
};

/// Fluid estimation from a prebuilt deposit summary: solves the fluid
/// model from the binned initial condition up to theta_hat, accumulating
/// the fluid moments. An empty summary yields zero moments, flagged.
FluidEstimationResult fluid_estimation(const DepositSummary& summary,
                                       const Background& bg,
                                       const FluidOptions& options = {});

/// Fluid estimation from per-particle deposit lists.
FluidEstimationResult fluid_estimation(
    const std::vector<std::vector<DiffusiveDeposit>>& deposits_by_particle,
    const Background& bg, int cells, const FluidOptions& options = {});

/// Harness-facing alias used by the error-isolation experiments: the
/// synthetic deposits produced from mimicked diffusive motion go through
/// the exact same estimation path as real KDMC deposits.
inline FluidEstimationResult propagate_initial_density(
    const std::vector<std::vector<DiffusiveDeposit>>& deposits_by_particle,
    const Background& bg, int cells, const FluidOptions& options = {}) {
  return fluid_estimation(deposits_by_particle, bg, cells, options);
}

}  // namespace kdmc
