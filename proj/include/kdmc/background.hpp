// Copyright (c) 2026 the kdmc developers.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <memory>
#include <string>

namespace kdmc {

/// Wraps a position into the periodic unit domain [0, 1).
inline double wrap_unit(double x) {
  const double w = x - std::floor(x);
  return w < 1.0 ? w : 0.0;
}

/// Plasma background seen by the neutral particles: collision rate R(x),
/// plasma mean velocity u_p(x), plasma velocity variance sigma_p^2(x), and
/// the closed-form derivatives d/dx (1/R) and d/dx sigma_p^2 required by
/// the drift coefficient and the fluid moment formulas. Implementations
/// are immutable after construction and safe to share across workers.
///
/// Heterogeneous profiles are periodic on [0,1); evaluation wraps x into
/// [0,1) first, so callers may pass unwrapped positions.
class Background {
 public:
  virtual ~Background() = default;

  virtual double rate(double x) const = 0;
  virtual double mean_velocity(double x) const = 0;
  virtual double variance(double x) const = 0;
  virtual double d_inv_rate(double x) const = 0;
  virtual double d_variance(double x) const = 0;
  virtual double epsilon() const = 0;
  virtual std::string name() const = 0;
};

/// Drift coefficient A(x) = u_p(x) + d/dx(1/R(x)) * sigma_p^2(x) of the
/// equivalent Ito SDE.
inline double drift(const Background& bg, double x) {
  return bg.mean_velocity(x) + bg.d_inv_rate(x) * bg.variance(x);
}

/// Diffusion coefficient D(x) = sigma_p^2(x) / R(x); strictly positive.
inline double diffusivity(const Background& bg, double x) {
  return bg.variance(x) / bg.rate(x);
}

/// Homogeneous diffusive-scaling background: R = sigma_p^2 = 1/eps^2 and a
/// constant mean velocity.
class HomogeneousBackground final : public Background {
 public:
  explicit HomogeneousBackground(double eps, double mean_velocity = 30.0)
      : eps_(eps),
        inv_eps_sq_(1.0 / (eps * eps)),
        mean_velocity_(mean_velocity) {}

  double rate(double) const override { return inv_eps_sq_; }
  double mean_velocity(double) const override { return mean_velocity_; }
  double variance(double) const override { return inv_eps_sq_; }
  double d_inv_rate(double) const override { return 0.0; }
  double d_variance(double) const override { return 0.0; }
  double epsilon() const override { return eps_; }
  std::string name() const override { return "homogeneous"; }

 private:
  double eps_;
  double inv_eps_sq_;
  double mean_velocity_;
};

/// Fusion-relevant heterogeneous background on the periodic unit domain:
///   T_i(x)      = 5.5 + 4.5 cos(2 pi x)                      [eV]
///   sigma_p^2   = (1e-7/eps^2) * e T_i(x) / m_p              [m^2 s^-2]
///   R           = (1e-7/eps^2) * rho_i 3.2e-15 (T_i/0.026)^{1/2}  [s^-1]
///   u_p(x)      = 100 + sin(6 pi x) / (6 pi)                 [m s^-1]
///
/// Constants are stored at the precision used in the source profile
/// (e = 1.60e-19, m_p = 1.67e-27); higher-precision CODATA values would
/// shift results well below statistical noise.
class FusionBackground final : public Background {
 public:
  explicit FusionBackground(double eps)
      : eps_(eps), scale_(1.0e-7 / (eps * eps)) {}

  static constexpr double kElectronVolt = 1.60e-19;  // J/eV
  static constexpr double kIonMass = 1.67e-27;       // kg
  static constexpr double kIonDensity = 1.0e21;
  static constexpr double kRateFactor = 3.2e-15;
  static constexpr double kRefTemperature = 0.026;  // eV

  static double ion_temperature(double x) {
    return 5.5 + 4.5 * std::cos(2.0 * kPi * wrap_unit(x));
  }

  double rate(double x) const override {
    return scale_ * unscaled_rate(wrap_unit(x));
  }

  double mean_velocity(double x) const override {
    const double xw = wrap_unit(x);
    return 100.0 + std::sin(6.0 * kPi * xw) / (6.0 * kPi);
  }

  double variance(double x) const override {
    return scale_ * kElectronVolt * ion_temperature(x) / kIonMass;
  }

  // 1/R = (T/0.026)^{-1/2} / (scale * rho_i * 3.2e-15), so
  // d/dx (1/R) = -T'(x) / (2 * 0.026 * (T/0.026)^{3/2} * scale * c).
  double d_inv_rate(double x) const override {
    const double xw = wrap_unit(x);
    const double temp = ion_temperature(xw);
    const double d_temp = -4.5 * 2.0 * kPi * std::sin(2.0 * kPi * xw);
    const double ratio = temp / kRefTemperature;
    const double c = scale_ * kIonDensity * kRateFactor;
    return -0.5 * d_temp / (kRefTemperature * c * ratio * std::sqrt(ratio));
  }

  double d_variance(double x) const override {
    const double xw = wrap_unit(x);
    const double d_temp = -4.5 * 2.0 * kPi * std::sin(2.0 * kPi * xw);
    return scale_ * kElectronVolt * d_temp / kIonMass;
  }

  double epsilon() const override { return eps_; }
  std::string name() const override { return "fusion"; }

 private:
  static constexpr double kPi = 3.14159265358979323846;

  double unscaled_rate(double xw) const {
    const double ratio = ion_temperature(xw) / kRefTemperature;
    return kIonDensity * kRateFactor * std::sqrt(ratio);
  }

  double eps_;
  double scale_;
};

}  // namespace kdmc
