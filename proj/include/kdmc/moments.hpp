// Copyright (c) 2026 the kdmc developers.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>

namespace kdmc {

/// Per-cell accumulators for the time-integrated moments m0, m1, m2 on a
/// uniform mesh over the periodic unit domain. Weights are expected to
/// carry the 1/I mass fraction already (w = total mass / I), so finalize()
/// only packages the accumulators; no further normalization is applied.
///
/// Unit bookkeeping per cell: m0 in time*mass, m1 in length*mass,
/// m2 in length^2*mass/time.
struct MomentGrid {
  explicit MomentGrid(int cell_count)
      : cells(cell_count),
        cell_width(1.0 / cell_count),
        m0(Eigen::ArrayXd::Zero(cell_count)),
        m1(Eigen::ArrayXd::Zero(cell_count)),
        m2(Eigen::ArrayXd::Zero(cell_count)) {}

  int cells;
  double cell_width;
  Eigen::ArrayXd m0;
  Eigen::ArrayXd m1;
  Eigen::ArrayXd m2;

  MomentGrid& operator+=(const MomentGrid& other) {
    m0 += other.m0;
    m1 += other.m1;
    m2 += other.m2;
    return *this;
  }

  Eigen::ArrayXd cell_centers() const {
    Eigen::ArrayXd x(cells);
    for (int j = 0; j < cells; ++j) x[j] = (j + 0.5) * cell_width;
    return x;
  }

  int cell_of(double x) const {
    int j = static_cast<int>(x * cells);
    if (j < 0) j = 0;
    if (j >= cells) j = cells - 1;
    return j;
  }
};

/// Track-length scoring of one kinetic flight starting at x_start (in
/// [0,1)) with velocity v and duration tau. The flight path is split at
/// cell boundaries and periodic wraps; time dt spent in a cell adds
/// w*dt to m0, w*v*dt to m1 and w*v^2/2*dt to m2 (equivalently, with
/// in-cell path length ds = |v| dt: w*ds/|v|, w*sign(v)*ds, w*|v|*ds/2).
/// A zero-velocity flight deposits w*tau into m0 of its containing cell.
void score_flight(MomentGrid& grid, double x_start, double v, double tau,
                  double w);

/// Start-cell indicator variant: the whole flight is credited to the cell
/// containing x_start. Kept for A/B comparison with the path-split
/// estimator; higher variance, not the default.
void score_flight_start_cell(MomentGrid& grid, double x_start, double v,
                             double tau, double w);

/// Finalized per-cell moments (weights already carry the 1/I prefactor).
struct MomentTable {
  Eigen::ArrayXd x_center;
  Eigen::ArrayXd m0;
  Eigen::ArrayXd m1;
  Eigen::ArrayXd m2;

  const Eigen::ArrayXd& moment(int l) const {
    return l == 0 ? m0 : (l == 1 ? m1 : m2);
  }

  MomentTable& operator+=(const MomentTable& other) {
    m0 += other.m0;
    m1 += other.m1;
    m2 += other.m2;
    return *this;
  }
};

inline MomentTable finalize(const MomentGrid& grid) {
  return {grid.cell_centers(), grid.m0, grid.m1, grid.m2};
}

}  // namespace kdmc
