// Copyright (c) 2026 the kdmc developers.
// SPDX-License-Identifier: Apache-2.0

#include "kdmc/moments.hpp"

#include <cmath>

namespace kdmc {

namespace {

inline void deposit(MomentGrid& grid, int cell, double v, double dt, double w) {
  grid.m0[cell] += w * dt;
  grid.m1[cell] += w * v * dt;
  grid.m2[cell] += w * v * v * dt * 0.5;
}

}  // namespace

void score_flight(MomentGrid& grid, double x_start, double v, double tau,
                  double w) {
  if (tau <= 0.0) return;
  if (v == 0.0) {
    deposit(grid, grid.cell_of(x_start), 0.0, tau, w);
    return;
  }

  const double speed = std::abs(v);
  const double path = speed * tau;
  const int cells = grid.cells;
  const double dx = grid.cell_width;

  // Whole domain traversals contribute dx/|v| of time to every cell.
  const double periods = std::floor(path);
  if (periods > 0.0) {
    const double dt_cell = periods * dx / speed;
    const double c0 = w * dt_cell;
    grid.m0 += c0;
    grid.m1 += c0 * v;
    grid.m2 += c0 * v * v * 0.5;
  }

  // Walk the remaining sub-period path across cells.
  double remaining = path - periods;
  int cell = grid.cell_of(x_start);
  double x = x_start;
  while (remaining > 0.0) {
    double to_boundary;
    if (v > 0.0) {
      to_boundary = (cell + 1) * dx - x;
      if (to_boundary <= 0.0) to_boundary = dx;  // start exactly on boundary
    } else {
      to_boundary = x - cell * dx;
      if (to_boundary <= 0.0) {
        // Starting exactly on a cell edge while moving left: the flight is
        // immediately inside the cell below.
        cell = (cell > 0) ? cell - 1 : cells - 1;
        to_boundary = dx;
      }
    }
    const double step = to_boundary < remaining ? to_boundary : remaining;
    deposit(grid, cell, v, step / speed, w);
    remaining -= step;
    if (remaining <= 0.0) break;
    if (v > 0.0) {
      cell = (cell + 1 < cells) ? cell + 1 : 0;
      x = cell * dx;
    } else {
      cell = (cell > 0) ? cell - 1 : cells - 1;
      x = (cell + 1) * dx;
    }
  }
}

void score_flight_start_cell(MomentGrid& grid, double x_start, double v,
                             double tau, double w) {
  if (tau <= 0.0) return;
  deposit(grid, grid.cell_of(x_start), v, tau, w);
}

}  // namespace kdmc
