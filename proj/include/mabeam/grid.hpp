// SPDX-License-Identifier: Apache-2.0
// Part of mabeam: movable-antenna beamforming solver suite.
#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace mabeam {

// Candidate-position lattice for the movable transmit antennas: a square
// region of side area_scale * wavelength quantized with step d, anchored at
// the origin.  Position 0 is (0,0); ordering is row-major with y as the outer
// axis and x as the inner axis, so index n maps to
// (x, y) = ((n % side) * d, (n / side) * d).
struct PositionGrid {
  double step = 0.0;                       // lattice spacing d [m]
  double side_length = 0.0;                // region side [m]
  int side = 0;                            // points per axis
  std::vector<Eigen::Vector2d> positions;  // size N = side^2

  int size() const { return static_cast<int>(positions.size()); }
};

// Builds the lattice.  The step must tile the region side exactly; because
// side/d is computed in floating point (e.g. 0.12/0.01 = 11.999...98), the
// divisibility check rounds to the nearest integer and accepts a 1e-9
// relative defect rather than truncating.
inline PositionGrid build_grid(double area_scale, double wavelength, double step) {
  if (area_scale <= 0.0 || wavelength <= 0.0)
    throw std::invalid_argument("build_grid: area scale and wavelength must be positive");
  const double side_len = area_scale * wavelength;
  if (step <= 0.0 || step > side_len)
    throw std::invalid_argument("build_grid: step must lie in (0, side length]");
  const double ratio = side_len / step;
  const double steps = std::round(ratio);
  if (std::abs(ratio - steps) > 1e-9 * std::max(1.0, ratio))
    throw std::invalid_argument("build_grid: step does not tile the region side exactly");

  PositionGrid grid;
  grid.step = step;
  grid.side_length = side_len;
  grid.side = static_cast<int>(steps) + 1;
  grid.positions.reserve(static_cast<std::size_t>(grid.side) * grid.side);
  for (int iy = 0; iy < grid.side; ++iy)
    for (int ix = 0; ix < grid.side; ++ix)
      grid.positions.emplace_back(ix * step, iy * step);
  return grid;
}

// Pairwise Euclidean distances between candidate positions (symmetric, zero
// diagonal).  Used by the minimum-separation constraint and its Glover
// linearization.
inline Eigen::MatrixXd distance_matrix(const PositionGrid& grid) {
  const int n = grid.size();
  Eigen::MatrixXd d(n, n);
  for (int i = 0; i < n; ++i) {
    d(i, i) = 0.0;
    for (int j = 0; j < i; ++j) {
      const double dist = (grid.positions[i] - grid.positions[j]).norm();
      d(i, j) = dist;
      d(j, i) = dist;
    }
  }
  return d;
}

}  // namespace mabeam
