// SPDX-License-Identifier: Apache-2.0
// Part of mabeam: movable-antenna beamforming solver suite.
#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <vector>

#include "mabeam/placement.hpp"

// Benders cuts over placements.  Both kinds are affine in the placement
// selection: value(pos) = constant + sum_m coeff(m, pos[m]).  An optimality
// cut lower-bounds the achievable power (eta >= value); a feasibility cut
// excludes placements with value > 0 (up to the master's tolerance).

namespace mabeam {

enum class CutKind { Optimality, Feasibility };

struct CutRecord {
  CutKind kind = CutKind::Optimality;
  double constant = 0.0;        // watts (feasibility cuts: slack units)
  Eigen::MatrixXd coeff;        // M x N per-(antenna, position) coefficients
  int iteration = 0;            // GBD iteration that generated the cut
  double generator_value = 0.0; // value at the generating placement
  PlacementIndices generator;   // the generating placement
};

// value(pos) = constant + sum_m coeff(m, pos[m]).  The linear part is summed
// antenna-major (left to right) so that every other evaluator in the artifact
// (branch-and-bound leaves, bound computations, the exported-MILP text) can
// reproduce the result bit for bit by summing in the same order.
inline double evaluate_cut(const CutRecord& cut, const PlacementIndices& pos) {
  if (static_cast<int>(pos.size()) != cut.coeff.rows())
    throw std::invalid_argument("evaluate_cut: placement size must match cut rows");
  double lin = 0.0;
  for (std::size_t m = 0; m < pos.size(); ++m) {
    if (pos[m] < 0 || pos[m] >= cut.coeff.cols())
      throw std::invalid_argument("evaluate_cut: position index out of range");
    lin += cut.coeff(static_cast<int>(m), pos[m]);
  }
  return cut.constant + lin;
}

}  // namespace mabeam
