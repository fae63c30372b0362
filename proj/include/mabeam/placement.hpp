// SPDX-License-Identifier: Apache-2.0
// Part of mabeam: movable-antenna beamforming solver suite.
#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <vector>

#include "mabeam/channel.hpp"

// A placement assigns each transmit antenna one index into the candidate
// position grid.  The equivalent algebraic objects (one-hot vectors b_m and
// the block-diagonal selection matrix B with B^H B = I) are derived on demand.

namespace mabeam {

using PlacementIndices = std::vector<int>;

inline void validate_placement(const PlacementIndices& pos, int num_positions) {
  if (pos.empty()) throw std::invalid_argument("placement: at least one antenna required");
  for (int n : pos)
    if (n < 0 || n >= num_positions) throw std::invalid_argument("placement: position index out of range");
}

// Pairwise separation: every antenna pair at least dmin apart.
inline bool pairwise_feasible(const PlacementIndices& pos, const Eigen::MatrixXd& dist, double dmin) {
  for (std::size_t a = 0; a < pos.size(); ++a)
    for (std::size_t b = a + 1; b < pos.size(); ++b)
      if (dist(pos[a], pos[b]) < dmin) return false;
  return true;
}

// Block selection matrix B (MN x M): column m carries the one-hot b_m in its
// own N-row block, so that (channel.stacked * B) picks antenna m's channel
// column and B's columns are orthonormal.
inline Eigen::MatrixXd selection_matrix(const PlacementIndices& pos, int num_positions) {
  validate_placement(pos, num_positions);
  const int m = static_cast<int>(pos.size());
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(m * num_positions, m);
  for (int a = 0; a < m; ++a) b(a * num_positions + pos[a], a) = 1.0;
  return b;
}

// Effective K x M channel for a fixed placement: stacked-channel columns
// selected by B (bitwise equal to channel.stacked * B since B is one-hot).
inline Eigen::MatrixXcd effective_channel(const ChannelSet& channel, const PlacementIndices& pos) {
  if (static_cast<int>(pos.size()) != channel.num_antennas)
    throw std::invalid_argument("effective_channel: placement size must match antenna count");
  validate_placement(pos, channel.num_positions);
  Eigen::MatrixXcd h(channel.base.rows(), pos.size());
  for (std::size_t a = 0; a < pos.size(); ++a)
    h.col(a) = channel.stacked.col(a * channel.num_positions + pos[a]);
  return h;
}

}  // namespace mabeam
