// SPDX-License-Identifier: Apache-2.0
// Part of mabeam: movable-antenna beamforming solver suite.
#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <stdexcept>

#include "mabeam/grid.hpp"
#include "mabeam/rng.hpp"

namespace mabeam {

// Per-user multipath geometry and fading: L_p far-field departure paths per
// user, each with elevation theta, azimuth phi and a complex response sigma.
// Angles use the hemisphere in front of the array, theta, phi in
// [-pi/2, pi/2].
struct PathParams {
  int num_users = 0;
  int num_paths = 0;               // L_p
  double alpha = 0.0;              // path-loss exponent
  double ref_gain = 0.0;           // reference gain at 1 m (linear)
  Eigen::VectorXd user_distance;   // K, BS-user distance [m]
  Eigen::MatrixXd theta;           // K x L_p elevation [rad]
  Eigen::MatrixXd phi;             // K x L_p azimuth [rad]
  Eigen::MatrixXcd sigma;          // K x L_p complex path responses
};

// Channels evaluated on the candidate grid.  base(k, n) is the channel from
// candidate position n to user k; stacked is base tiled horizontally once per
// antenna (all movable elements share the same candidate grid), giving the
// K x (M*N) matrix the lifted solver works with.
struct ChannelSet {
  int num_antennas = 0;       // M
  int num_positions = 0;      // N
  Eigen::MatrixXcd base;      // K x N
  Eigen::MatrixXcd stacked;   // K x M*N
  Eigen::VectorXd noise_w;    // K, noise power [W]
};

// Draws angles, user distances and path responses.  Elevation follows the
// density cos(theta)/2 on [-pi/2, pi/2] (sampled exactly by the inverse CDF
// theta = arcsin(2u - 1)), azimuth is uniform, and each path response is
// CN(0, ref_gain * distance^-alpha).  Geometry (distances + angles) and
// fading (responses) come from two separate streams so experiments can pin
// the geometry while redrawing fading.
inline PathParams sample_paths(int num_users, int num_paths, double dist_lo, double dist_hi,
                               double alpha, double ref_gain, std::uint64_t geometry_seed,
                               std::uint64_t fading_seed) {
  if (num_users < 1 || num_paths < 1)
    throw std::invalid_argument("sample_paths: need at least one user and one path");
  if (alpha <= 0.0) throw std::invalid_argument("sample_paths: path-loss exponent must be positive");
  if (ref_gain <= 0.0) throw std::invalid_argument("sample_paths: reference gain must be positive");
  if (dist_lo <= 0.0 || dist_hi < dist_lo)
    throw std::invalid_argument("sample_paths: invalid distance range");

  // Tagged mixing keeps the two streams independent even when the caller
  // passes the same seed for both (the single-seed overload).
  Rng geom(mix_seed(geometry_seed, 0x67656f6d));
  Rng fade(mix_seed(fading_seed, 0x66616465));
  PathParams p;
  p.num_users = num_users;
  p.num_paths = num_paths;
  p.alpha = alpha;
  p.ref_gain = ref_gain;
  p.user_distance.resize(num_users);
  p.theta.resize(num_users, num_paths);
  p.phi.resize(num_users, num_paths);
  p.sigma.resize(num_users, num_paths);
  constexpr double half_pi = std::numbers::pi / 2.0;
  for (int k = 0; k < num_users; ++k) {
    p.user_distance(k) = geom.uniform(dist_lo, dist_hi);
    const double var = ref_gain * std::pow(p.user_distance(k), -alpha);
    for (int l = 0; l < num_paths; ++l) {
      p.theta(k, l) = std::asin(2.0 * geom.uniform01() - 1.0);
      p.phi(k, l) = geom.uniform(-half_pi, half_pi);
      p.sigma(k, l) = fade.complex_normal(var);
    }
  }
  return p;
}

// Convenience overload: one seed drives both streams (the default draw).
inline PathParams sample_paths(int num_users, int num_paths, double dist_lo, double dist_hi,
                               double alpha, double ref_gain, std::uint64_t seed) {
  return sample_paths(num_users, num_paths, dist_lo, dist_hi, alpha, ref_gain, seed, seed);
}

// Field-response vector of user k at candidate position pos: one unit-modulus
// entry per path, with phase (2*pi/wavelength) *
// ((x - x_ref) cos(theta) sin(phi) + (y - y_ref) sin(theta)).  The reference
// point is the first grid position, so the vector at the reference is all
// ones.
inline Eigen::VectorXcd field_response(const PathParams& paths, int user,
                                       const Eigen::Vector2d& pos, const Eigen::Vector2d& ref,
                                       double wavelength) {
  if (user < 0 || user >= paths.num_users)
    throw std::invalid_argument("field_response: user index out of range");
  const double dx = pos.x() - ref.x();
  const double dy = pos.y() - ref.y();
  const double two_pi_over_lambda = 2.0 * std::numbers::pi / wavelength;
  Eigen::VectorXcd g(paths.num_paths);
  for (int l = 0; l < paths.num_paths; ++l) {
    const double rho = two_pi_over_lambda * (dx * std::cos(paths.theta(user, l)) * std::sin(paths.phi(user, l)) +
                                             dy * std::sin(paths.theta(user, l)));
    g(l) = std::polar(1.0, rho);
  }
  return g;
}

// Channel from an arbitrary point to every user: sum of the path responses
// weighted by the field-response phases.  Shared by the grid channels and the
// antenna-selection baseline's off-grid planar array.
inline Eigen::VectorXcd point_channel(const PathParams& paths, const Eigen::Vector2d& pos,
                                      const Eigen::Vector2d& ref, double wavelength) {
  Eigen::VectorXcd h(paths.num_users);
  for (int k = 0; k < paths.num_users; ++k)
    h(k) = paths.sigma.row(k).transpose().cwiseProduct(field_response(paths, k, pos, ref, wavelength)).sum();
  return h;
}

// Evaluates the channels on the whole grid and tiles them once per antenna.
inline ChannelSet channel_matrix(const PathParams& paths, const PositionGrid& grid, int num_antennas,
                                 double wavelength, const Eigen::VectorXd& noise_w) {
  if (num_antennas < 1) throw std::invalid_argument("channel_matrix: need at least one antenna");
  if (noise_w.size() != paths.num_users || (noise_w.array() <= 0.0).any())
    throw std::invalid_argument("channel_matrix: noise powers must be positive, one per user");
  const int n = grid.size();
  ChannelSet cs;
  cs.num_antennas = num_antennas;
  cs.num_positions = n;
  cs.noise_w = noise_w;
  cs.base.resize(paths.num_users, n);
  const Eigen::Vector2d ref = grid.positions.front();
  for (int j = 0; j < n; ++j) cs.base.col(j) = point_channel(paths, grid.positions[j], ref, wavelength);
  cs.stacked.resize(paths.num_users, num_antennas * n);
  for (int m = 0; m < num_antennas; ++m) cs.stacked.middleCols(m * n, n) = cs.base;
  return cs;
}

// FNV-1a hash over the channel bytes; lets experiment rows certify that all
// schemes within a trial saw the identical channel draw.
inline std::uint64_t channel_hash(const ChannelSet& cs) {
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&h](const void* data, std::size_t bytes) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < bytes; ++i) {
      h ^= p[i];
      h *= 1099511628211ull;
    }
  };
  mix(cs.base.data(), sizeof(std::complex<double>) * cs.base.size());
  mix(cs.noise_w.data(), sizeof(double) * cs.noise_w.size());
  mix(&cs.num_antennas, sizeof(cs.num_antennas));
  return h;
}

}  // namespace mabeam
