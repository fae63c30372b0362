// SPDX-License-Identifier: Apache-2.0
// Part of mabeam: movable-antenna beamforming solver suite.
#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "mabeam/channel.hpp"
#include "mabeam/grid.hpp"

namespace mabeam {

inline double dbm_to_watts(double dbm) { return std::pow(10.0, dbm / 10.0) / 1000.0; }
inline double watts_to_dbm(double watts) { return 10.0 * std::log10(watts * 1000.0); }
inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

// Everything needed to instantiate one problem: array/user sizes, the
// candidate lattice, the multipath statistics and the per-user requirements.
// gamma_db may hold a single value (broadcast to all users) or one per user.
struct ScenarioConfig {
  double lambda_m = 0.06;             // carrier wavelength [m]
  double area_scale_l = 1.0;          // region side = area_scale_l * lambda_m
  double step_d_m = 0.03;             // lattice step [m]
  int num_antennas = 2;               // M
  int num_users = 2;                  // K
  int num_paths = 8;                  // L_p
  double alpha = 2.2;                 // path-loss exponent
  double ref_gain = 1e-4;             // reference path gain at 1 m
  double dmin_m = 0.015;              // minimum antenna separation [m]
  double noise_dbm = -80.0;           // per-user noise power
  double dist_lo_m = 20.0;            // user distance range
  double dist_hi_m = 100.0;
  std::vector<double> gamma_db{10.0}; // per-user SINR targets [dB]
  std::uint64_t seed = 1;
};

// A fully materialized instance: lattice, distances, channels and linear
// targets.  Immutable after construction; safe to share across workers.
struct Scenario {
  ScenarioConfig config;
  PositionGrid grid;
  Eigen::MatrixXd distances;   // N x N
  PathParams paths;
  ChannelSet channels;
  Eigen::VectorXd gamma_lin;   // K
  Eigen::VectorXd noise_w;     // K
};

inline Eigen::VectorXd expand_gamma_linear(const ScenarioConfig& cfg) {
  const std::size_t k = static_cast<std::size_t>(cfg.num_users);
  if (cfg.gamma_db.size() != 1 && cfg.gamma_db.size() != k)
    throw std::invalid_argument("scenario: gamma_db must hold one value or one per user");
  Eigen::VectorXd g(cfg.num_users);
  for (int i = 0; i < cfg.num_users; ++i)
    g(i) = db_to_linear(cfg.gamma_db.size() == 1 ? cfg.gamma_db[0] : cfg.gamma_db[i]);
  if ((g.array() <= 0.0).any()) throw std::invalid_argument("scenario: SINR targets must be positive");
  return g;
}

// Builds a scenario with separate geometry/fading streams (see sample_paths).
inline Scenario build_scenario(const ScenarioConfig& cfg, std::uint64_t geometry_seed,
                               std::uint64_t fading_seed) {
  Scenario s;
  s.config = cfg;
  s.grid = build_grid(cfg.area_scale_l, cfg.lambda_m, cfg.step_d_m);
  s.distances = distance_matrix(s.grid);
  s.paths = sample_paths(cfg.num_users, cfg.num_paths, cfg.dist_lo_m, cfg.dist_hi_m, cfg.alpha,
                         cfg.ref_gain, geometry_seed, fading_seed);
  s.noise_w = Eigen::VectorXd::Constant(cfg.num_users, dbm_to_watts(cfg.noise_dbm));
  s.channels = channel_matrix(s.paths, s.grid, cfg.num_antennas, cfg.lambda_m, s.noise_w);
  s.gamma_lin = expand_gamma_linear(cfg);
  return s;
}

inline Scenario build_scenario(const ScenarioConfig& cfg) {
  return build_scenario(cfg, cfg.seed, cfg.seed);
}

}  // namespace mabeam
