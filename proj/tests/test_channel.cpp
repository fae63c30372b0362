// SPDX-License-Identifier: Apache-2.0
// Part of mabeam: movable-antenna beamforming solver suite.
#include <algorithm>
#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <numbers>
#include <vector>

#include "mabeam/channel.hpp"
#include "mabeam/rng.hpp"
#include "mabeam/scenario.hpp"

using namespace mabeam;

namespace {
PathParams fixed_single_path(double theta, double phi, std::complex<double> sigma) {
  PathParams p;
  p.num_users = 1;
  p.num_paths = 1;
  p.alpha = 2.0;
  p.ref_gain = 1.0;
  p.user_distance = Eigen::VectorXd::Constant(1, 1.0);
  p.theta = Eigen::MatrixXd::Constant(1, 1, theta);
  p.phi = Eigen::MatrixXd::Constant(1, 1, phi);
  p.sigma = Eigen::MatrixXcd::Constant(1, 1, sigma);
  return p;
}
}  // namespace

TEST_CASE("elevation inverse-CDF endpoints and median") {
  CHECK(std::asin(2.0 * 0.5 - 1.0) == Catch::Approx(0.0).margin(1e-15));
  CHECK(std::asin(2.0 * 1.0 - 1.0) == Catch::Approx(std::numbers::pi / 2));
  CHECK(std::asin(2.0 * 0.0 - 1.0) == Catch::Approx(-std::numbers::pi / 2));
}

TEST_CASE("sampled angles stay in range and distances in the requested interval") {
  const PathParams p = sample_paths(4, 16, 20.0, 100.0, 2.2, 1e-4, 77);
  CHECK((p.theta.array().abs() <= std::numbers::pi / 2).all());
  CHECK((p.phi.array().abs() <= std::numbers::pi / 2).all());
  CHECK((p.user_distance.array() >= 20.0).all());
  CHECK((p.user_distance.array() <= 100.0).all());
}

TEST_CASE("sample_paths rejects bad arguments") {
  CHECK_THROWS_AS(sample_paths(0, 1, 20, 100, 2.2, 1e-4, 1), std::invalid_argument);
  CHECK_THROWS_AS(sample_paths(1, 0, 20, 100, 2.2, 1e-4, 1), std::invalid_argument);
  CHECK_THROWS_AS(sample_paths(1, 1, 20, 100, -2.2, 1e-4, 1), std::invalid_argument);
  CHECK_THROWS_AS(sample_paths(1, 1, 20, 100, 0.0, 1e-4, 1), std::invalid_argument);
  CHECK_THROWS_AS(sample_paths(1, 1, 100, 20, 2.2, 1e-4, 1), std::invalid_argument);
  CHECK_THROWS_AS(sample_paths(1, 1, -5, 20, 2.2, 1e-4, 1), std::invalid_argument);
}

TEST_CASE("elevation empirical CDF tracks (sin(theta)+1)/2") {
  // Kolmogorov-Smirnov style check of the inverse-CDF sampler against the
  // analytic CDF of the cos(theta)/2 density.
  constexpr int draws = 100000;
  const PathParams p = sample_paths(1, draws, 50.0, 50.0, 2.2, 1e-4, 2024);
  std::vector<double> t(p.theta.data(), p.theta.data() + draws);
  std::sort(t.begin(), t.end());
  double sup = 0.0;
  for (int i = 0; i < draws; ++i) {
    const double cdf = (std::sin(t[i]) + 1.0) / 2.0;
    sup = std::max(sup, std::abs(cdf - (i + 1.0) / draws));
    sup = std::max(sup, std::abs(cdf - static_cast<double>(i) / draws));
  }
  CHECK(sup < 0.01);
}

TEST_CASE("field response is all-ones at the reference position") {
  const PathParams p = sample_paths(2, 8, 20.0, 100.0, 2.2, 1e-4, 5);
  const Eigen::VectorXcd g = field_response(p, 0, {0.0, 0.0}, {0.0, 0.0}, 0.06);
  REQUIRE(g.size() == 8);
  for (int l = 0; l < g.size(); ++l) CHECK(std::abs(g(l) - 1.0) < 1e-15);
}

TEST_CASE("field response has unit modulus and the documented phase") {
  // theta=0, phi=pi/2, dx=lambda/2 -> phase pi, entry -1.
  const double lambda = 0.06;
  PathParams p = fixed_single_path(0.0, std::numbers::pi / 2, 1.0);
  Eigen::VectorXcd g = field_response(p, 0, {lambda / 2, 0.0}, {0.0, 0.0}, lambda);
  CHECK(std::abs(g(0) - std::complex<double>(-1.0, 0.0)) < 1e-12);

  // theta=pi/2: x-term vanishes, phase = 2*pi*dy/lambda regardless of phi.
  p = fixed_single_path(std::numbers::pi / 2, 0.3, 1.0);
  g = field_response(p, 0, {0.02, lambda / 4}, {0.0, 0.0}, lambda);
  CHECK(std::abs(g(0) - std::complex<double>(0.0, 1.0)) < 1e-12);

  const PathParams q = sample_paths(1, 32, 20.0, 100.0, 2.2, 1e-4, 9);
  const Eigen::VectorXcd r = field_response(q, 0, {0.05, 0.11}, {0.0, 0.0}, lambda);
  for (int l = 0; l < r.size(); ++l) CHECK(std::abs(r(l)) == Catch::Approx(1.0).margin(1e-14));
}

TEST_CASE("single unit path gives unit channel at the reference") {
  const PathParams p = fixed_single_path(0.4, -0.2, 1.0);
  PositionGrid grid = build_grid(1.0, 0.06, 0.03);
  const ChannelSet cs = channel_matrix(p, grid, 2, 0.06, Eigen::VectorXd::Constant(1, 1.0));
  CHECK(std::abs(cs.base(0, 0) - 1.0) < 1e-15);
}

TEST_CASE("stacked channel tiles the base matrix once per antenna") {
  const PathParams p = sample_paths(3, 8, 20.0, 100.0, 2.2, 1e-4, 11);
  const PositionGrid grid = build_grid(1.0, 0.06, 0.03);
  const ChannelSet cs = channel_matrix(p, grid, 3, 0.06, Eigen::VectorXd::Constant(3, 1e-11));
  const int n = grid.size();
  REQUIRE(cs.stacked.cols() == 3 * n);
  for (int m = 0; m < 3; ++m)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < 3; ++k) CHECK(cs.stacked(k, m * n + j) == cs.base(k, j));
}

TEST_CASE("mean squared channel matches num_paths * ref_gain * distance^-alpha") {
  // The path responses are independent CN(0, ref_gain * D^-alpha) and the
  // phase factors are unit modulus, so |h|^2 has mean L_p * that variance.
  constexpr int draws = 10000;
  const double dist = 60.0, alpha = 2.2, ref_gain = 1e-4;
  const int num_paths = 8;
  const double expect = num_paths * ref_gain * std::pow(dist, -alpha);
  const PositionGrid grid = build_grid(1.0, 0.06, 0.03);
  double acc = 0.0;
  for (int r = 0; r < draws; ++r) {
    const PathParams p = sample_paths(1, num_paths, dist, dist, alpha, ref_gain, 1000 + r);
    const ChannelSet cs = channel_matrix(p, grid, 1, 0.06, Eigen::VectorXd::Constant(1, 1.0));
    acc += std::norm(cs.base(0, grid.size() / 2));
  }
  const double mean = acc / draws;
  CHECK(std::abs(mean - expect) / expect < 0.05);
}

TEST_CASE("identical seeds reproduce the channel bytes, distinct seeds differ") {
  ScenarioConfig cfg;
  cfg.num_users = 2;
  cfg.num_antennas = 2;
  const Scenario a = build_scenario(cfg, 42, 42);
  const Scenario b = build_scenario(cfg, 42, 42);
  const Scenario c = build_scenario(cfg, 43, 43);
  CHECK(a.channels.base == b.channels.base);
  CHECK(channel_hash(a.channels) == channel_hash(b.channels));
  CHECK(channel_hash(a.channels) != channel_hash(c.channels));
}

TEST_CASE("geometry stream can be pinned while fading is redrawn") {
  ScenarioConfig cfg;
  const Scenario a = build_scenario(cfg, 7, 100);
  const Scenario b = build_scenario(cfg, 7, 101);
  CHECK(a.paths.theta == b.paths.theta);
  CHECK(a.paths.phi == b.paths.phi);
  CHECK(a.paths.user_distance == b.paths.user_distance);
  CHECK(a.paths.sigma != b.paths.sigma);
}

TEST_CASE("dBm/watts conversions are consistent") {
  CHECK(dbm_to_watts(-80.0) == Catch::Approx(1e-11));
  CHECK(watts_to_dbm(dbm_to_watts(-37.5)) == Catch::Approx(-37.5).margin(1e-9));
  CHECK(db_to_linear(10.0) == Catch::Approx(10.0));
}

TEST_CASE("gamma targets broadcast or per-user, rejecting mismatches") {
  ScenarioConfig cfg;
  cfg.num_users = 3;
  cfg.gamma_db = {10.0};
  CHECK(expand_gamma_linear(cfg).size() == 3);
  cfg.gamma_db = {5.0, 10.0, 15.0};
  const Eigen::VectorXd g = expand_gamma_linear(cfg);
  CHECK(g(2) == Catch::Approx(db_to_linear(15.0)));
  cfg.gamma_db = {5.0, 10.0};
  CHECK_THROWS_AS(expand_gamma_linear(cfg), std::invalid_argument);
}
