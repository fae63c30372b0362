// SPDX-License-Identifier: Apache-2.0
// Part of mabeam: movable-antenna beamforming solver suite.
#include <catch2/catch_amalgamated.hpp>

#include "mabeam/grid.hpp"

using namespace mabeam;

TEST_CASE("grid size follows side/step + 1 per axis") {
  // 0.12/0.01 evaluates to 11.999...98 in binary; the builder must still
  // recognize it as 12 steps.
  const PositionGrid g = build_grid(2.0, 0.06, 0.01);
  CHECK(g.side == 13);
  CHECK(g.size() == 169);
  CHECK(g.side_length == Catch::Approx(0.12));

  const PositionGrid h = build_grid(2.0, 0.06, 0.03);
  CHECK(h.side == 5);
  CHECK(h.size() == 25);
}

TEST_CASE("degenerate two-step grid enumerates row-major from the origin") {
  const PositionGrid g = build_grid(1.0, 0.06, 0.06);
  REQUIRE(g.size() == 4);
  CHECK(g.positions[0] == Eigen::Vector2d(0.0, 0.0));
  CHECK(g.positions[1] == Eigen::Vector2d(0.06, 0.0));
  CHECK(g.positions[2] == Eigen::Vector2d(0.0, 0.06));
  CHECK(g.positions[3] == Eigen::Vector2d(0.06, 0.06));
}

TEST_CASE("neighboring positions differ by exactly the step in one axis") {
  const PositionGrid g = build_grid(2.0, 0.06, 0.03);
  for (int iy = 0; iy < g.side; ++iy)
    for (int ix = 0; ix + 1 < g.side; ++ix) {
      const auto d = g.positions[iy * g.side + ix + 1] - g.positions[iy * g.side + ix];
      CHECK(d.x() == Catch::Approx(g.step).margin(1e-15));
      CHECK(d.y() == 0.0);
    }
  for (int iy = 0; iy + 1 < g.side; ++iy) {
    const auto d = g.positions[(iy + 1) * g.side] - g.positions[iy * g.side];
    CHECK(d.x() == 0.0);
    CHECK(d.y() == Catch::Approx(g.step).margin(1e-15));
  }
}

TEST_CASE("grid rejects a step that does not tile the region") {
  CHECK_THROWS_AS(build_grid(1.0, 0.06, 0.05), std::invalid_argument);
  CHECK_THROWS_AS(build_grid(1.0, 0.06, 0.07), std::invalid_argument);
  CHECK_THROWS_AS(build_grid(1.0, 0.06, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(build_grid(0.0, 0.06, 0.01), std::invalid_argument);
  CHECK_THROWS_AS(build_grid(1.0, -0.06, 0.01), std::invalid_argument);
}

TEST_CASE("distance matrix is symmetric with zero diagonal") {
  PositionGrid g;
  g.step = 0.01;
  g.side = 2;
  g.positions = {{0.0, 0.0}, {0.01, 0.0}, {0.0, 0.0}, {0.03, 0.04}};
  const Eigen::MatrixXd d = distance_matrix(g);
  CHECK(d(0, 1) == Catch::Approx(0.01));
  CHECK(d(0, 3) == Catch::Approx(0.05));  // 3-4-5 triangle
  for (int i = 0; i < 4; ++i) {
    CHECK(d(i, i) == 0.0);
    for (int j = 0; j < 4; ++j) CHECK(d(i, j) == d(j, i));
  }
}

TEST_CASE("distance matrix of a real grid matches direct recomputation") {
  const PositionGrid g = build_grid(2.0, 0.06, 0.03);
  const Eigen::MatrixXd d = distance_matrix(g);
  REQUIRE(d.rows() == g.size());
  for (int i = 0; i < g.size(); ++i)
    for (int j = 0; j < g.size(); ++j)
      CHECK(d(i, j) == Catch::Approx((g.positions[i] - g.positions[j]).norm()).margin(1e-15));
}
