// SPDX-License-Identifier: Apache-2.0
// Part of mabeam: movable-antenna beamforming solver suite.
#include <Eigen/Dense>
#include <catch2/catch_amalgamated.hpp>
#include <limits>
#include <random>
#include <sstream>

#include "mabeam/cuts.hpp"
#include "mabeam/grid.hpp"
#include "mabeam/master.hpp"
#include "mabeam/placement.hpp"
#include "mabeam/scenario.hpp"
#include "support/milp_text.hpp"

using namespace mabeam;
using Catch::Approx;

namespace {

// Exhaustive reference: every ordered assignment, same cut evaluation and
// feasibility comparisons as the master contract, lexicographic tie-break.
MasterSolution reference_master(int m_count, const Eigen::MatrixXd& dist, double dmin,
                                const std::vector<CutRecord>& cuts, double feas_tol = 1e-5) {
  const int n = static_cast<int>(dist.rows());
  MasterSolution best;
  std::vector<int> pos(m_count, 0);
  while (true) {
    if (pairwise_feasible(pos, dist, dmin)) {
      ++best.nodes;  // nodes := count of distance-feasible assignments
      bool ok = true;
      double eta = -std::numeric_limits<double>::infinity();
      bool any_opt = false;
      for (const CutRecord& c : cuts) {
        if (c.kind == CutKind::Feasibility) {
          double lin = 0.0;
          for (int m = 0; m < m_count; ++m) lin += c.coeff(m, pos[m]);
          if (lin > feas_tol - c.constant) {
            ok = false;
            break;
          }
        } else {
          any_opt = true;
          eta = std::max(eta, evaluate_cut(c, pos));
        }
      }
      if (ok) {
        if (!any_opt) eta = 0.0;
        if (best.status == MasterStatus::Infeasible || eta < best.eta) {
          best.status = MasterStatus::Optimal;
          best.eta = eta;
          best.placement = pos;
        }
      }
    }
    int d = m_count - 1;
    while (d >= 0 && pos[d] == n - 1) pos[d--] = 0;
    if (d < 0) break;
    ++pos[d];
  }
  best.proved_optimal = best.status == MasterStatus::Optimal;
  return best;
}

CutRecord make_cut(CutKind kind, double constant, const Eigen::MatrixXd& coeff) {
  CutRecord c;
  c.kind = kind;
  c.constant = constant;
  c.coeff = coeff;
  return c;
}

}  // namespace

TEST_CASE("selection matrix is one-hot with orthonormal columns") {
  const PlacementIndices pos{2, 0, 3};
  const Eigen::MatrixXd b = selection_matrix(pos, 4);
  REQUIRE(b.rows() == 12);
  REQUIRE(b.cols() == 3);
  CHECK((b.transpose() * b - Eigen::MatrixXd::Identity(3, 3)).norm() == 0.0);
  CHECK(b(2, 0) == 1.0);
  CHECK(b(4, 1) == 1.0);
  CHECK(b(11, 2) == 1.0);
  CHECK(b.sum() == 3.0);
  CHECK_THROWS_AS(selection_matrix({4}, 4), std::invalid_argument);
  CHECK_THROWS_AS(selection_matrix({}, 4), std::invalid_argument);
}

TEST_CASE("effective channel equals the stacked channel times B") {
  ScenarioConfig cfg;
  cfg.num_antennas = 2;
  cfg.area_scale_l = 1;
  const Scenario sc = build_scenario(cfg);
  const PlacementIndices pos{1, 4};
  const Eigen::MatrixXcd h = effective_channel(sc.channels, pos);
  const Eigen::MatrixXd b = selection_matrix(pos, sc.channels.num_positions);
  const Eigen::MatrixXcd via_product = sc.channels.stacked * b.cast<std::complex<double>>();
  CHECK((h - via_product).norm() == 0.0);
  // tiling means both antennas read from the same base column set
  CHECK((h.col(0) - sc.channels.base.col(1)).norm() == 0.0);
  CHECK((h.col(1) - sc.channels.base.col(4)).norm() == 0.0);
  CHECK_THROWS_AS(effective_channel(sc.channels, {1}), std::invalid_argument);
}

TEST_CASE("pairwise feasibility against the distance matrix") {
  Eigen::MatrixXd d(3, 3);
  d << 0, 1, 2, 1, 0, 1, 2, 1, 0;
  CHECK(pairwise_feasible({0, 2}, d, 1.5));
  CHECK_FALSE(pairwise_feasible({0, 1}, d, 1.5));
  CHECK_FALSE(pairwise_feasible({1, 1}, d, 0.5));  // same slot has distance 0
  CHECK(pairwise_feasible({2}, d, 100.0));         // single antenna: vacuous
}

TEST_CASE("cut evaluation is separable and tight at the generator") {
  Eigen::MatrixXd l(2, 3);
  l << 0.5, -0.25, 0.0, 1.0, 0.125, -0.5;
  CutRecord cut = make_cut(CutKind::Optimality, 2.0, l);
  CHECK(evaluate_cut(cut, {0, 1}) == 2.0 + 0.5 + 0.125);
  // all-zero coefficients: constant regardless of placement
  CutRecord flat = make_cut(CutKind::Optimality, 3.25, Eigen::MatrixXd::Zero(2, 3));
  CHECK(evaluate_cut(flat, {0, 0}) == 3.25);
  CHECK(evaluate_cut(flat, {2, 1}) == 3.25);
  // linearity: single-antenna swap changes the value by the coefficient delta
  const double a = evaluate_cut(cut, {0, 1});
  const double b = evaluate_cut(cut, {2, 1});
  CHECK(b - a == Approx(l(0, 2) - l(0, 0)));
  CHECK_THROWS_AS(evaluate_cut(cut, {0}), std::invalid_argument);
  CHECK_THROWS_AS(evaluate_cut(cut, {0, 7}), std::invalid_argument);
}

TEST_CASE("master with a constant cut returns it at the lex-smallest placement") {
  Eigen::MatrixXd d(3, 3);
  d << 0, 1, 2, 1, 0, 1, 2, 1, 0;
  std::vector<CutRecord> cuts{make_cut(CutKind::Optimality, 0.75, Eigen::MatrixXd::Zero(2, 3))};
  const MasterSolution sol = solve_master(2, d, 0.5, cuts);
  REQUIRE(sol.status == MasterStatus::Optimal);
  CHECK(sol.eta == 0.75);
  CHECK(sol.placement == PlacementIndices{0, 1});
  CHECK(sol.proved_optimal);
}

TEST_CASE("master follows a separable per-antenna minimum") {
  // coefficients zero except a -eps bonus at one position per antenna
  const double eps = 1e-3;
  Eigen::MatrixXd l = Eigen::MatrixXd::Zero(2, 4);
  l(0, 2) = -eps;
  l(1, 3) = -eps;
  Eigen::MatrixXd d(4, 4);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) d(i, j) = std::abs(i - j);
  std::vector<CutRecord> cuts{make_cut(CutKind::Optimality, 1.0, l)};
  const MasterSolution sol = solve_master(2, d, 1.0, cuts);
  REQUIRE(sol.status == MasterStatus::Optimal);
  CHECK(sol.placement == PlacementIndices{2, 3});
  CHECK(sol.eta == Approx(1.0 - 2 * eps));
}

TEST_CASE("corner grid with long minimum distance leaves only diagonal pairs") {
  // 2x2 grid of unit side: corners at distance 1 (edges) or sqrt(2) (diagonal)
  const PositionGrid grid = build_grid(1, 0.06, 0.06);  // 2x2
  REQUIRE(grid.size() == 4);
  const Eigen::MatrixXd d = distance_matrix(grid);
  const double dmin = 0.07;  // longer than an edge, shorter than the diagonal
  Eigen::MatrixXd l(2, 4);
  l << 0.1, 0.2, 0.3, 0.0, 0.4, 0.0, 0.25, 0.05;
  std::vector<CutRecord> cuts{make_cut(CutKind::Optimality, 1.0, l)};
  const MasterSolution sol = solve_master(2, d, dmin, cuts);
  const MasterSolution ref = reference_master(2, d, dmin, cuts);
  REQUIRE(sol.status == MasterStatus::Optimal);
  CHECK(sol.eta == ref.eta);
  CHECK(sol.placement == ref.placement);
  // diagonal pairs on this grid are (0,3) and (1,2) in either order
  const bool diagonal = (sol.placement == PlacementIndices{0, 3}) ||
                        (sol.placement == PlacementIndices{3, 0}) ||
                        (sol.placement == PlacementIndices{1, 2}) ||
                        (sol.placement == PlacementIndices{2, 1});
  CHECK(diagonal);
}

TEST_CASE("branch-and-bound ties exhaustive enumeration on random cut pools") {
  std::mt19937_64 eng(2024);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_int_distribution<int> n_pick(3, 9);
  std::uniform_int_distribution<int> m_pick(1, 3);
  std::uniform_int_distribution<int> cut_pick(1, 6);
  for (int trial = 0; trial < 40; ++trial) {
    const int n = n_pick(eng);
    const int m = m_pick(eng);
    // random symmetric distances in [0, 2), zero diagonal
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < i; ++j) d(i, j) = d(j, i) = std::abs(gauss(eng)) + 0.05;
    const double dmin = trial % 3 == 0 ? 0.0 : std::abs(gauss(eng)) * 0.5;
    std::vector<CutRecord> cuts;
    const int n_cuts = cut_pick(eng);
    for (int c = 0; c < n_cuts; ++c) {
      Eigen::MatrixXd l(m, n);
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) l(i, j) = gauss(eng) * 0.1;
      const bool feas_kind = c > 0 && trial % 2 == 0 && c == n_cuts - 1;
      cuts.push_back(make_cut(feas_kind ? CutKind::Feasibility : CutKind::Optimality,
                              feas_kind ? -0.05 : gauss(eng), l));
    }
    const MasterSolution sol = solve_master(m, d, dmin, cuts);
    const MasterSolution ref = reference_master(m, d, dmin, cuts);
    REQUIRE(sol.status == ref.status);
    if (sol.status == MasterStatus::Optimal) {
      CHECK(sol.eta == ref.eta);  // exact: identical summation order
      CHECK(sol.placement == ref.placement);
      CHECK(sol.nodes <= ref.nodes);  // explored leaves never exceed feasible assignments
    }
  }
}

TEST_CASE("feasibility cuts exclude placements and can empty the master") {
  Eigen::MatrixXd d(2, 2);
  d << 0, 1, 1, 0;
  // exclude placement {0,1}: positive value there, very negative elsewhere
  Eigen::MatrixXd l = Eigen::MatrixXd::Zero(2, 2);
  l(0, 0) = 0.5;
  l(1, 1) = 0.5;
  std::vector<CutRecord> cuts{make_cut(CutKind::Optimality, 1.0, Eigen::MatrixXd::Zero(2, 2)),
                              make_cut(CutKind::Feasibility, -0.6, l)};
  MasterSolution sol = solve_master(2, d, 0.5, cuts);
  REQUIRE(sol.status == MasterStatus::Optimal);
  CHECK(sol.placement == PlacementIndices{1, 0});  // {0,1} excluded, lex-next wins

  // a cut positive everywhere rules out every placement
  cuts.push_back(make_cut(CutKind::Feasibility, 1.0, Eigen::MatrixXd::Zero(2, 2)));
  sol = solve_master(2, d, 0.5, cuts);
  CHECK(sol.status == MasterStatus::Infeasible);
  CHECK_FALSE(sol.proved_optimal);
}

TEST_CASE("no optimality cuts means a zero lower bound at any feasible placement") {
  Eigen::MatrixXd d(2, 2);
  d << 0, 1, 1, 0;
  const MasterSolution sol = solve_master(2, d, 0.5, {});
  REQUIRE(sol.status == MasterStatus::Optimal);
  CHECK(sol.eta == 0.0);
  CHECK(sol.placement == PlacementIndices{0, 1});
}

TEST_CASE("symmetry breaking preserves the optimum of symmetric cut pools") {
  std::mt19937_64 eng(7);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const int n = 6;
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < i; ++j) d(i, j) = d(j, i) = 0.5 + std::abs(gauss(eng));
  std::vector<CutRecord> cuts;
  for (int c = 0; c < 3; ++c) {
    Eigen::VectorXd row(n);
    for (int j = 0; j < n; ++j) row(j) = gauss(eng) * 0.2;
    Eigen::MatrixXd l(2, n);
    l.row(0) = row.transpose();  // identical rows: value invariant to relabeling
    l.row(1) = row.transpose();
    cuts.push_back(make_cut(CutKind::Optimality, std::abs(gauss(eng)), l));
  }
  MasterConfig plain, sym;
  sym.symmetry_breaking = true;
  const MasterSolution a = solve_master(2, d, 0.6, cuts, plain);
  const MasterSolution b = solve_master(2, d, 0.6, cuts, sym);
  REQUIRE(a.status == MasterStatus::Optimal);
  REQUIRE(b.status == MasterStatus::Optimal);
  CHECK(a.eta == b.eta);
  CHECK(b.nodes <= a.nodes);
}

TEST_CASE("glover bounds force the exact product on binaries") {
  std::mt19937_64 eng(99);
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = 2 + static_cast<int>(eng() % 12);
    Eigen::VectorXd bm = Eigen::VectorXd::Zero(n), bmp = Eigen::VectorXd::Zero(n);
    bm(eng() % n) = 1.0;
    bmp(eng() % n) = 1.0;
    const Eigen::MatrixXd y = glover_forced_y(bm, bmp);
    CHECK((y - bm * bmp.transpose()).norm() == 0.0);
  }
  // count example and the non-binary rejection path
  CHECK(glover_variable_count(3, 5) == 3 * 25);
  Eigen::VectorXd frac(2);
  frac << 0.5, 0.5;
  CHECK_THROWS_AS(glover_forced_y(frac, frac), std::invalid_argument);
}

TEST_CASE("exported MILP enumerates to the exact master optimum") {
  std::mt19937_64 eng(31);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int trial = 0; trial < 8; ++trial) {
    const int n = 4 + static_cast<int>(eng() % 3);
    const int m = 2;
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < i; ++j) d(i, j) = d(j, i) = 0.05 + std::abs(gauss(eng));
    const double dmin = 0.3;
    std::vector<CutRecord> cuts;
    for (int c = 0; c < 3; ++c) {
      Eigen::MatrixXd l(m, n);
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) l(i, j) = gauss(eng) * 0.01;
      cuts.push_back(make_cut(c == 2 ? CutKind::Feasibility : CutKind::Optimality,
                              c == 2 ? -0.01 : std::abs(gauss(eng)), l));
    }
    std::ostringstream os;
    export_milp(os, m, d, dmin, cuts);
    const milp_text::Model model = milp_text::parse(os.str());
    CHECK(model.num_antennas == m);
    CHECK(model.num_positions == n);
    const milp_text::Enumerated lp = milp_text::enumerate_best(model);
    const MasterSolution sol = solve_master(m, d, dmin, cuts);
    REQUIRE(lp.found == (sol.status == MasterStatus::Optimal));
    if (lp.found) {
      CHECK(lp.eta == sol.eta);  // bitwise: same text-order summation
      CHECK(lp.placement == sol.placement);
    }
  }
  // export without optimality cuts is rejected (eta would be unbounded)
  Eigen::MatrixXd d(2, 2);
  d << 0, 1, 1, 0;
  std::ostringstream os;
  CHECK_THROWS_AS(export_milp(os, 2, d, 0.5, {}), std::invalid_argument);
}

TEST_CASE("master rejects malformed inputs") {
  Eigen::MatrixXd d(2, 2);
  d << 0, 1, 1, 0;
  CHECK_THROWS_AS(solve_master(0, d, 0.5, {}), std::invalid_argument);
  CHECK_THROWS_AS(solve_master(2, Eigen::MatrixXd::Zero(2, 3), 0.5, {}), std::invalid_argument);
  std::vector<CutRecord> bad{make_cut(CutKind::Optimality, 1.0, Eigen::MatrixXd::Zero(2, 3))};
  CHECK_THROWS_AS(solve_master(2, d, 0.5, bad), std::invalid_argument);
}
