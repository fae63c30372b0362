// SPDX-License-Identifier: Apache-2.0
// Part of mabeam: movable-antenna beamforming solver suite.
#pragma once

#include <Eigen/Dense>
#include <cstdio>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "mabeam/cuts.hpp"

// Benders master problem: minimize eta over placements subject to one-hot
// assignment, pairwise minimum separation, accumulated optimality cuts
// (eta >= cut value) and feasibility cuts (cut value <= tolerance).
//
// Solved by depth-first branch-and-bound assigning antennas in fixed order.
// The cuts are separable per antenna, so a node bound is the max over
// optimality cuts of (constant + assigned coefficients + per-remaining-antenna
// minimum over positions still compatible with the assigned ones).  Pruning
// keeps a small safety margin so exact ties always survive to the leaves;
// combined with the in-order descent this returns the lexicographically
// smallest optimal placement, and leaf values tie bitwise with exhaustive
// enumeration (including enumeration driven by the exported MILP text).

namespace mabeam {

struct MasterConfig {
  double feasibility_tol = 1e-5;  // feasibility cuts accepted when value <= tol
  double prune_margin = 1e-9;     // relative slack added before pruning a node
  bool symmetry_breaking = false; // restrict to strictly increasing placements
};

enum class MasterStatus { Optimal, Infeasible };

struct MasterSolution {
  MasterStatus status = MasterStatus::Infeasible;
  PlacementIndices placement;
  double eta = 0.0;           // watts
  long long nodes = 0;        // complete assignments evaluated
  bool proved_optimal = false;
};

namespace detail_master {

struct Search {
  int num_antennas;
  int num_positions;
  const Eigen::MatrixXd& dist;
  double dmin;
  std::vector<const CutRecord*> opt;
  std::vector<const CutRecord*> feas;
  std::vector<double> feas_rhs;  // tol - constant, fixed per cut
  MasterConfig cfg;

  PlacementIndices pos;
  std::vector<std::vector<char>> compat;  // per depth: positions compatible with assigned
  MasterSolution out;
  double incumbent = std::numeric_limits<double>::infinity();

  bool prune(int depth) const {
    // Structural: every remaining antenna needs at least one compatible slot.
    const auto& mask = compat[depth];
    bool any = false;
    for (int j = 0; j < num_positions && !any; ++j) any = mask[j] != 0;
    if (!any && depth < num_antennas) return true;

    // Feasibility cuts: if even the per-antenna minimum completion violates a
    // cut, no descendant can satisfy it.
    for (std::size_t t = 0; t < feas.size(); ++t) {
      double lb = 0.0;
      for (int m = 0; m < num_antennas; ++m) lb += m < depth ? feas[t]->coeff(m, pos[m]) : row_min(*feas[t], m, mask);
      if (lb > feas_rhs[t]) return true;
    }

    // Optimality cuts: max-of-cuts lower bound on eta, compared against the
    // incumbent with a margin so that exact ties are explored, never pruned.
    if (!opt.empty() && std::isfinite(incumbent)) {
      double bound = -std::numeric_limits<double>::infinity();
      for (const CutRecord* c : opt) {
        double b = c->constant;
        for (int m = 0; m < num_antennas; ++m) b += m < depth ? c->coeff(m, pos[m]) : row_min(*c, m, mask);
        bound = std::max(bound, b);
      }
      const double margin = cfg.prune_margin * std::max(1.0, std::abs(incumbent));
      if (bound >= incumbent + margin) return true;
    }
    return false;
  }

  double row_min(const CutRecord& c, int antenna, const std::vector<char>& mask) const {
    double best = std::numeric_limits<double>::infinity();
    for (int j = 0; j < num_positions; ++j)
      if (mask[j]) best = std::min(best, c.coeff(antenna, j));
    return best;
  }

  void leaf() {
    ++out.nodes;
    for (std::size_t t = 0; t < feas.size(); ++t) {
      double lin = 0.0;
      for (int m = 0; m < num_antennas; ++m) lin += feas[t]->coeff(m, pos[m]);
      if (lin > feas_rhs[t]) return;
    }
    double eta = 0.0;  // no optimality cuts: power is nonnegative, eta* = 0
    if (!opt.empty()) {
      eta = -std::numeric_limits<double>::infinity();
      for (const CutRecord* c : opt) eta = std::max(eta, evaluate_cut(*c, pos));
    }
    if (eta < incumbent) {
      incumbent = eta;
      out.placement = pos;
      out.eta = eta;
      out.status = MasterStatus::Optimal;
    }
  }

  void descend(int depth) {
    if (depth == num_antennas) {
      leaf();
      return;
    }
    const int first = (cfg.symmetry_breaking && depth > 0) ? pos[depth - 1] + 1 : 0;
    for (int n = first; n < num_positions; ++n) {
      if (!compat[depth][n]) continue;
      pos[depth] = n;
      auto& next = compat[depth + 1];
      next = compat[depth];
      for (int j = 0; j < num_positions; ++j)
        if (next[j] && dist(n, j) < dmin) next[j] = 0;
      if (!prune(depth + 1)) descend(depth + 1);
    }
    pos[depth] = -1;
  }
};

}  // namespace detail_master

inline MasterSolution solve_master(int num_antennas, const Eigen::MatrixXd& dist, double dmin,
                                   const std::vector<CutRecord>& cuts, MasterConfig cfg = {}) {
  if (num_antennas < 1) throw std::invalid_argument("solve_master: at least one antenna required");
  if (dist.rows() != dist.cols() || dist.rows() < 1)
    throw std::invalid_argument("solve_master: square distance matrix required");
  const int n = static_cast<int>(dist.rows());
  for (const CutRecord& c : cuts)
    if (c.coeff.rows() != num_antennas || c.coeff.cols() != n)
      throw std::invalid_argument("solve_master: cut coefficient shape mismatch");

  detail_master::Search search{num_antennas, n, dist, dmin, {}, {}, {}, cfg, {}, {}, {}};
  for (const CutRecord& c : cuts)
    (c.kind == CutKind::Optimality ? search.opt : search.feas).push_back(&c);
  for (const CutRecord* c : search.feas) search.feas_rhs.push_back(cfg.feasibility_tol - c->constant);
  search.pos.assign(num_antennas, -1);
  search.compat.assign(num_antennas + 1, std::vector<char>(n, 1));
  search.descend(0);
  search.out.proved_optimal = search.out.status == MasterStatus::Optimal;
  return search.out;
}

// ---------------------------------------------------------------------------
// Glover linearization of the bilinear separation constraint.  For every
// antenna pair m < m', the product b_m[i] * b_m'[j] is replaced by a binary
// y_{m,m',i,j} pinned from both sides:
//   y <= b_m[i],  y <= b_m'[j],  y >= b_m[i] + b_m'[j] - 1,
// which on binaries forces y to the exact product, so
//   sum_ij D(i,j) y_{m,m',i,j} >= dmin  reproduces the pairwise separation.

// The y value forced by the bounds for binary inputs; throws if the bounds do
// not pin a unique binary value (i.e. the inputs were not binary).
inline Eigen::MatrixXd glover_forced_y(const Eigen::VectorXd& bm, const Eigen::VectorXd& bmp) {
  Eigen::MatrixXd y(bm.size(), bmp.size());
  for (int i = 0; i < bm.size(); ++i)
    for (int j = 0; j < bmp.size(); ++j) {
      const double lower = std::max(0.0, bm(i) + bmp(j) - 1.0);
      const double upper = std::min(bm(i), bmp(j));
      if (lower != upper) throw std::invalid_argument("glover_forced_y: inputs must be binary");
      y(i, j) = upper;
    }
  return y;
}

// Number of y variables a full master materialization needs.
inline long long glover_variable_count(int num_antennas, int num_positions) {
  return static_cast<long long>(num_antennas) * (num_antennas - 1) / 2 *
         static_cast<long long>(num_positions) * num_positions;
}

// ---------------------------------------------------------------------------
// Reference-MILP export in LP text format (CPLEX dialect): the master with
// materialized Glover y variables, one row per cut, coefficients printed with
// 17 significant digits so they round-trip exactly.  Feasibility-cut rows are
// emitted pre-adjusted: lin <= tol - constant, the identical comparison the
// branch-and-bound applies.
inline void export_milp(std::ostream& os, int num_antennas, const Eigen::MatrixXd& dist, double dmin,
                        const std::vector<CutRecord>& cuts, const MasterConfig& cfg = {}) {
  if (num_antennas < 1) throw std::invalid_argument("export_milp: at least one antenna required");
  const int n = static_cast<int>(dist.rows());
  if (dist.rows() != dist.cols() || n < 1)
    throw std::invalid_argument("export_milp: square distance matrix required");
  bool has_opt = false;
  for (const CutRecord& c : cuts) {
    if (c.coeff.rows() != num_antennas || c.coeff.cols() != n)
      throw std::invalid_argument("export_milp: cut coefficient shape mismatch");
    if (!c.coeff.allFinite() || !std::isfinite(c.constant))
      throw std::invalid_argument("export_milp: non-finite cut data");
    has_opt = has_opt || c.kind == CutKind::Optimality;
  }
  if (!has_opt)
    throw std::invalid_argument("export_milp: at least one optimality cut required (eta otherwise unbounded)");

  char buf[64];
  auto num = [&buf](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };

  os << "\\ benders master over antenna placements (reference export)\n";
  os << "Minimize\n obj: eta\nSubject To\n";
  // one-hot assignment rows
  for (int m = 0; m < num_antennas; ++m) {
    os << " assign_" << m << ":";
    for (int j = 0; j < n; ++j) os << (j ? " + b_" : " b_") << m << "_" << j;
    os << " = 1\n";
  }
  // pairwise separation through the materialized y
  for (int m = 0; m < num_antennas; ++m)
    for (int mp = m + 1; mp < num_antennas; ++mp) {
      os << " sep_" << m << "_" << mp << ":";
      bool lead = true;
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          os << (lead ? " " : " + ") << num(dist(i, j)) << " y_" << m << "_" << mp << "_" << i << "_" << j;
          lead = false;
        }
      os << " >= " << num(dmin) << "\n";
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          const std::string y = "y_" + std::to_string(m) + "_" + std::to_string(mp) + "_" +
                                std::to_string(i) + "_" + std::to_string(j);
          os << " lnk1_" << y << ": " << y << " - b_" << m << "_" << i << " <= 0\n";
          os << " lnk2_" << y << ": " << y << " - b_" << mp << "_" << j << " <= 0\n";
          os << " lnk3_" << y << ": " << y << " - b_" << m << "_" << i << " - b_" << mp << "_" << j
             << " >= -1\n";
        }
    }
  // cut rows, coefficients emitted antenna-major to fix the summation order
  int opt_id = 0, feas_id = 0;
  for (const CutRecord& c : cuts) {
    if (c.kind == CutKind::Optimality) {
      os << " opt_" << opt_id++ << ": eta";
      for (int m = 0; m < num_antennas; ++m)
        for (int j = 0; j < n; ++j) {
          const double l = c.coeff(m, j);
          os << (l >= 0.0 ? " - " : " + ") << num(std::abs(l)) << " b_" << m << "_" << j;
        }
      os << " >= " << num(c.constant) << "\n";
    } else {
      os << " feas_" << feas_id++ << ":";
      bool lead = true;
      for (int m = 0; m < num_antennas; ++m)
        for (int j = 0; j < n; ++j) {
          const double l = c.coeff(m, j);
          os << (lead ? (l >= 0.0 ? " " : " - ") : (l >= 0.0 ? " + " : " - ")) << num(std::abs(l))
             << " b_" << m << "_" << j;
          lead = false;
        }
      os << " <= " << num(cfg.feasibility_tol - c.constant) << "\n";
    }
  }
  os << "Bounds\n eta free\nBinary\n";
  for (int m = 0; m < num_antennas; ++m)
    for (int j = 0; j < n; ++j) os << " b_" << m << "_" << j << "\n";
  for (int m = 0; m < num_antennas; ++m)
    for (int mp = m + 1; mp < num_antennas; ++mp)
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) os << " y_" << m << "_" << mp << "_" << i << "_" << j << "\n";
  os << "End\n";
}

}  // namespace mabeam
