// SPDX-License-Identifier: Apache-2.0
// Part of mabeam: movable-antenna beamforming solver suite.
#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <limits>
#include <stdexcept>
#include <vector>

#include "mabeam/channel.hpp"
#include "mabeam/conic/problem.hpp"
#include "mabeam/conic/solver.hpp"
#include "mabeam/cuts.hpp"
#include "mabeam/placement.hpp"

// Fixed-placement stage: for a chosen placement the power-minimization
// problem is convex and is solved exactly in conic form; its duals produce
// the Benders cuts consumed by the master.
//
// Formulation notes (these choices matter and are covered by tests):
//  * The beamformer enters through X with the linear-matrix-inequality
//    [U X B; X^H V W^H; B^H W I_M] >= 0 plus Tr(U) <= M, which forces
//    U = B B^H and X = B W while keeping the placement B strictly in the
//    constant part of the constraint.  That linearity in B is what makes the
//    LMI dual block usable as a cut slope.
//  * The objective is an epigraph t with Tr(V) - t <= 0.  Pricing V in the
//    objective (rather than an epigraph on ||W||_F alone) is load-bearing:
//    with V appearing only inside the LMI, the dual's V-block is forced to
//    zero and the whole dual collapses, leaving a structural duality gap and
//    worthless cuts.  With the trace row, V = W^H W at the optimum, so
//    t* is exactly the transmit power.
//  * The feasibility check relaxes each SINR cone by a slack lambda_k >= 0,
//    minimizes sum(lambda) + eps_v * t, and keeps the same trace row; eps_v
//    is small enough that placements feasible for the power problem evaluate
//    under the master's feasibility-cut tolerance.
//  * Channels and noise are rescaled internally (max-row-norm / max-noise) so
//    the interior-point solver sees O(1) data; cut slopes computed from duals
//    are converted back to watts, while feasibility cuts stay in normalized
//    slack units end to end (master tolerance included).

namespace mabeam {

enum class PrimalStatus { Feasible, Infeasible, Error };

struct PrimalOutcome {
  PrimalStatus status = PrimalStatus::Error;

  // feasible branch, physical units
  double power_w = std::numeric_limits<double>::quiet_NaN();
  Eigen::MatrixXcd w;    // M x K beamformer
  Eigen::MatrixXcd x;    // MN x K auxiliary (equals B*w at the optimum)
  Eigen::MatrixXcd u;    // MN x MN Hermitian (equals B*B^H at the optimum)
  Eigen::MatrixXcd v;    // K x K Hermitian, watts (equals W^H W at the optimum)
  Eigen::VectorXd sinr;  // per-user linear SINR at w

  // infeasible branch (slacked problem), normalized slack units
  Eigen::VectorXd lambda;
  double sum_lambda = 0.0;

  // certified dual lower bound on the stage objective (physical units) and
  // the dual residual of the iterate providing it; the feasibility cut is
  // built from this bundle, which stays usable even when the slacked stage's
  // primal iterate cannot fully converge
  double dual_bound = std::numeric_limits<double>::quiet_NaN();
  double dual_bound_res = std::numeric_limits<double>::infinity();

  // duals and diagnostics, normalized units
  Eigen::MatrixXcd xi;   // LMI dual, complex side MN+K+M
  Eigen::VectorXd mu;    // K, SINR-cone head duals (>= 0)
  Eigen::VectorXcd nu;   // K, phase-pinning equality duals (re + i*im rows)
  double xi_trace = 0.0;     // antenna-budget row dual (>= 0)
  double alpha_trace = 0.0;  // power-epigraph trace row dual (>= 0)
  double abs_gap = std::numeric_limits<double>::infinity();
  double rel_gap = std::numeric_limits<double>::infinity();
  double lmi_min_eig = std::numeric_limits<double>::quiet_NaN();
  double trace_u = std::numeric_limits<double>::quiet_NaN();
  double phase_im_max = std::numeric_limits<double>::quiet_NaN();
  int iterations = 0;

  int num_antennas = 0, num_positions = 0, num_users = 0;
  double power_unit = 1.0;  // watts per normalized power unit
  double slack_unit = 1.0;  // rescale applied to lambda so slack units are
                            // fractions of the max noise std, not of the
                            // instance-dependent power prescale
  PlacementIndices placement;
};

namespace detail_primal {

// Index bookkeeping for a Hermitian variable block of complex side q packed
// as [q diagonal reals, then (re, im) per strict lower-triangle pair,
// column-major].  q*q real scalars total.
struct HermVars {
  int base = 0, q = 0;
  int count() const { return q * q; }
  int diag(int i) const { return base + i; }
  int pair(int i, int j) const { return j * q - j * (j + 1) / 2 + (i - j - 1); }
  int off_re(int i, int j) const { return base + q + 2 * pair(i, j); }
  int off_im(int i, int j) const { return base + q + 2 * pair(i, j) + 1; }
};

// Complex matrix variable block (rows x cols), packed (re, im) column-major.
struct CplxVars {
  int base = 0, rows = 0, cols = 0;
  int count() const { return 2 * rows * cols; }
  int re(int r, int c) const { return base + 2 * (c * rows + r); }
  int im(int r, int c) const { return base + 2 * (c * rows + r) + 1; }
};

// Real and imaginary parts of (row k of h) * column c of a complex variable
// block, as linear expressions over the packed real variables.
inline void row_times_column(const Eigen::MatrixXcd& h, int k, const CplxVars& vars, int c,
                             conic::LinExpr& re, conic::LinExpr& im) {
  for (int j = 0; j < h.cols(); ++j) {
    const double hr = h(k, j).real(), hi = h(k, j).imag();
    re.add(vars.re(j, c), hr);
    re.add(vars.im(j, c), -hi);
    im.add(vars.im(j, c), hr);
    im.add(vars.re(j, c), hi);
  }
}

inline Eigen::MatrixXcd unpack_cplx(const Eigen::VectorXd& x, const CplxVars& vars, double scale) {
  Eigen::MatrixXcd out(vars.rows, vars.cols);
  for (int c = 0; c < vars.cols; ++c)
    for (int r = 0; r < vars.rows; ++r)
      out(r, c) = scale * std::complex<double>(x(vars.re(r, c)), x(vars.im(r, c)));
  return out;
}

inline Eigen::MatrixXcd unpack_herm(const Eigen::VectorXd& x, const HermVars& vars, double scale) {
  Eigen::MatrixXcd out(vars.q, vars.q);
  for (int i = 0; i < vars.q; ++i) {
    out(i, i) = scale * x(vars.diag(i));
    for (int j = 0; j < i; ++j) {
      const std::complex<double> val(scale * x(vars.off_re(i, j)), scale * x(vars.off_im(i, j)));
      out(i, j) = val;
      out(j, i) = std::conj(val);
    }
  }
  return out;
}

}  // namespace detail_primal

struct PrimalProblem {
  conic::Problem problem;
  bool feasibility_variant = false;

  int num_antennas = 0, num_positions = 0, num_users = 0;
  double h_scale = 1.0, sigma_scale = 1.0, power_prescale = 1.0, power_unit = 1.0;
  PlacementIndices placement;

  // physical-side data kept for diagnostics
  Eigen::MatrixXcd h_eff;     // K x M effective channel (physical)
  Eigen::MatrixXcd h_norm;    // K x MN stacked channel (normalized)
  Eigen::VectorXd noise_w;    // per-user physical noise power

  // variable layout and cone bookkeeping (idx_t is -1 in the slacked variant)
  int idx_t = -1, idx_rho = 0, idx_lambda = -1;
  detail_primal::CplxVars w_vars, x_vars;
  detail_primal::HermVars u_vars, v_vars;
  int trace_v_cone = -1, trace_u_cone = -1, first_sinr_cone = -1, lmi_block = -1;
};

namespace detail_primal {

// Weight of the power epigraph inside the reduced slacked objective; keeps
// the solved beamformer on a definite scale without visibly perturbing the
// minimum-slack value.
constexpr double kFeasibilityEps = 1e-8;

// Cap on Tr(V) in solver units.  The linking LMI is tight only through the
// antenna-budget squeeze (Tr(U) <= M with U >= B B^H forces U = B B^H and
// then X = B W), so a trace slack of delta buys ||X - B W||^2 up to
// delta * Tr(V): with V unbounded the system is only weakly infeasible at
// placements with unmeetable targets, and no usable infeasibility certificate
// exists.  Capping Tr(V) far above any optimum of interest closes that escape
// while leaving the solutions untouched.
constexpr double kTraceVCap = 1e6;

inline PrimalProblem assemble_lmi_stage(const ChannelSet& channel, const PlacementIndices& pos,
                                        const Eigen::VectorXd& gamma_lin, const Eigen::VectorXd& noise_w,
                                        bool feasibility_variant) {
  const int k_users = static_cast<int>(channel.base.rows());
  const int m_count = channel.num_antennas;
  const int n_count = channel.num_positions;
  const int mn = m_count * n_count;
  if (static_cast<int>(pos.size()) != m_count)
    throw std::invalid_argument("primal: placement size must match antenna count");
  validate_placement(pos, n_count);
  if (gamma_lin.size() != k_users || noise_w.size() != k_users)
    throw std::invalid_argument("primal: per-user vector sizes must match user count");
  if ((gamma_lin.array() <= 0.0).any()) throw std::invalid_argument("primal: SINR targets must be positive");
  if ((noise_w.array() <= 0.0).any()) throw std::invalid_argument("primal: noise powers must be positive");

  PrimalProblem pb;
  pb.feasibility_variant = feasibility_variant;
  pb.num_antennas = m_count;
  pb.num_positions = n_count;
  pb.num_users = k_users;
  pb.placement = pos;
  pb.h_eff = effective_channel(channel, pos);
  pb.noise_w = noise_w;

  pb.h_scale = channel.stacked.rowwise().norm().maxCoeff();
  pb.sigma_scale = std::sqrt(noise_w.maxCoeff());
  if (!(pb.h_scale > 0.0)) throw std::invalid_argument("primal: channel matrix is identically zero");
  pb.h_norm = channel.stacked / pb.h_scale;

  // order-of-magnitude power estimate so the solved epigraph is O(1): the
  // selected per-position gain is about ||row||^2 / N, hence user k alone
  // needs roughly gamma_k sigma_k^2 N / ||row_k||^2 (all in h/sigma units).
  // Any positive value is a valid reparameterization; this one keeps the
  // LMI's U- and V-blocks on a common scale, which the NT scaling rewards.
  // The slack variant skips it: its optimum sits at small ||W|| where the
  // unscaled system is already balanced, and shrinking sigma-hat (and with it
  // the lambda objective) by 1/sqrt(ps) only starves the gap criterion.
  if (feasibility_variant) {
    pb.power_prescale = 1.0;
  } else {
    double ps = 0.0;
    for (int k = 0; k < k_users; ++k) {
      const double row2 = pb.h_norm.row(k).squaredNorm();
      ps += gamma_lin(k) * (noise_w(k) / (pb.sigma_scale * pb.sigma_scale)) * n_count / row2;
    }
    pb.power_prescale = (std::isfinite(ps) && ps > 0.0) ? ps : 1.0;
  }
  const double amp = pb.sigma_scale / pb.h_scale;
  pb.power_unit = amp * amp * pb.power_prescale;

  conic::Problem& p = pb.problem;
  // the slack variant minimizes the plain slack sum and has no epigraph
  pb.idx_t = feasibility_variant ? -1 : p.add_vars(1);
  pb.idx_rho = p.add_vars(k_users);
  pb.w_vars = {0, m_count, k_users};
  pb.w_vars.base = p.add_vars(pb.w_vars.count());
  pb.x_vars = {0, mn, k_users};
  pb.x_vars.base = p.add_vars(pb.x_vars.count());
  pb.u_vars = {0, mn};
  pb.u_vars.base = p.add_vars(pb.u_vars.count());
  pb.v_vars = {0, k_users};
  pb.v_vars.base = p.add_vars(pb.v_vars.count());
  if (feasibility_variant) pb.idx_lambda = p.add_vars(k_users);

  if (feasibility_variant) {
    for (int k = 0; k < k_users; ++k) p.add_objective_term(pb.idx_lambda + k, 1.0);
  } else {
    p.add_objective_term(pb.idx_t, 1.0);
  }

  // Tr(V) - t <= 0 prices V through the epigraph; the slack variant bounds
  // Tr(V) outright instead (see kTraceVCap)
  {
    conic::LinExpr tr(feasibility_variant ? -kTraceVCap : 0.0);
    for (int k = 0; k < k_users; ++k) tr.add(pb.v_vars.diag(k), 1.0);
    if (!feasibility_variant) tr.add(pb.idx_t, -1.0);
    pb.trace_v_cone = p.add_ineq_le0(tr, "trace-v");
  }
  // Tr(U) - M <= 0
  {
    conic::LinExpr tr(-static_cast<double>(m_count));
    for (int i = 0; i < mn; ++i) tr.add(pb.u_vars.diag(i), 1.0);
    pb.trace_u_cone = p.add_ineq_le0(tr, "trace-u");
  }
  // slack nonnegativity for the feasibility variant
  if (feasibility_variant)
    for (int k = 0; k < k_users; ++k)
      p.add_ineq_le0(conic::LinExpr().add(pb.idx_lambda + k, -1.0), "slack-nonneg-" + std::to_string(k));

  // per-user phase pinning: Re{h_k^H x_k} = rho_k, Im{h_k^H x_k} = 0
  for (int k = 0; k < k_users; ++k) {
    conic::LinExpr re, im;
    detail_primal::row_times_column(pb.h_norm, k, pb.x_vars, k, re, im);
    re.add(pb.idx_rho + k, -1.0);
    p.add_equalities({re, im}, "phase-" + std::to_string(k));
  }
  // per-user SINR cone: ||(interference, noise)|| <= rho_k / sqrt(gamma_k) [+ lambda_k]
  for (int k = 0; k < k_users; ++k) {
    conic::LinExpr head;
    head.add(pb.idx_rho + k, 1.0 / std::sqrt(gamma_lin(k)));
    if (feasibility_variant) head.add(pb.idx_lambda + k, 1.0);
    std::vector<conic::LinExpr> tail;
    for (int kp = 0; kp < k_users; ++kp) {
      if (kp == k) continue;
      conic::LinExpr re, im;
      detail_primal::row_times_column(pb.h_norm, k, pb.x_vars, kp, re, im);
      tail.push_back(re);
      tail.push_back(im);
    }
    tail.emplace_back(std::sqrt(noise_w(k) / pb.power_prescale) / pb.sigma_scale);
    const int cone = p.add_soc(head, tail, "sinr-" + std::to_string(k));
    if (k == 0) pb.first_sinr_cone = cone;
  }
  // the linking LMI [U X B; X^H V W^H; B^H W I]
  {
    const int q = mn + k_users + m_count;
    conic::HermitianExpr lmi(q);
    for (int i = 0; i < mn; ++i) {
      lmi.add_term(i, i, pb.u_vars.diag(i), 1.0);
      for (int j = 0; j < i; ++j) {
        lmi.add_term(i, j, pb.u_vars.off_re(i, j), 1.0);
        lmi.add_term(i, j, pb.u_vars.off_im(i, j), std::complex<double>(0.0, 1.0));
      }
    }
    for (int k = 0; k < k_users; ++k) {
      lmi.add_term(mn + k, mn + k, pb.v_vars.diag(k), 1.0);
      for (int kp = 0; kp < k; ++kp) {
        lmi.add_term(mn + k, mn + kp, pb.v_vars.off_re(k, kp), 1.0);
        lmi.add_term(mn + k, mn + kp, pb.v_vars.off_im(k, kp), std::complex<double>(0.0, 1.0));
      }
      for (int j = 0; j < mn; ++j) {  // X^H block: conj(X_jk)
        lmi.add_term(mn + k, j, pb.x_vars.re(j, k), 1.0);
        lmi.add_term(mn + k, j, pb.x_vars.im(j, k), std::complex<double>(0.0, -1.0));
      }
    }
    for (int m = 0; m < m_count; ++m) {
      const int row = mn + k_users + m;
      lmi.add_constant(row, m * n_count + pos[m], 1.0);  // B^H selection entry
      for (int k = 0; k < k_users; ++k) {                // W block
        lmi.add_term(row, mn + k, pb.w_vars.re(m, k), 1.0);
        lmi.add_term(row, mn + k, pb.w_vars.im(m, k), std::complex<double>(0.0, 1.0));
      }
      lmi.add_constant(row, row, 1.0);  // identity block
    }
    pb.lmi_block = p.add_psd_hermitian(lmi, "link-lmi");
  }
  // the epigraph prices Tr(V) but cannot bound it inside the homogeneous
  // embedding, so the power variant carries the explicit cap as well
  if (!feasibility_variant) {
    conic::LinExpr tr(-kTraceVCap);
    for (int k = 0; k < k_users; ++k) tr.add(pb.v_vars.diag(k), 1.0);
    p.add_ineq_le0(tr, "trace-v-cap");
  }
  return pb;
}

}  // namespace detail_primal

inline PrimalProblem assemble_primal(const ChannelSet& channel, const PlacementIndices& pos,
                                     const Eigen::VectorXd& gamma_lin, const Eigen::VectorXd& noise_w) {
  return detail_primal::assemble_lmi_stage(channel, pos, gamma_lin, noise_w, false);
}

inline PrimalProblem assemble_feasibility(const ChannelSet& channel, const PlacementIndices& pos,
                                          const Eigen::VectorXd& gamma_lin, const Eigen::VectorXd& noise_w) {
  return detail_primal::assemble_lmi_stage(channel, pos, gamma_lin, noise_w, true);
}

// Per-user linear SINR of beamformer w under effective channel h_eff (K x M).
inline Eigen::VectorXd sinr_of(const Eigen::MatrixXcd& h_eff, const Eigen::MatrixXcd& w,
                               const Eigen::VectorXd& noise_w) {
  const int k_users = static_cast<int>(h_eff.rows());
  if (w.rows() != h_eff.cols() || w.cols() != k_users || noise_w.size() != k_users)
    throw std::invalid_argument("sinr_of: dimension mismatch");
  Eigen::VectorXd out(k_users);
  const Eigen::MatrixXcd rx = h_eff * w;  // rx(k, kp) = signal of stream kp at user k
  for (int k = 0; k < k_users; ++k) {
    double interference = noise_w(k);
    for (int kp = 0; kp < k_users; ++kp)
      if (kp != k) interference += std::norm(rx(k, kp));
    out(k) = std::norm(rx(k, k)) / interference;
  }
  return out;
}

inline conic::SolverOptions default_primal_options() {
  conic::SolverOptions opts;
  opts.tol = 1e-8;
  // the linking LMI has no strict interior (its top block is pinned to B B^H
  // by the antenna budget), so the dual residual floors around 1e-7; accept
  // that — every downstream tolerance (cut gap 1e-6, invariants 1e-6/1e-7 on
  // quantities controlled by the much smaller primal residual) still holds
  opts.accept_tol = 1e-6;
  opts.max_iter = 120;
  return opts;
}

// Solve an assembled stage problem and translate the conic solution back to
// physical quantities plus the dual data needed for cut construction.
inline PrimalOutcome solve_primal(const PrimalProblem& pb,
                                  const conic::SolverOptions& opts = default_primal_options()) {
  const int m_count = pb.num_antennas, n_count = pb.num_positions, k_users = pb.num_users;
  const int mn = m_count * n_count;

  PrimalOutcome out;
  out.num_antennas = m_count;
  out.num_positions = n_count;
  out.num_users = k_users;
  out.power_unit = pb.power_unit;
  out.placement = pb.placement;

  const conic::Solution sol = conic::solve(pb.problem, opts);
  out.iterations = sol.iterations;
  if (sol.status == conic::SolveStatus::PrimalInfeasible) {
    // only the unslacked stage can be infeasible; the slacked one always
    // admits lambda large enough
    out.status = pb.feasibility_variant ? PrimalStatus::Error : PrimalStatus::Infeasible;
    return out;
  }
  // the slacked stage pins its optimal face (the LMI loses strict
  // complementarity once every slack is active), so its primal iterate can
  // stop short of full convergence; any certified near-feasible dual iterate
  // still carries everything the feasibility cut needs, so accept it
  const bool bound_only =
      pb.feasibility_variant && sol.status != conic::SolveStatus::Optimal && sol.has_bound();
  if (sol.status != conic::SolveStatus::Optimal && !bound_only) {
    out.status = PrimalStatus::Error;
    return out;
  }

  out.status = PrimalStatus::Feasible;
  out.abs_gap = sol.gap;
  out.rel_gap = sol.rel_gap;

  // normalized -> physical beam amplitudes (noise/channel units x prescale)
  const double amp_scale = pb.sigma_scale / pb.h_scale * std::sqrt(pb.power_prescale);
  out.slack_unit = std::sqrt(pb.power_prescale);
  out.w = detail_primal::unpack_cplx(sol.x, pb.w_vars, amp_scale);
  out.x = detail_primal::unpack_cplx(sol.x, pb.x_vars, amp_scale);
  out.u = detail_primal::unpack_herm(sol.x, pb.u_vars, 1.0);
  out.v = detail_primal::unpack_herm(sol.x, pb.v_vars, pb.power_unit);
  out.sinr = sinr_of(pb.h_eff, out.w, pb.noise_w);
  out.power_w = pb.feasibility_variant
                    ? out.w.squaredNorm()
                    : pb.power_unit * sol.x(pb.idx_t);

  if (pb.feasibility_variant) {
    out.lambda.resize(k_users);
    for (int k = 0; k < k_users; ++k) out.lambda(k) = out.slack_unit * sol.x(pb.idx_lambda + k);
    out.sum_lambda = out.lambda.sum();
  }

  out.trace_u = 0.0;
  for (int i = 0; i < mn; ++i) out.trace_u += sol.x(pb.u_vars.diag(i));

  // phase-pinning residual, computed from the normalized variables
  out.phase_im_max = 0.0;
  for (int k = 0; k < k_users; ++k) {
    std::complex<double> acc = 0.0;
    for (int j = 0; j < mn; ++j)
      acc += pb.h_norm(k, j) *
             std::complex<double>(sol.x(pb.x_vars.re(j, k)), sol.x(pb.x_vars.im(j, k)));
    out.phase_im_max = std::max(out.phase_im_max, std::abs(acc.imag()));
  }

  // minimum eigenvalue of the LMI slack (normalized units)
  {
    const conic::ConeBlock& blk = pb.problem.cones().at(pb.lmi_block);
    const Eigen::MatrixXd slab = conic::smat(sol.s.segment(blk.offset, blk.dim), blk.side);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(slab, Eigen::EigenvaluesOnly);
    out.lmi_min_eig = eig.eigenvalues().minCoeff();
  }

  // duals: the slacked stage reads them from the certified bound iterate (the
  // one maximizing the dual objective among near-dual-feasible iterates), the
  // power stage from the converged solution; phase equalities are the only
  // equality rows, two per user in order
  const bool from_bound = pb.feasibility_variant && sol.has_bound();
  const Eigen::VectorXd& zd = from_bound ? sol.bound_z : sol.z;
  const Eigen::VectorXd& yd = from_bound ? sol.bound_y : sol.y;
  out.xi = from_bound ? sol.hermitian_bound_dual(pb.problem, pb.lmi_block)
                      : sol.hermitian_dual(pb.problem, pb.lmi_block);
  out.alpha_trace = zd(pb.problem.cones().at(pb.trace_v_cone).offset);
  out.xi_trace = zd(pb.problem.cones().at(pb.trace_u_cone).offset);
  out.mu.resize(k_users);
  for (int k = 0; k < k_users; ++k)
    out.mu(k) = zd(pb.problem.cones().at(pb.first_sinr_cone + k).offset);
  out.nu.resize(k_users);
  for (int k = 0; k < k_users; ++k) out.nu(k) = std::complex<double>(yd(2 * k), yd(2 * k + 1));

  if (sol.has_bound()) {
    const double obj_unit = pb.feasibility_variant ? out.slack_unit : pb.power_unit;
    out.dual_bound = obj_unit * sol.bound_obj;
    out.dual_bound_res = sol.bound_dres;
  }
  return out;
}

namespace detail_primal {

// Nudge the cut constant until evaluating the cut at its generator reproduces
// `target` bit for bit; the master and the MILP export replay the identical
// left-to-right sum, so exact tightness survives every downstream consumer.
inline void pin_generator_value(CutRecord& cut, double target) {
  for (int pass = 0; pass < 64; ++pass) {
    const double got = evaluate_cut(cut, cut.generator);
    if (got == target) break;
    cut.constant += target - got;
  }
  cut.generator_value = evaluate_cut(cut, cut.generator);
}

// Shared slope extraction: the LMI dual enters the Lagrangian as -<Xi, LMI>
// and the placement occupies LMI entries (MN+K+m, m*N+n) and their mirrors,
// so d(value)/d(b_{m,n}) = -2 Re Xi(MN+K+m, m*N+n).
inline Eigen::MatrixXd cut_slopes(const PrimalOutcome& outcome, double unit) {
  const int m_count = outcome.num_antennas, n_count = outcome.num_positions;
  const int row0 = m_count * n_count + outcome.num_users;
  Eigen::MatrixXd coeff(m_count, n_count);
  for (int m = 0; m < m_count; ++m)
    for (int n = 0; n < n_count; ++n)
      coeff(m, n) = unit * (-2.0 * outcome.xi(row0 + m, m * n_count + n).real());
  return coeff;
}

}  // namespace detail_primal

// Optimality cut from a feasible stage solve: power(B') >= c + sum_m L[m][n'_m]
// in watts, exact at the generating placement.
inline CutRecord make_optimality_cut(const PrimalOutcome& outcome, int iteration) {
  if (outcome.status != PrimalStatus::Feasible || outcome.xi.size() == 0)
    throw std::invalid_argument("make_optimality_cut: needs a feasible outcome with duals");
  const double gap = std::min(outcome.abs_gap, outcome.rel_gap);
  if (!(gap <= 1e-6))
    throw std::invalid_argument("make_optimality_cut: duality gap too large for a trustworthy cut");

  CutRecord cut;
  cut.kind = CutKind::Optimality;
  cut.iteration = iteration;
  cut.generator = outcome.placement;
  cut.coeff = detail_primal::cut_slopes(outcome, outcome.power_unit);
  double lin = 0.0;
  for (int m = 0; m < outcome.num_antennas; ++m) lin += cut.coeff(m, outcome.placement[m]);
  cut.constant = outcome.power_w - lin;
  detail_primal::pin_generator_value(cut, outcome.power_w);
  return cut;
}

// Feasibility cut from a slacked stage solve: slack(B') >= c + sum_m L[m][n'_m];
// the master keeps only placements where the right-hand side stays under its
// feasibility tolerance.  The cut linearizes the dual objective at the
// certified bound iterate: that dual point stays feasible for every placement
// (the placement enters the problem data only through constraint constants),
// so by weak duality the affine function under-estimates the true minimum
// slack everywhere, while at the generator it reproduces the certified bound.
inline CutRecord make_feasibility_cut(const PrimalOutcome& outcome, int iteration) {
  if (outcome.status != PrimalStatus::Feasible || outcome.lambda.size() == 0 ||
      outcome.xi.size() == 0 || !std::isfinite(outcome.dual_bound))
    throw std::invalid_argument("make_feasibility_cut: needs a solved slacked outcome");
  if (!(outcome.sum_lambda > 1e-8))
    throw std::invalid_argument("make_feasibility_cut: slack is numerically zero, placement is feasible");
  if (!(outcome.dual_bound_res <= 1e-6))
    throw std::invalid_argument("make_feasibility_cut: dual residual too large for a trustworthy cut");
  if (!(outcome.dual_bound > 1e-8))
    throw std::invalid_argument("make_feasibility_cut: certified slack bound is not positive");

  CutRecord cut;
  cut.kind = CutKind::Feasibility;
  cut.iteration = iteration;
  cut.generator = outcome.placement;
  cut.coeff = detail_primal::cut_slopes(outcome, outcome.slack_unit);
  double lin = 0.0;
  for (int m = 0; m < outcome.num_antennas; ++m) lin += cut.coeff(m, outcome.placement[m]);
  cut.constant = outcome.dual_bound - lin;
  detail_primal::pin_generator_value(cut, outcome.dual_bound);
  return cut;
}

// ---------------------------------------------------------------------------
// Reduced beamforming problems over W alone for a fixed effective channel
// (K x M).  These carry no placement coupling: the baselines, the oracle, the
// final re-solve, and the stage-equivalence checks all run through here.

struct ReducedOutcome {
  PrimalStatus status = PrimalStatus::Error;
  double power_w = std::numeric_limits<double>::quiet_NaN();
  Eigen::MatrixXcd w;    // M x K, physical units
  Eigen::VectorXd sinr;  // K
  Eigen::VectorXd lambda;
  double sum_lambda = 0.0;
  int iterations = 0;
};

namespace detail_primal {

inline ReducedOutcome reduced_stage(const Eigen::MatrixXcd& h_eff, const Eigen::VectorXd& gamma_lin,
                                    const Eigen::VectorXd& noise_w, bool feasibility_variant,
                                    const conic::SolverOptions& opts) {
  const int k_users = static_cast<int>(h_eff.rows());
  const int m_count = static_cast<int>(h_eff.cols());
  if (k_users == 0 || m_count == 0) throw std::invalid_argument("reduced stage: empty channel");
  if (gamma_lin.size() != k_users || noise_w.size() != k_users)
    throw std::invalid_argument("reduced stage: per-user vector sizes must match user count");
  if ((gamma_lin.array() <= 0.0).any()) throw std::invalid_argument("reduced stage: SINR targets must be positive");
  if ((noise_w.array() <= 0.0).any()) throw std::invalid_argument("reduced stage: noise powers must be positive");

  const double h_scale = h_eff.rowwise().norm().maxCoeff();
  if (!(h_scale > 0.0)) throw std::invalid_argument("reduced stage: channel matrix is identically zero");
  const double sigma_scale = std::sqrt(noise_w.maxCoeff());
  const Eigen::MatrixXcd h_norm = h_eff / h_scale;
  double prescale = 1.0;  // O(1)-power reparameterization, same idea as the LMI stage
  if (!feasibility_variant) {
    prescale = 0.0;
    for (int k = 0; k < k_users; ++k)
      prescale += gamma_lin(k) * (noise_w(k) / (sigma_scale * sigma_scale)) / h_norm.row(k).squaredNorm();
    if (!(std::isfinite(prescale) && prescale > 0.0)) prescale = 1.0;
  }
  const double power_unit = (sigma_scale / h_scale) * (sigma_scale / h_scale) * prescale;

  conic::Problem p;
  const int idx_t = p.add_vars(1);
  const int idx_rho = p.add_vars(k_users);
  CplxVars w_vars{0, m_count, k_users};
  w_vars.base = p.add_vars(w_vars.count());
  int idx_lambda = -1;
  if (feasibility_variant) idx_lambda = p.add_vars(k_users);

  if (feasibility_variant) {
    for (int k = 0; k < k_users; ++k) p.add_objective_term(idx_lambda + k, 1.0);
    p.add_objective_term(idx_t, kFeasibilityEps);
  } else {
    p.add_objective_term(idx_t, 1.0);
  }

  // ||vec(W)||^2 <= t as the standard cone ||(2 vec(W), t-1)|| <= t+1
  {
    conic::LinExpr head(1.0);
    head.add(idx_t, 1.0);
    std::vector<conic::LinExpr> tail;
    for (int k = 0; k < k_users; ++k)
      for (int m = 0; m < m_count; ++m) {
        tail.push_back(conic::LinExpr().add(w_vars.re(m, k), 2.0));
        tail.push_back(conic::LinExpr().add(w_vars.im(m, k), 2.0));
      }
    tail.push_back(conic::LinExpr(-1.0).add(idx_t, 1.0));
    p.add_soc(head, tail, "power-epigraph");
  }
  if (feasibility_variant)
    for (int k = 0; k < k_users; ++k)
      p.add_ineq_le0(conic::LinExpr().add(idx_lambda + k, -1.0), "slack-nonneg-" + std::to_string(k));

  for (int k = 0; k < k_users; ++k) {
    conic::LinExpr re, im;
    row_times_column(h_norm, k, w_vars, k, re, im);
    re.add(idx_rho + k, -1.0);
    p.add_equalities({re, im}, "phase-" + std::to_string(k));
  }
  for (int k = 0; k < k_users; ++k) {
    conic::LinExpr head;
    head.add(idx_rho + k, 1.0 / std::sqrt(gamma_lin(k)));
    if (feasibility_variant) head.add(idx_lambda + k, 1.0);
    std::vector<conic::LinExpr> tail;
    for (int kp = 0; kp < k_users; ++kp) {
      if (kp == k) continue;
      conic::LinExpr re, im;
      row_times_column(h_norm, k, w_vars, kp, re, im);
      tail.push_back(re);
      tail.push_back(im);
    }
    tail.emplace_back(std::sqrt(noise_w(k) / prescale) / sigma_scale);
    p.add_soc(head, tail, "sinr-" + std::to_string(k));
  }

  ReducedOutcome out;
  const conic::Solution sol = conic::solve(p, opts);
  out.iterations = sol.iterations;
  if (sol.status == conic::SolveStatus::PrimalInfeasible) {
    out.status = feasibility_variant ? PrimalStatus::Error : PrimalStatus::Infeasible;
    return out;
  }
  if (sol.status != conic::SolveStatus::Optimal) {
    out.status = PrimalStatus::Error;
    return out;
  }
  out.status = PrimalStatus::Feasible;
  out.w = unpack_cplx(sol.x, w_vars, sigma_scale / h_scale * std::sqrt(prescale));
  out.sinr = sinr_of(h_eff, out.w, noise_w);
  out.power_w = feasibility_variant ? out.w.squaredNorm() : power_unit * sol.x(idx_t);
  if (feasibility_variant) {
    out.lambda.resize(k_users);
    for (int k = 0; k < k_users; ++k) out.lambda(k) = std::sqrt(prescale) * sol.x(idx_lambda + k);
    out.sum_lambda = out.lambda.sum();
  }
  return out;
}

}  // namespace detail_primal

inline ReducedOutcome reduced_power_min(const Eigen::MatrixXcd& h_eff, const Eigen::VectorXd& gamma_lin,
                                        const Eigen::VectorXd& noise_w,
                                        const conic::SolverOptions& opts = default_primal_options()) {
  return detail_primal::reduced_stage(h_eff, gamma_lin, noise_w, false, opts);
}

inline ReducedOutcome reduced_feasibility(const Eigen::MatrixXcd& h_eff, const Eigen::VectorXd& gamma_lin,
                                          const Eigen::VectorXd& noise_w,
                                          const conic::SolverOptions& opts = default_primal_options()) {
  return detail_primal::reduced_stage(h_eff, gamma_lin, noise_w, true, opts);
}

}  // namespace mabeam
