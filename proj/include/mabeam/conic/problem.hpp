// SPDX-License-Identifier: Apache-2.0
// Part of mabeam: movable-antenna beamforming solver suite.
#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <complex>
#include <cmath>
#include <numbers>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

// Solver-agnostic conic problem container:
//   minimize    c'x
//   subject to  A x = b
//               s = h - G x,  s in K = R+^l x SOC(d1) x ... x PSD(r1) x ...
// Complex Hermitian PSD constraints are stored through the real symmetric
// embedding [[Re, -Im], [Im, Re]]; PSD blocks use the scaled svec
// vectorization (off-diagonals * sqrt(2)) so the cone is self-dual under the
// plain dot product.
//
// Dual/sign convention used artifact-wide: the Lagrangian is
//   L = c'x + y'(Ax - b) + sum_blocks z'(Gx - h)
// i.e. inequality blocks written as (expression <= 0) contribute
// + dual * expression, and a PSD constraint S >= 0 contributes -<Xi, S> with
// Xi PSD (see recover_hermitian_dual for the complex-side pairing).

namespace mabeam::conic {

// ---------------------------------------------------------------------------
// svec / smat helpers (scaled symmetric vectorization, column-major lower
// triangle).
inline int svec_dim(int side) { return side * (side + 1) / 2; }

inline int svec_index(int side, int row, int col) {
  // requires row >= col
  return col * side - col * (col - 1) / 2 + (row - col);
}

inline Eigen::VectorXd svec(const Eigen::MatrixXd& s) {
  const int r = static_cast<int>(s.rows());
  Eigen::VectorXd v(svec_dim(r));
  int idx = 0;
  for (int j = 0; j < r; ++j)
    for (int i = j; i < r; ++i)
      v(idx++) = (i == j) ? s(i, j) : std::numbers::sqrt2 * 0.5 * (s(i, j) + s(j, i));
  return v;
}

inline Eigen::MatrixXd smat(const Eigen::VectorXd& v, int side) {
  Eigen::MatrixXd s(side, side);
  int idx = 0;
  for (int j = 0; j < side; ++j)
    for (int i = j; i < side; ++i) {
      const double val = v(idx++);
      if (i == j) {
        s(i, j) = val;
      } else {
        s(i, j) = val / std::numbers::sqrt2;
        s(j, i) = s(i, j);
      }
    }
  return s;
}

// ---------------------------------------------------------------------------
// Complex Hermitian <-> real symmetric embedding.
inline Eigen::MatrixXd embed_hermitian(const Eigen::MatrixXcd& m, double skew_tol = 1e-10) {
  if (m.rows() != m.cols()) throw std::invalid_argument("embed_hermitian: matrix must be square");
  const double skew = (m - m.adjoint()).norm();
  if (skew > skew_tol * std::max(1.0, m.norm()))
    throw std::invalid_argument("embed_hermitian: input is not Hermitian");
  const int q = static_cast<int>(m.rows());
  Eigen::MatrixXd e(2 * q, 2 * q);
  const Eigen::MatrixXd re = m.real(), im = m.imag();
  e.topLeftCorner(q, q) = re;
  e.topRightCorner(q, q) = -im;
  e.bottomLeftCorner(q, q) = im;
  e.bottomRightCorner(q, q) = re;
  return e;
}

// Structured projection of an embedded dual back to the complex side.  For a
// real symmetric Y of size 2q paired with embed_hermitian(S) by Tr(Y * E(S)),
// the complex matrix Xi with <Xi, S> = Re Tr(Xi S) = Tr(Y E(S)) is
// Xi = 2 * (A + iB), A = (Y_TL + Y_BR)/2, B = (Y_BL - Y_TR)/2.
inline Eigen::MatrixXcd recover_hermitian_dual(const Eigen::MatrixXd& y) {
  if (y.rows() != y.cols() || y.rows() % 2 != 0)
    throw std::invalid_argument("recover_hermitian_dual: even-sized square matrix required");
  const int q = static_cast<int>(y.rows()) / 2;
  const Eigen::MatrixXd a = 0.5 * (y.topLeftCorner(q, q) + y.bottomRightCorner(q, q));
  const Eigen::MatrixXd b = 0.5 * (y.bottomLeftCorner(q, q) - y.topRightCorner(q, q));
  Eigen::MatrixXcd xi(q, q);
  xi.real() = 2.0 * 0.5 * (a + a.transpose());
  xi.imag() = 2.0 * 0.5 * (b - b.transpose());
  return xi;
}

// ---------------------------------------------------------------------------
// Affine expressions over the real decision vector.
struct LinExpr {
  std::vector<std::pair<int, double>> terms;  // (variable, coefficient)
  double constant = 0.0;

  LinExpr() = default;
  explicit LinExpr(double c) : constant(c) {}
  LinExpr& add(int var, double coeff) {
    if (coeff != 0.0) terms.emplace_back(var, coeff);
    return *this;
  }
};

// Affine complex Hermitian matrix, lower triangle only (the upper triangle is
// the implied conjugate).  Diagonal expressions must be real.
class HermitianExpr {
 public:
  explicit HermitianExpr(int side) : side_(side) {
    if (side < 1) throw std::invalid_argument("HermitianExpr: side must be positive");
  }

  void add_term(int row, int col, int var, std::complex<double> coeff) {
    check(row, col, coeff);
    terms_.push_back({row, col, var, coeff});
  }
  void add_constant(int row, int col, std::complex<double> value) {
    check(row, col, value);
    constants_.push_back({row, col, 0, value});
  }

  int side() const { return side_; }

  struct Entry {
    int row, col, var;
    std::complex<double> value;
  };
  const std::vector<Entry>& terms() const { return terms_; }
  const std::vector<Entry>& constants() const { return constants_; }

 private:
  void check(int row, int col, std::complex<double> v) const {
    if (row < 0 || col < 0 || row >= side_ || col >= side_ || row < col)
      throw std::invalid_argument("HermitianExpr: need lower-triangle indices in range");
    if (row == col && std::abs(v.imag()) > 1e-14 * std::max(1.0, std::abs(v.real())))
      throw std::invalid_argument("HermitianExpr: diagonal expressions must be real");
  }

  int side_;
  std::vector<Entry> terms_;
  std::vector<Entry> constants_;
};

// ---------------------------------------------------------------------------
enum class ConeKind { NonNeg, Soc, Psd };

struct ConeBlock {
  ConeKind kind;
  int offset = 0;  // first row in G/h
  int dim = 0;     // rows in G/h (svec dimension for PSD)
  int side = 0;    // PSD: embedded matrix side; SOC: vector length; NonNeg: count
  std::string label;
};

struct EqBlock {
  int offset = 0;
  int rows = 0;
  std::string label;
};

class Problem {
 public:
  int add_vars(int count) {
    const int first = num_vars_;
    num_vars_ += count;
    return first;
  }
  int num_vars() const { return num_vars_; }
  int num_eq_rows() const { return eq_rows_; }
  int num_cone_rows() const { return cone_rows_; }

  void add_objective_term(int var, double coeff) {
    check_var(var);
    obj_.emplace_back(var, coeff);
  }

  // Drop the objective, keeping every constraint: turns the problem into a
  // pure feasibility system (phase-1 probe).
  void clear_objective() { obj_.clear(); }

  // expr == 0
  void add_equality(const LinExpr& expr, const std::string& label) {
    eq_blocks_.push_back({eq_rows_, 1, label});
    append_eq_row(expr);
  }
  void add_equalities(const std::vector<LinExpr>& exprs, const std::string& label) {
    eq_blocks_.push_back({eq_rows_, static_cast<int>(exprs.size()), label});
    for (const auto& e : exprs) append_eq_row(e);
  }

  // expr <= 0; each call creates a one-row nonnegative block.
  int add_ineq_le0(const LinExpr& expr, const std::string& label) {
    cones_.push_back({ConeKind::NonNeg, cone_rows_, 1, 1, label});
    append_cone_row(expr);  // s = -expr >= 0
    return static_cast<int>(cones_.size()) - 1;
  }

  // || tail || <= head
  int add_soc(const LinExpr& head, const std::vector<LinExpr>& tail, const std::string& label) {
    const int dim = 1 + static_cast<int>(tail.size());
    cones_.push_back({ConeKind::Soc, cone_rows_, dim, dim, label});
    append_cone_row_neg(head);  // s0 = head
    for (const auto& t : tail) append_cone_row_neg(t);
    return static_cast<int>(cones_.size()) - 1;
  }

  // expr(x) >= 0 (complex Hermitian PSD), stored via the real embedding.
  int add_psd_hermitian(const HermitianExpr& expr, const std::string& label) {
    const int q = expr.side();
    const int r = 2 * q;
    const int dim = svec_dim(r);
    cones_.push_back({ConeKind::Psd, cone_rows_, dim, r, label});
    // s = h - Gx must equal svec(embed(expr)); spread every complex entry
    // over its embedded positions.
    auto emit = [&](int row, int col, int var, std::complex<double> v, bool is_term) {
      const double re = v.real(), im = v.imag();
      auto put = [&](int i, int j, double val) {
        if (val == 0.0) return;
        const double scaled = (i == j) ? val : std::numbers::sqrt2 * val;
        const int r_idx = cone_rows_ + svec_index(r, i, j);
        if (is_term)
          g_triplets_.emplace_back(r_idx, var, -scaled);
        else
          h_entries_.emplace_back(r_idx, scaled);
      };
      if (row == col) {
        put(row, col, re);
        put(q + row, q + col, re);
      } else {
        put(row, col, re);
        put(q + row, q + col, re);
        put(q + row, col, im);
        put(q + col, row, -im);
      }
    };
    for (const auto& t : expr.terms()) {
      check_var(t.var);
      emit(t.row, t.col, t.var, t.value, true);
    }
    for (const auto& t : expr.constants()) emit(t.row, t.col, 0, t.value, false);
    cone_rows_ += dim;
    return static_cast<int>(cones_.size()) - 1;
  }

  // Real symmetric PSD constraint: expr (r x r, lower triangle of LinExpr
  // entries) >= 0.  Used by tests and small real SDPs.
  int add_psd_real(int side, const std::vector<std::vector<LinExpr>>& lower, const std::string& label) {
    const int dim = svec_dim(side);
    cones_.push_back({ConeKind::Psd, cone_rows_, dim, side, label});
    for (int j = 0; j < side; ++j)
      for (int i = j; i < side; ++i) {
        const LinExpr& e = lower[i][j];
        const double scale = (i == j) ? 1.0 : std::numbers::sqrt2;
        const int row = cone_rows_ + svec_index(side, i, j);
        for (const auto& [var, coeff] : e.terms) {
          check_var(var);
          g_triplets_.emplace_back(row, var, -scale * coeff);
        }
        if (e.constant != 0.0) h_entries_.emplace_back(row, scale * e.constant);
      }
    cone_rows_ += dim;
    return static_cast<int>(cones_.size()) - 1;
  }

  const std::vector<ConeBlock>& cones() const { return cones_; }
  const std::vector<EqBlock>& eq_blocks() const { return eq_blocks_; }

  const ConeBlock& cone_by_label(const std::string& label) const {
    for (const auto& c : cones_)
      if (c.label == label) return c;
    throw std::invalid_argument("cone_by_label: no block labeled " + label);
  }
  const EqBlock& eq_by_label(const std::string& label) const {
    for (const auto& e : eq_blocks_)
      if (e.label == label) return e;
    throw std::invalid_argument("eq_by_label: no equality block labeled " + label);
  }

  // Materialized standard-form data (built once, cached).
  struct Standard {
    Eigen::VectorXd c;
    Eigen::SparseMatrix<double> a;  // eq_rows x n
    Eigen::VectorXd b;
    Eigen::SparseMatrix<double> g;  // cone_rows x n
    Eigen::VectorXd h;
  };

  const Standard& standard() const {
    if (!built_) {
      std_.c = Eigen::VectorXd::Zero(num_vars_);
      for (const auto& [v, coeff] : obj_) std_.c(v) += coeff;
      std_.a.resize(eq_rows_, num_vars_);
      std_.a.setFromTriplets(a_triplets_.begin(), a_triplets_.end());
      std_.b = Eigen::VectorXd::Zero(eq_rows_);
      for (const auto& [row, val] : b_entries_) std_.b(row) += val;
      std_.g.resize(cone_rows_, num_vars_);
      std_.g.setFromTriplets(g_triplets_.begin(), g_triplets_.end());
      std_.h = Eigen::VectorXd::Zero(cone_rows_);
      for (const auto& [row, val] : h_entries_) std_.h(row) += val;
      if (!std_.c.allFinite() || !std_.b.allFinite() || !std_.h.allFinite())
        throw std::invalid_argument("conic problem: non-finite coefficients");
      built_ = true;
    }
    return std_;
  }

  // Self-describing text dump (dimensions, cone list, sparse triplets) for
  // cross-checking against an external solver.
  void dump(std::ostream& os) const {
    const Standard& s = standard();
    os.precision(17);
    os << "conic-problem v1\n";
    os << "vars " << num_vars_ << "\n";
    os << "objective";
    for (int i = 0; i < s.c.size(); ++i)
      if (s.c(i) != 0.0) os << " " << i << ":" << s.c(i);
    os << "\n";
    os << "equalities " << eq_rows_ << "\n";
    for (int k = 0; k < s.a.outerSize(); ++k)
      for (Eigen::SparseMatrix<double>::InnerIterator it(s.a, k); it; ++it)
        os << "A " << it.row() << " " << it.col() << " " << it.value() << "\n";
    for (int i = 0; i < s.b.size(); ++i)
      if (s.b(i) != 0.0) os << "b " << i << " " << s.b(i) << "\n";
    os << "cones " << cones_.size() << "\n";
    for (const auto& c : cones_) {
      os << (c.kind == ConeKind::NonNeg ? "nonneg" : c.kind == ConeKind::Soc ? "soc" : "psd");
      os << " offset " << c.offset << " dim " << c.dim << " side " << c.side << " label " << c.label << "\n";
    }
    for (int k = 0; k < s.g.outerSize(); ++k)
      for (Eigen::SparseMatrix<double>::InnerIterator it(s.g, k); it; ++it)
        os << "G " << it.row() << " " << it.col() << " " << it.value() << "\n";
    for (int i = 0; i < s.h.size(); ++i)
      if (s.h(i) != 0.0) os << "h " << i << " " << s.h(i) << "\n";
  }

 private:
  void check_var(int var) const {
    if (var < 0 || var >= num_vars_) throw std::invalid_argument("conic problem: variable index out of range");
  }
  void append_eq_row(const LinExpr& expr) {
    for (const auto& [var, coeff] : expr.terms) {
      check_var(var);
      a_triplets_.emplace_back(eq_rows_, var, coeff);
    }
    if (expr.constant != 0.0) b_entries_.emplace_back(eq_rows_, -expr.constant);
    ++eq_rows_;
  }
  // s_row = -expr  (for "expr <= 0" rows)
  void append_cone_row(const LinExpr& expr) {
    for (const auto& [var, coeff] : expr.terms) {
      check_var(var);
      g_triplets_.emplace_back(cone_rows_, var, coeff);
    }
    if (expr.constant != 0.0) h_entries_.emplace_back(cone_rows_, -expr.constant);
    ++cone_rows_;
  }
  // s_row = +expr  (for SOC component rows)
  void append_cone_row_neg(const LinExpr& expr) {
    for (const auto& [var, coeff] : expr.terms) {
      check_var(var);
      g_triplets_.emplace_back(cone_rows_, var, -coeff);
    }
    if (expr.constant != 0.0) h_entries_.emplace_back(cone_rows_, expr.constant);
    ++cone_rows_;
  }

  int num_vars_ = 0;
  int eq_rows_ = 0;
  int cone_rows_ = 0;
  std::vector<std::pair<int, double>> obj_;
  std::vector<Eigen::Triplet<double>> a_triplets_, g_triplets_;
  std::vector<std::pair<int, double>> b_entries_, h_entries_;
  std::vector<ConeBlock> cones_;
  std::vector<EqBlock> eq_blocks_;
  mutable Standard std_;
  mutable bool built_ = false;
};

}  // namespace mabeam::conic
