// SPDX-License-Identifier: Apache-2.0
// Part of mabeam: movable-antenna beamforming solver suite.
#pragma once

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

// Test-side LP text model: parses the master's exported MILP and solves it by
// exhaustive enumeration over one-hot assignments, reading nothing but the
// text.  Used to arbitrate the branch-and-bound master from the consumer side;
// coefficient accumulation follows text order so values tie bit for bit.

namespace milp_text {

enum class VarKind { Eta, B, Y };

struct VarRef {
  VarKind kind = VarKind::Eta;
  int m = 0, mp = 0, i = 0, j = 0;  // B uses (m, i); Y uses all four
};

struct Term {
  VarRef var;
  double coeff = 0.0;
};

enum class Sense { Le, Ge, Eq };

struct Row {
  std::string name;
  std::vector<Term> terms;  // in text order
  Sense sense = Sense::Ge;
  double rhs = 0.0;
  bool has_eta = false;
};

struct Model {
  std::vector<Row> rows;
  int num_antennas = 0;
  int num_positions = 0;
};

inline VarRef decode_var(const std::string& name) {
  VarRef v;
  if (name == "eta") {
    v.kind = VarKind::Eta;
    return v;
  }
  std::vector<int> idx;
  std::size_t p = name.find('_');
  const std::string head = name.substr(0, p);
  while (p != std::string::npos) {
    const std::size_t q = name.find('_', p + 1);
    idx.push_back(std::atoi(name.substr(p + 1, q - p - 1).c_str()));
    p = q;
  }
  if (head == "b" && idx.size() == 2) {
    v.kind = VarKind::B;
    v.m = idx[0];
    v.i = idx[1];
  } else if (head == "y" && idx.size() == 4) {
    v.kind = VarKind::Y;
    v.m = idx[0];
    v.mp = idx[1];
    v.i = idx[2];
    v.j = idx[3];
  } else {
    throw std::invalid_argument("milp_text: unknown variable " + name);
  }
  return v;
}

inline std::vector<std::string> tokens_of(const std::string& line) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

inline Model parse(const std::string& text) {
  Model model;
  enum { Preamble, Constraints, Other } section = Preamble;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t end = text.find('\n', start);
    const std::string line = text.substr(start, end == std::string::npos ? std::string::npos : end - start);
    start = end == std::string::npos ? text.size() + 1 : end + 1;
    if (line.empty() || line[0] == '\\') continue;
    const auto toks = tokens_of(line);
    if (toks.empty()) continue;
    if (toks[0] == "Minimize" || toks[0] == "Maximize") {
      section = Preamble;
      continue;
    }
    if (toks[0] == "Subject") {
      section = Constraints;
      continue;
    }
    if (toks[0] == "Bounds" || toks[0] == "Binary" || toks[0] == "General" || toks[0] == "End") {
      section = Other;
      if (toks[0] == "End") break;
      continue;
    }
    if (section != Constraints) {
      // track dimensions from the Binary section
      if (section == Other && toks.size() == 1 && toks[0].size() > 2 && toks[0][0] == 'b') {
        const VarRef v = decode_var(toks[0]);
        model.num_antennas = std::max(model.num_antennas, v.m + 1);
        model.num_positions = std::max(model.num_positions, v.i + 1);
      }
      continue;
    }
    Row row;
    std::size_t t = 0;
    if (toks[t].back() == ':') {
      row.name = toks[t].substr(0, toks[t].size() - 1);
      ++t;
    }
    double sign = 1.0;
    bool have_sign = false;
    while (t < toks.size()) {
      const std::string& tok = toks[t];
      if (tok == "+" || tok == "-") {
        sign = tok == "-" ? -1.0 : 1.0;
        have_sign = true;
        ++t;
        continue;
      }
      if (tok == "<=" || tok == ">=" || tok == "=") {
        row.sense = tok == "<=" ? Sense::Le : tok == ">=" ? Sense::Ge : Sense::Eq;
        if (t + 1 >= toks.size()) throw std::invalid_argument("milp_text: missing rhs in " + row.name);
        row.rhs = std::strtod(toks[t + 1].c_str(), nullptr);
        t += 2;
        break;
      }
      const bool numeric = std::isdigit(static_cast<unsigned char>(tok[0])) || tok[0] == '.';
      Term term;
      if (numeric) {
        const double mag = std::strtod(tok.c_str(), nullptr);
        term.coeff = sign < 0.0 ? -mag : mag;
        if (t + 1 >= toks.size()) throw std::invalid_argument("milp_text: dangling coefficient in " + row.name);
        term.var = decode_var(toks[t + 1]);
        t += 2;
      } else {
        term.coeff = sign;
        term.var = decode_var(tok);
        ++t;
      }
      row.has_eta = row.has_eta || term.var.kind == VarKind::Eta;
      row.terms.push_back(term);
      sign = 1.0;
      have_sign = false;
    }
    (void)have_sign;
    model.rows.push_back(std::move(row));
  }
  if (model.num_antennas == 0 || model.num_positions == 0)
    throw std::invalid_argument("milp_text: no b variables declared Binary");
  return model;
}

struct Enumerated {
  bool found = false;
  double eta = 0.0;
  std::vector<int> placement;
  long long feasible_count = 0;
};

// Exhaustive solve: walk one-hot assignments in lexicographic order, derive
// each y as the product its link rows force, evaluate every row in text order,
// and track the minimum eta requirement.  First strict improvement wins, so
// ties resolve to the lexicographically smallest placement, matching the
// branch-and-bound contract.
inline Enumerated enumerate_best(const Model& model) {
  const int m_count = model.num_antennas;
  const int n_count = model.num_positions;
  Enumerated best;
  std::vector<int> pos(m_count, 0);
  while (true) {
    auto value_of = [&](const VarRef& v) -> double {
      if (v.kind == VarKind::B) return pos[v.m] == v.i ? 1.0 : 0.0;
      if (v.kind == VarKind::Y) return (pos[v.m] == v.i && pos[v.mp] == v.j) ? 1.0 : 0.0;
      return 0.0;  // eta handled separately
    };
    bool ok = true;
    double eta_req = -std::numeric_limits<double>::infinity();
    bool saw_eta_row = false;
    for (const Row& row : model.rows) {
      double acc = 0.0;
      double eta_coeff = 0.0;
      for (const Term& term : row.terms) {
        if (term.var.kind == VarKind::Eta)
          eta_coeff = term.coeff;
        else if (value_of(term.var) == 1.0)
          acc += term.coeff;
      }
      if (row.has_eta) {
        if (eta_coeff != 1.0 || row.sense != Sense::Ge)
          throw std::invalid_argument("milp_text: unsupported eta row " + row.name);
        saw_eta_row = true;
        eta_req = std::max(eta_req, row.rhs - acc);
        continue;
      }
      const bool sat = row.sense == Sense::Le   ? acc <= row.rhs
                       : row.sense == Sense::Ge ? acc >= row.rhs
                                                : acc == row.rhs;
      if (!sat) {
        ok = false;
        break;
      }
    }
    if (ok) {
      const double eta = saw_eta_row ? eta_req : 0.0;
      ++best.feasible_count;
      if (!best.found || eta < best.eta) {
        best.found = true;
        best.eta = eta;
        best.placement = pos;
      }
    }
    int d = m_count - 1;
    while (d >= 0 && pos[d] == n_count - 1) pos[d--] = 0;
    if (d < 0) break;
    ++pos[d];
  }
  return best;
}

}  // namespace milp_text
