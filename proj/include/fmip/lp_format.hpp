// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "fmip/milp.hpp"

namespace fmip {

// LP text subset: Minimize / Subject To / Bounds / Generals / Binaries / End.
// Coefficients are always written explicitly (never an implied 1) with 17
// significant digits so values survive a round trip.

namespace detail {

inline std::string num17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline void append_terms(std::ostringstream& os, const std::vector<std::pair<int, double>>& terms) {
  bool first = true;
  for (const auto& [col, coef] : terms) {
    if (first) {
      os << (coef < 0 ? "- " : "") << num17(std::abs(coef));
      first = false;
    } else {
      os << (coef < 0 ? " - " : " + ") << num17(std::abs(coef));
    }
    os << " x" << col;
  }
  if (first) os << "0 x0";  // empty row: keep the line parseable
}

}  // namespace detail

inline std::string write_lp(const MilpInstance& inst) {
  std::ostringstream os;
  os << "\\ Problem name: " << inst.name << "\n";
  os << "Minimize\n obj: ";
  std::vector<std::pair<int, double>> obj_terms;
  for (int i = 0; i < inst.num_vars; ++i)
    if (inst.obj[i] != 0.0) obj_terms.push_back({i, inst.obj[i]});
  detail::append_terms(os, obj_terms);
  os << "\nSubject To\n";
  std::vector<std::vector<std::pair<int, double>>> rows(inst.num_cons);
  for (const Coef& c : inst.con_matrix) rows[c.row].push_back({c.col, c.value});
  for (int r = 0; r < inst.num_cons; ++r) {
    os << " c" << r << ": ";
    detail::append_terms(os, rows[r]);
    os << " <= " << detail::num17(inst.rhs[r]) << "\n";
  }
  os << "Bounds\n";
  std::vector<int> generals, binaries;
  for (int i = 0; i < inst.num_vars; ++i) {
    const bool binary =
        i < inst.num_int && inst.lower[i] == 0.0 && inst.upper[i] == 1.0;
    if (binary) {
      binaries.push_back(i);
      continue;  // Binaries implies [0, 1]
    }
    if (i < inst.num_int) generals.push_back(i);
    const bool lo_inf = !std::isfinite(inst.lower[i]);
    const bool hi_inf = !std::isfinite(inst.upper[i]);
    if (lo_inf && hi_inf)
      os << " x" << i << " free\n";
    else if (lo_inf)
      os << " x" << i << " <= " << detail::num17(inst.upper[i]) << "\n";
    else if (hi_inf)
      os << " x" << i << " >= " << detail::num17(inst.lower[i]) << "\n";
    else
      os << " " << detail::num17(inst.lower[i]) << " <= x" << i << " <= "
         << detail::num17(inst.upper[i]) << "\n";
  }
  if (!generals.empty()) {
    os << "Generals\n";
    for (int i : generals) os << " x" << i << "\n";
  }
  if (!binaries.empty()) {
    os << "Binaries\n";
    for (int i : binaries) os << " x" << i << "\n";
  }
  os << "End\n";
  return os.str();
}

namespace detail {

struct LpTokens {
  std::vector<std::string> toks;
  std::size_t pos = 0;
  bool done() const { return pos >= toks.size(); }
  const std::string& peek() const { return toks[pos]; }
  std::string next() { return toks[pos++]; }
};

inline int var_index(const std::string& tok) {
  if (tok.size() < 2 || tok[0] != 'x') throw ParseError("lp: unknown variable name '" + tok + "'");
  for (std::size_t i = 1; i < tok.size(); ++i)
    if (!std::isdigit(static_cast<unsigned char>(tok[i])))
      throw ParseError("lp: unknown variable name '" + tok + "'");
  return std::stoi(tok.substr(1));
}

inline bool is_number(const std::string& tok) {
  char* end = nullptr;
  std::strtod(tok.c_str(), &end);
  return end && *end == '\0' && end != tok.c_str();
}

// Parses "[-] coef xN [+|- coef xN ...]" until a relation or section token.
inline std::vector<std::pair<int, double>> parse_terms(LpTokens& t) {
  std::vector<std::pair<int, double>> terms;
  double sign = 1.0;
  while (!t.done()) {
    const std::string& tok = t.peek();
    if (tok == "<=" || tok == ">=" || tok == "=") break;
    if (tok == "+") {
      sign = 1.0;
      t.next();
      continue;
    }
    if (tok == "-") {
      sign = -1.0;
      t.next();
      continue;
    }
    if (!is_number(tok)) break;  // section keyword
    const double coef = std::stod(t.next());
    const int col = var_index(t.next());
    terms.push_back({col, sign * coef});
    sign = 1.0;
  }
  return terms;
}

}  // namespace detail

// Reads back the documented subset. Relations >= and = are normalized to <=
// rows (= becomes two rows). Integer variables must precede continuous ones,
// matching everything this writer emits.
inline MilpInstance read_lp(const std::string& text) {
  MilpInstance inst;
  inst.name = "lp";
  // tokenize, keeping ':' as a separator and '\' comments dropped
  detail::LpTokens t;
  std::istringstream is(text);
  std::string line;
  bool saw_name = false;
  while (std::getline(is, line)) {
    if (!line.empty() && line[0] == '\\') {
      const std::string prefix = "\\ Problem name: ";
      if (!saw_name && line.rfind(prefix, 0) == 0) {
        inst.name = line.substr(prefix.size());
        saw_name = true;
      }
      continue;
    }
    std::string cur;
    for (char ch : line) {
      if (ch == ':') {
        cur.clear();  // row label: discard
        continue;
      }
      if (std::isspace(static_cast<unsigned char>(ch))) {
        if (!cur.empty()) t.toks.push_back(cur);
        cur.clear();
      } else {
        cur += ch;
      }
    }
    if (!cur.empty()) t.toks.push_back(cur);
  }

  const auto is_section = [](const std::string& s) {
    return s == "Minimize" || s == "Subject" || s == "Bounds" || s == "Generals" ||
           s == "Binaries" || s == "End";
  };

  std::vector<std::pair<int, double>> obj_terms;
  struct Row {
    std::vector<std::pair<int, double>> terms;
    std::string rel;
    double rhs;
  };
  std::vector<Row> raw_rows;
  std::map<int, std::pair<double, double>> explicit_bounds;
  std::vector<int> generals, binaries;
  int max_var = -1;

  std::string section;
  while (!t.done()) {
    std::string tok = t.next();
    if (tok == "Subject") {
      if (t.done() || t.next() != "To") throw ParseError("lp: expected 'Subject To'");
      section = "Subject To";
      continue;
    }
    if (is_section(tok)) {
      section = tok;
      continue;
    }
    t.pos--;  // put the token back for section-specific parsing
    if (section == "Minimize") {
      obj_terms = detail::parse_terms(t);
    } else if (section == "Subject To") {
      Row row;
      row.terms = detail::parse_terms(t);
      if (t.done()) throw ParseError("lp: constraint missing relation");
      row.rel = t.next();
      if (row.rel != "<=" && row.rel != ">=" && row.rel != "=")
        throw ParseError("lp: bad relation '" + row.rel + "'");
      if (t.done() || !detail::is_number(t.peek())) throw ParseError("lp: constraint missing rhs");
      row.rhs = std::stod(t.next());
      raw_rows.push_back(std::move(row));
    } else if (section == "Bounds") {
      // forms:  lo <= xN <= up | xN <= up | xN >= lo | xN free
      std::string first = t.next();
      if (detail::is_number(first)) {
        const double lo = std::stod(first);
        if (t.next() != "<=") throw ParseError("lp: bad bound line");
        const int col = detail::var_index(t.next());
        if (t.next() != "<=") throw ParseError("lp: bad bound line");
        const double up = std::stod(t.next());
        explicit_bounds[col] = {lo, up};
        max_var = std::max(max_var, col);
      } else {
        const int col = detail::var_index(first);
        max_var = std::max(max_var, col);
        const std::string rel = t.next();
        if (rel == "free") {
          explicit_bounds[col] = {-kInf, kInf};
        } else if (rel == "<=") {
          explicit_bounds[col] = {-kInf, std::stod(t.next())};
        } else if (rel == ">=") {
          explicit_bounds[col] = {std::stod(t.next()), kInf};
        } else {
          throw ParseError("lp: bad bound relation '" + rel + "'");
        }
      }
    } else if (section == "Generals") {
      const int col = detail::var_index(t.next());
      generals.push_back(col);
      max_var = std::max(max_var, col);
    } else if (section == "Binaries") {
      const int col = detail::var_index(t.next());
      binaries.push_back(col);
      max_var = std::max(max_var, col);
    } else {
      throw ParseError("lp: token '" + tok + "' outside any section");
    }
  }

  for (const auto& [col, coef] : obj_terms) max_var = std::max(max_var, col);
  for (const Row& r : raw_rows)
    for (const auto& [col, coef] : r.terms) max_var = std::max(max_var, col);

  inst.num_vars = max_var + 1;
  inst.obj = Vec::Zero(inst.num_vars);
  for (const auto& [col, coef] : obj_terms) inst.obj[col] += coef;
  inst.lower = Vec::Zero(inst.num_vars);  // LP convention: default [0, +inf)
  inst.upper = Vec::Constant(inst.num_vars, kInf);
  for (const auto& [col, bounds] : explicit_bounds) {
    inst.lower[col] = bounds.first;
    inst.upper[col] = bounds.second;
  }
  for (int col : binaries) {
    if (!explicit_bounds.count(col)) {
      inst.lower[col] = 0.0;
      inst.upper[col] = 1.0;
    }
  }

  std::vector<double> rhs;
  int next_row = 0;
  const auto add_row = [&](const std::vector<std::pair<int, double>>& terms, double sign,
                           double b) {
    for (const auto& [col, coef] : terms) {
      const double v = sign * coef;
      if (v != 0.0) inst.con_matrix.push_back({next_row, col, v});
    }
    rhs.push_back(sign * b);
    ++next_row;
  };
  for (const Row& r : raw_rows) {
    if (r.rel == "<=") {
      add_row(r.terms, 1.0, r.rhs);
    } else if (r.rel == ">=") {
      add_row(r.terms, -1.0, r.rhs);
    } else {  // equality: two <= rows
      add_row(r.terms, 1.0, r.rhs);
      add_row(r.terms, -1.0, r.rhs);
    }
  }
  inst.num_cons = next_row;
  inst.rhs = Eigen::Map<const Vec>(rhs.data(), static_cast<Eigen::Index>(rhs.size()));

  std::vector<bool> is_int(inst.num_vars, false);
  for (int col : generals) is_int[col] = true;
  for (int col : binaries) is_int[col] = true;
  inst.num_int = 0;
  for (int i = 0; i < inst.num_vars; ++i)
    if (is_int[i]) ++inst.num_int;
  for (int i = 0; i < inst.num_int; ++i)
    if (!is_int[i])
      throw ParseError("lp: integer variables must precede continuous ones");
  long k = 1;
  for (int i = 0; i < inst.num_int; ++i)
    k = std::max(k, static_cast<long>(std::llround(inst.upper[i])));
  inst.int_bound = static_cast<int>(k);
  validate(inst);
  return inst;
}

/// Solution import: whitespace-separated `name value` lines, '#' comments.
inline Assignment read_solution_file(const std::string& text, const MilpInstance& inst) {
  Assignment x = Vec::Zero(inst.num_vars);
  std::vector<bool> seen(inst.num_vars, false);
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    std::istringstream ls(line);
    std::string name;
    double value;
    if (!(ls >> name)) continue;
    if (!(ls >> value)) throw ParseError("solution: missing value for '" + name + "'");
    const int col = detail::var_index(name);
    if (col >= inst.num_vars) throw ParseError("solution: unknown variable '" + name + "'");
    x[col] = value;
    seen[col] = true;
  }
  for (int i = 0; i < inst.num_vars; ++i)
    if (!seen[i]) throw ParseError("solution: variable x" + std::to_string(i) + " missing");
  return x;
}

}  // namespace fmip
