// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cfenv>
#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace fmip {

inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr double kFeasTol = 1e-6;

using Vec = Eigen::VectorXd;
using Assignment = Eigen::VectorXd;

/// One nonzero of the constraint matrix A (row-major coordinate form).
struct Coef {
  int row = 0;
  int col = 0;
  double value = 0.0;
};

// Minimization problem  min w'x  s.t.  A x <= b,  lb <= x <= ub,
// with the first num_int variables integer in {0..int_bound}.
struct MilpInstance {
  std::string name;
  int num_vars = 0;
  int num_cons = 0;
  int num_int = 0;
  int int_bound = 1;
  Vec obj;
  std::vector<Coef> con_matrix;
  Vec rhs;
  Vec lower;
  Vec upper;
};

struct EvalReport {
  double objective = 0.0;
  Vec violations;  // per-row (A_i x - b_i)_+
  double max_violation = 0.0;
  bool feasible = false;
};

class ParseError : public std::runtime_error {
 public:
  explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

/// Checks every structural invariant; throws ParseError naming the bad field.
inline void validate(const MilpInstance& inst) {
  if (inst.num_vars < 0) throw ParseError("num_vars: must be nonnegative");
  if (inst.num_cons < 0) throw ParseError("num_cons: must be nonnegative");
  if (inst.num_int < 0 || inst.num_int > inst.num_vars)
    throw ParseError("num_int: must be in [0, num_vars]");
  if (inst.int_bound < 1) throw ParseError("int_bound: must be >= 1");
  if (inst.obj.size() != inst.num_vars) throw ParseError("obj: length must equal num_vars");
  if (inst.rhs.size() != inst.num_cons) throw ParseError("rhs: length must equal num_cons");
  if (inst.lower.size() != inst.num_vars) throw ParseError("lower: length must equal num_vars");
  if (inst.upper.size() != inst.num_vars) throw ParseError("upper: length must equal num_vars");
  std::set<std::pair<int, int>> seen;
  for (const Coef& c : inst.con_matrix) {
    if (c.row < 0 || c.row >= inst.num_cons) throw ParseError("A: row index out of range");
    if (c.col < 0 || c.col >= inst.num_vars) throw ParseError("A: col index out of range");
    if (!seen.insert({c.row, c.col}).second)
      throw ParseError("A: duplicate coordinate (" + std::to_string(c.row) + "," +
                       std::to_string(c.col) + ")");
  }
  for (int i = 0; i < inst.num_vars; ++i) {
    if (std::isnan(inst.lower[i]) || std::isnan(inst.upper[i]))
      throw ParseError("bounds: NaN is not a valid bound");
    if (std::isfinite(inst.lower[i]) && std::isfinite(inst.upper[i]) &&
        inst.lower[i] > inst.upper[i])
      throw ParseError("bounds: lower[" + std::to_string(i) + "] exceeds upper[" +
                       std::to_string(i) + "]");
    if (i < inst.num_int) {
      if (!std::isfinite(inst.lower[i]) || !std::isfinite(inst.upper[i]))
        throw ParseError("bounds: integer variable " + std::to_string(i) + " must be bounded");
      if (inst.lower[i] < 0.0 || inst.upper[i] > inst.int_bound)
        throw ParseError("bounds: integer variable " + std::to_string(i) +
                         " outside [0, int_bound]");
    }
  }
}

inline EvalReport evaluate(const MilpInstance& inst, const Assignment& x, double tol = kFeasTol) {
  if (x.size() != inst.num_vars)
    throw std::invalid_argument("evaluate: assignment length " + std::to_string(x.size()) +
                                " != num_vars " + std::to_string(inst.num_vars));
  EvalReport rep;
  rep.objective = inst.obj.dot(x);
  Vec activity = Vec::Zero(inst.num_cons);
  for (const Coef& c : inst.con_matrix) activity[c.row] += c.value * x[c.col];
  rep.violations = (activity - inst.rhs).cwiseMax(0.0);
  rep.max_violation = inst.num_cons > 0 ? rep.violations.maxCoeff() : 0.0;

  bool bounds_ok = true;
  bool integral = true;
  for (int i = 0; i < inst.num_vars; ++i) {
    if (x[i] < inst.lower[i] - tol || x[i] > inst.upper[i] + tol) bounds_ok = false;
    if (i < inst.num_int && std::abs(x[i] - std::nearbyint(x[i])) > tol) integral = false;
  }
  rep.feasible = rep.max_violation <= tol && bounds_ok && integral;
  return rep;
}

/// Guidance target: objective plus a quadratic penalty on row violations.
inline double target_f(const MilpInstance& inst, const Assignment& x, double gamma) {
  if (gamma < 0.0) throw std::invalid_argument("target_f: gamma must be nonnegative");
  const EvalReport rep = evaluate(inst, x);
  return rep.objective + gamma * rep.violations.squaredNorm();
}

/// Exact gradient of target_f with respect to the continuous block.
inline Vec target_grad_continuous(const MilpInstance& inst, const Assignment& x, double gamma) {
  if (gamma < 0.0) throw std::invalid_argument("target_grad_continuous: gamma must be nonnegative");
  if (x.size() != inst.num_vars)
    throw std::invalid_argument("target_grad_continuous: assignment length mismatch");
  const int q = inst.num_int;
  Vec activity = Vec::Zero(inst.num_cons);
  for (const Coef& c : inst.con_matrix) activity[c.row] += c.value * x[c.col];
  Vec grad = inst.obj.tail(inst.num_vars - q);
  for (const Coef& c : inst.con_matrix) {
    if (c.col < q) continue;
    const double v = activity[c.row] - inst.rhs[c.row];
    if (v > 0.0) grad[c.col - q] += 2.0 * gamma * v * c.value;
  }
  return grad;
}

// Clamp to [lb, ub]; integer entries are rounded first (ties to even) when
// requested. Infinite bounds impose no clamp.
inline Assignment project_bounds(const MilpInstance& inst, const Assignment& x,
                                 bool round_integers) {
  if (x.size() != inst.num_vars)
    throw std::invalid_argument("project_bounds: assignment length mismatch");
  Assignment out = x;
  for (int i = 0; i < inst.num_vars; ++i) {
    double v = out[i];
    if (round_integers && i < inst.num_int) v = std::nearbyint(v);
    if (std::isfinite(inst.lower[i])) v = std::max(v, inst.lower[i]);
    if (std::isfinite(inst.upper[i])) v = std::min(v, inst.upper[i]);
    out[i] = v;
  }
  return out;
}

namespace detail {

inline nlohmann::json bound_to_json(double v) {
  if (v == kInf) return "inf";
  if (v == -kInf) return "-inf";
  return v;
}

inline double bound_from_json(const nlohmann::json& j, const char* field) {
  if (j.is_string()) {
    const std::string s = j.get<std::string>();
    if (s == "inf") return kInf;
    if (s == "-inf") return -kInf;
    throw ParseError(std::string(field) + ": unknown bound literal '" + s + "'");
  }
  if (!j.is_number()) throw ParseError(std::string(field) + ": expected number or inf literal");
  return j.get<double>();
}

template <typename T>
T require(const nlohmann::json& j, const char* field) {
  if (!j.contains(field)) throw ParseError(std::string(field) + ": missing");
  try {
    return j.at(field).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ParseError(std::string(field) + ": wrong type");
  }
}

}  // namespace detail

inline std::string serialize(const MilpInstance& inst) {
  nlohmann::json j;
  j["name"] = inst.name;
  j["num_vars"] = inst.num_vars;
  j["num_cons"] = inst.num_cons;
  j["num_int"] = inst.num_int;
  j["int_bound"] = inst.int_bound;
  j["obj"] = std::vector<double>(inst.obj.begin(), inst.obj.end());
  j["rhs"] = std::vector<double>(inst.rhs.begin(), inst.rhs.end());
  nlohmann::json lo = nlohmann::json::array(), up = nlohmann::json::array();
  for (int i = 0; i < inst.num_vars; ++i) {
    lo.push_back(detail::bound_to_json(inst.lower[i]));
    up.push_back(detail::bound_to_json(inst.upper[i]));
  }
  j["lower"] = lo;
  j["upper"] = up;
  nlohmann::json a = nlohmann::json::array();
  for (const Coef& c : inst.con_matrix) a.push_back({c.row, c.col, c.value});
  j["A"] = a;
  return j.dump(2);
}

inline MilpInstance parse(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("document: ") + e.what());
  }
  MilpInstance inst;
  inst.name = detail::require<std::string>(j, "name");
  inst.num_vars = detail::require<int>(j, "num_vars");
  inst.num_cons = detail::require<int>(j, "num_cons");
  inst.num_int = detail::require<int>(j, "num_int");
  inst.int_bound = detail::require<int>(j, "int_bound");
  const auto obj = detail::require<std::vector<double>>(j, "obj");
  const auto rhs = detail::require<std::vector<double>>(j, "rhs");
  inst.obj = Eigen::Map<const Vec>(obj.data(), static_cast<Eigen::Index>(obj.size()));
  inst.rhs = Eigen::Map<const Vec>(rhs.data(), static_cast<Eigen::Index>(rhs.size()));
  if (!j.contains("lower") || !j.at("lower").is_array()) throw ParseError("lower: missing or not an array");
  if (!j.contains("upper") || !j.at("upper").is_array()) throw ParseError("upper: missing or not an array");
  const auto& lo = j.at("lower");
  const auto& up = j.at("upper");
  inst.lower.resize(static_cast<Eigen::Index>(lo.size()));
  inst.upper.resize(static_cast<Eigen::Index>(up.size()));
  for (std::size_t i = 0; i < lo.size(); ++i) inst.lower[static_cast<Eigen::Index>(i)] = detail::bound_from_json(lo[i], "lower");
  for (std::size_t i = 0; i < up.size(); ++i) inst.upper[static_cast<Eigen::Index>(i)] = detail::bound_from_json(up[i], "upper");
  if (!j.contains("A") || !j.at("A").is_array()) throw ParseError("A: missing or not an array");
  for (const auto& t : j.at("A")) {
    if (!t.is_array() || t.size() != 3) throw ParseError("A: entries must be [row, col, coef] triples");
    Coef c;
    c.row = t[0].get<int>();
    c.col = t[1].get<int>();
    c.value = t[2].get<double>();
    inst.con_matrix.push_back(c);
  }
  validate(inst);
  return inst;
}

inline std::string serialize_assignment(const Assignment& x, double objective = std::numeric_limits<double>::quiet_NaN()) {
  nlohmann::json j;
  j["values"] = std::vector<double>(x.begin(), x.end());
  if (!std::isnan(objective)) j["objective"] = objective;
  return j.dump(2);
}

inline Assignment parse_assignment(const std::string& text, double* objective = nullptr) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("document: ") + e.what());
  }
  const auto values = detail::require<std::vector<double>>(j, "values");
  if (objective) *objective = j.value("objective", std::numeric_limits<double>::quiet_NaN());
  return Eigen::Map<const Vec>(values.data(), static_cast<Eigen::Index>(values.size()));
}

}  // namespace fmip
