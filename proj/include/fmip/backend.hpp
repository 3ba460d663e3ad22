// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <chrono>
#include <cmath>
#include <limits>
#include <optional>
#include <queue>
#include <stdexcept>
#include <string>
#include <vector>

#include "fmip/milp.hpp"
#include "fmip/simplex.hpp"

namespace fmip {

enum class SolveStatus { kOptimal, kFeasible, kInfeasible, kTimeout, kError };

inline const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::kOptimal: return "optimal";
    case SolveStatus::kFeasible: return "feasible";
    case SolveStatus::kInfeasible: return "infeasible";
    case SolveStatus::kTimeout: return "timeout";
    case SolveStatus::kError: return "error";
  }
  return "?";
}

struct SolveResult {
  SolveStatus status = SolveStatus::kError;
  std::optional<Assignment> assignment;
  double objective = std::numeric_limits<double>::infinity();
  double bound = -std::numeric_limits<double>::infinity();
  double wall_time_s = 0.0;
  long nodes = 0;
  std::vector<double> incumbent_history;  // objective after each improvement
  std::string message;
};

/// Pluggable MILP solving surface. Implementations must be safe to call
/// concurrently on distinct instances (no shared mutable state).
class Backend {
 public:
  virtual ~Backend() = default;
  virtual SolveResult solve(const MilpInstance& inst, double time_limit_s) const = 0;
};

namespace detail {

// Unbounded continuous variables are boxed so the simplex stays in bounded
// standard form; a solution pinned at the artificial box is reported as an
// error (the relaxation was effectively unbounded).
inline constexpr double kBoxBound = 1e7;

struct BoxedBounds {
  Vec lb, ub;
  std::vector<bool> boxed_lo, boxed_hi;
};

inline BoxedBounds box_bounds(const Vec& lower, const Vec& upper) {
  const int n = static_cast<int>(lower.size());
  BoxedBounds bb;
  bb.lb = lower;
  bb.ub = upper;
  bb.boxed_lo.assign(n, false);
  bb.boxed_hi.assign(n, false);
  for (int i = 0; i < n; ++i) {
    if (!std::isfinite(bb.lb[i])) {
      bb.lb[i] = -kBoxBound;
      bb.boxed_lo[i] = true;
    }
    if (!std::isfinite(bb.ub[i])) {
      bb.ub[i] = kBoxBound;
      bb.boxed_hi[i] = true;
    }
  }
  return bb;
}

inline SolveResult lp_relax_with_bounds(const MilpInstance& inst, const Vec& lower,
                                        const Vec& upper) {
  const auto t0 = std::chrono::steady_clock::now();
  SolveResult res;
  for (int i = 0; i < inst.num_vars; ++i) {
    if (std::isfinite(lower[i]) && std::isfinite(upper[i]) && lower[i] > upper[i]) {
      res.status = SolveStatus::kInfeasible;
      return res;
    }
  }
  const BoxedBounds bb = box_bounds(lower, upper);
  const LpSolution sol =
      solve_lp(inst.num_vars, inst.con_matrix, inst.rhs, inst.obj, bb.lb, bb.ub);
  res.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  switch (sol.status) {
    case LpStatus::kInfeasible:
      res.status = SolveStatus::kInfeasible;
      return res;
    case LpStatus::kUnbounded:
    case LpStatus::kIterLimit:
      res.status = SolveStatus::kError;
      res.message = sol.status == LpStatus::kUnbounded ? "relaxation unbounded" : "iteration limit";
      return res;
    case LpStatus::kOptimal:
      break;
  }
  for (int i = 0; i < inst.num_vars; ++i) {
    if ((bb.boxed_lo[i] && sol.x[i] < -kBoxBound * 0.999) ||
        (bb.boxed_hi[i] && sol.x[i] > kBoxBound * 0.999)) {
      res.status = SolveStatus::kError;
      res.message = "solution at artificial box: relaxation likely unbounded";
      return res;
    }
  }
  res.status = SolveStatus::kOptimal;
  res.assignment = sol.x;
  res.objective = sol.objective;
  res.bound = sol.objective;
  return res;
}

}  // namespace detail

/// Solves the LP relaxation (integrality dropped).
inline SolveResult lp_relax(const MilpInstance& inst) {
  return detail::lp_relax_with_bounds(inst, inst.lower, inst.upper);
}

// Best-first branch and bound on the most-fractional integer variable.
inline SolveResult branch_and_bound(const MilpInstance& inst, double time_limit_s = 3600.0,
                                    double gap_tol = 1e-6) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto elapsed = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  };
  constexpr double kIntTol = 1e-6;

  SolveResult res;
  res.objective = std::numeric_limits<double>::infinity();

  struct Node {
    double bound;
    Vec x;  // fractional relaxation solution
    Vec lower, upper;
    bool operator>(const Node& o) const { return bound > o.bound; }
  };
  std::priority_queue<Node, std::vector<Node>, std::greater<Node>> open;

  const auto push_node = [&](Vec lo, Vec up) -> bool {
    // returns false on an error status from the relaxation
    SolveResult rel = detail::lp_relax_with_bounds(inst, lo, up);
    ++res.nodes;
    if (rel.status == SolveStatus::kInfeasible) return true;
    if (rel.status == SolveStatus::kError) {
      res.status = SolveStatus::kError;
      res.message = rel.message;
      return false;
    }
    if (rel.objective >= res.objective - gap_tol) return true;  // pruned
    // integral relaxation solution becomes an incumbent
    bool integral = true;
    for (int i = 0; i < inst.num_int; ++i) {
      if (std::abs((*rel.assignment)[i] - std::nearbyint((*rel.assignment)[i])) > kIntTol) {
        integral = false;
        break;
      }
    }
    if (integral) {
      Assignment snapped = project_bounds(inst, *rel.assignment, true);
      const double obj = inst.obj.dot(snapped);
      if (evaluate(inst, snapped).feasible && obj < res.objective) {
        res.objective = obj;
        res.assignment = snapped;
        res.incumbent_history.push_back(obj);
      }
      return true;
    }
    open.push(Node{rel.objective, std::move(*rel.assignment), std::move(lo), std::move(up)});
    return true;
  };

  if (!push_node(inst.lower, inst.upper)) return res;

  double best_open_bound = -std::numeric_limits<double>::infinity();
  bool timed_out = false;
  while (!open.empty()) {
    if (elapsed() > time_limit_s) {
      timed_out = true;
      best_open_bound = open.top().bound;
      break;
    }
    Node node = open.top();
    open.pop();
    if (node.bound >= res.objective - gap_tol) continue;

    int branch_var = -1;
    double best_frac = -1.0;
    for (int i = 0; i < inst.num_int; ++i) {
      const double v = node.x[i];
      const double frac = std::abs(v - std::nearbyint(v));
      if (frac > kIntTol && frac > best_frac + 1e-12) {
        best_frac = frac;
        branch_var = i;
      }
    }
    if (branch_var < 0) continue;
    const double v = node.x[branch_var];

    Vec up = node.upper;
    up[branch_var] = std::floor(v);
    if (!push_node(node.lower, std::move(up))) return res;
    Vec lo = node.lower;
    lo[branch_var] = std::ceil(v);
    if (!push_node(std::move(lo), node.upper)) return res;
  }

  res.wall_time_s = elapsed();
  if (res.assignment) {
    res.status = timed_out ? SolveStatus::kTimeout : SolveStatus::kOptimal;
    res.bound = timed_out ? std::min(best_open_bound, res.objective) : res.objective;
  } else {
    res.status = timed_out ? SolveStatus::kTimeout : SolveStatus::kInfeasible;
    res.bound = timed_out ? best_open_bound : std::numeric_limits<double>::infinity();
  }
  return res;
}

// Exhaustive oracle: enumerate every integer assignment and solve the
// continuous residual. Independent of branch_and_bound by construction.
inline SolveResult brute_force(const MilpInstance& inst) {
  const auto t0 = std::chrono::steady_clock::now();
  SolveResult res;
  const int q = inst.num_int;
  const int nc = inst.num_vars - q;

  double combos = 1.0;
  for (int i = 0; i < q; ++i)
    combos *= std::floor(inst.upper[i]) - std::ceil(inst.lower[i]) + 1.0;
  if (combos > static_cast<double>(1 << 20)) {
    res.status = SolveStatus::kError;
    res.message = "enumeration bound exceeded";
    return res;
  }
  if (combos < 1.0) {
    res.status = SolveStatus::kInfeasible;
    return res;
  }

  // split A into integer and continuous parts once
  std::vector<Coef> cont_rows;
  std::vector<Coef> int_rows;
  for (const Coef& c : inst.con_matrix) {
    if (c.col < q)
      int_rows.push_back(c);
    else
      cont_rows.push_back({c.row, c.col - q, c.value});
  }
  const Vec w_int = inst.obj.head(q);
  const Vec w_cont = inst.obj.tail(nc);

  std::vector<long> d(q);
  for (int i = 0; i < q; ++i) d[i] = static_cast<long>(std::ceil(inst.lower[i]));

  res.objective = std::numeric_limits<double>::infinity();
  for (;;) {
    Vec shifted_rhs = inst.rhs;
    double int_obj = 0.0;
    for (const Coef& c : int_rows) shifted_rhs[c.row] -= c.value * static_cast<double>(d[c.col]);
    for (int i = 0; i < q; ++i) int_obj += w_int[i] * static_cast<double>(d[i]);

    if (nc == 0) {
      bool ok = true;
      for (int r = 0; r < inst.num_cons; ++r)
        if (shifted_rhs[r] < -kFeasTol) {
          ok = false;
          break;
        }
      if (ok && int_obj < res.objective) {
        res.objective = int_obj;
        Assignment x(q);
        for (int i = 0; i < q; ++i) x[i] = static_cast<double>(d[i]);
        res.assignment = x;
      }
    } else {
      const detail::BoxedBounds bb =
          detail::box_bounds(inst.lower.tail(nc), inst.upper.tail(nc));
      const LpSolution sol = solve_lp(nc, cont_rows, shifted_rhs, w_cont, bb.lb, bb.ub);
      if (sol.status == LpStatus::kOptimal) {
        const double obj = int_obj + sol.objective;
        if (obj < res.objective) {
          res.objective = obj;
          Assignment x(inst.num_vars);
          for (int i = 0; i < q; ++i) x[i] = static_cast<double>(d[i]);
          x.tail(nc) = sol.x;
          res.assignment = x;
        }
      }
    }

    int carry = q - 1;
    while (carry >= 0) {
      if (++d[carry] <= static_cast<long>(std::floor(inst.upper[carry]))) break;
      d[carry] = static_cast<long>(std::ceil(inst.lower[carry]));
      --carry;
    }
    if (carry < 0) break;
  }

  res.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (res.assignment) {
    res.status = SolveStatus::kOptimal;
    res.bound = res.objective;
  } else {
    res.status = SolveStatus::kInfeasible;
  }
  return res;
}

/// Built-in exact solver.
class BnbBackend : public Backend {
 public:
  explicit BnbBackend(double gap_tol = 1e-6) : gap_tol_(gap_tol) {}
  SolveResult solve(const MilpInstance& inst, double time_limit_s) const override {
    return branch_and_bound(inst, time_limit_s, gap_tol_);
  }

 private:
  double gap_tol_;
};

}  // namespace fmip
