// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "fmip/milp.hpp"

namespace fmip {

enum class LpStatus { kOptimal, kInfeasible, kUnbounded, kIterLimit };

struct LpSolution {
  LpStatus status = LpStatus::kIterLimit;
  Vec x;
  double objective = 0.0;
};

// Dense two-phase primal simplex over the bounded standard form.
//
// The problem  min c'x  s.t. A x <= b, lb <= x <= ub  (finite bounds) is
// shifted to y = x - lb >= 0 and upper bounds become explicit rows, so the
// tableau is the textbook one with slacks and, where the shifted rhs is
// negative, artificials. Dantzig pricing switches to Bland's rule after
// 10*(n+m) iterations so degeneracy cannot cycle.
class SimplexSolver {
 public:
  LpSolution solve(int n, const std::vector<Coef>& rows, const Vec& b, const Vec& c,
                   const Vec& lb, const Vec& ub) {
    for (int i = 0; i < n; ++i)
      if (!std::isfinite(lb[i]) || !std::isfinite(ub[i]))
        throw std::invalid_argument("SimplexSolver: bounds must be finite (box them first)");

    const int m = static_cast<int>(b.size());
    const int num_rows = m + n;  // structural rows + upper-bound rows
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(num_rows, n);
    Vec rhs(num_rows);
    for (const Coef& co : rows) a(co.row, co.col) += co.value;
    // shift: A y <= b - A lb
    for (int i = 0; i < m; ++i) {
      double shift = 0.0;
      for (int j = 0; j < n; ++j) shift += a(i, j) * lb[j];
      rhs[i] = b[i] - shift;
    }
    for (int j = 0; j < n; ++j) {
      a(m + j, j) = 1.0;
      rhs[m + j] = ub[j] - lb[j];
    }

    // Tableau columns: [y | slacks | artificials], one slack per row and one
    // artificial per negative-rhs row.
    std::vector<int> art_col(num_rows, -1);
    int num_art = 0;
    for (int i = 0; i < num_rows; ++i)
      if (rhs[i] < 0.0) art_col[i] = num_art++;
    const int slack0 = n;
    const int art0 = n + num_rows;
    const int ncols = n + num_rows + num_art;

    tab_ = Eigen::MatrixXd::Zero(num_rows, ncols);
    rhs_ = Vec::Zero(num_rows);
    basis_.assign(num_rows, -1);
    for (int i = 0; i < num_rows; ++i) {
      const double sign = rhs[i] < 0.0 ? -1.0 : 1.0;
      for (int j = 0; j < n; ++j) tab_(i, j) = sign * a(i, j);
      tab_(i, slack0 + i) = sign;
      rhs_[i] = sign * rhs[i];
      if (art_col[i] >= 0) {
        tab_(i, art0 + art_col[i]) = 1.0;
        basis_[i] = art0 + art_col[i];
      } else {
        basis_[i] = slack0 + i;
      }
    }
    num_rows_ = num_rows;
    ncols_ = ncols;
    art0_ = art0;
    iter_limit_switch_ = 10 * (n + num_rows);

    if (num_art > 0) {
      Vec phase1 = Vec::Zero(ncols);
      for (int k = 0; k < num_art; ++k) phase1[art0 + k] = 1.0;
      const LpStatus st = run(phase1, /*allow_art=*/true);
      if (st == LpStatus::kIterLimit) return {st, Vec(), 0.0};
      double infeas = 0.0;
      for (int i = 0; i < num_rows; ++i)
        if (basis_[i] >= art0) infeas += rhs_[i];
      if (infeas > 1e-7) return {LpStatus::kInfeasible, Vec(), 0.0};
      drive_out_artificials();
    }

    Vec phase2 = Vec::Zero(ncols);
    for (int j = 0; j < n; ++j) phase2[j] = c[j];
    const LpStatus st = run(phase2, /*allow_art=*/false);
    if (st != LpStatus::kOptimal) return {st, Vec(), 0.0};

    Vec y = Vec::Zero(n);
    for (int i = 0; i < num_rows; ++i)
      if (basis_[i] < n) y[basis_[i]] = rhs_[i];
    LpSolution sol;
    sol.status = LpStatus::kOptimal;
    sol.x = lb + y;
    sol.objective = c.dot(sol.x);
    return sol;
  }

 private:
  static constexpr double kPivotTol = 1e-9;
  static constexpr double kCostTol = 1e-9;
  static constexpr long kHardIterCap = 200000;

  LpStatus run(const Vec& cost, bool allow_art) {
    long iter = 0;
    while (iter < kHardIterCap) {
      const bool bland = iter >= iter_limit_switch_;
      ++iter;
      // reduced costs: c_j - c_B' T_j
      int enter = -1;
      double best = -kCostTol;
      for (int j = 0; j < ncols_; ++j) {
        if (!allow_art && j >= art0_) break;
        double red = cost[j];
        for (int i = 0; i < num_rows_; ++i) {
          const double t = tab_(i, j);
          if (t != 0.0) red -= cost[basis_[i]] * t;
        }
        if (red < -kCostTol) {
          if (bland) {
            enter = j;
            break;
          }
          if (red < best) {
            best = red;
            enter = j;
          }
        }
      }
      if (enter < 0) return LpStatus::kOptimal;

      int leave = -1;
      double best_ratio = 0.0;
      for (int i = 0; i < num_rows_; ++i) {
        const double t = tab_(i, enter);
        if (t > kPivotTol) {
          const double ratio = rhs_[i] / t;
          if (leave < 0 || ratio < best_ratio - 1e-12 ||
              (ratio < best_ratio + 1e-12 && basis_[i] < basis_[leave])) {
            leave = i;
            best_ratio = ratio;
          }
        }
      }
      if (leave < 0) return LpStatus::kUnbounded;
      pivot(leave, enter);
    }
    return LpStatus::kIterLimit;
  }

  void pivot(int row, int col) {
    const double p = tab_(row, col);
    tab_.row(row) /= p;
    rhs_[row] /= p;
    for (int i = 0; i < num_rows_; ++i) {
      if (i == row) continue;
      const double f = tab_(i, col);
      if (f != 0.0) {
        tab_.row(i) -= f * tab_.row(row);
        rhs_[i] -= f * rhs_[row];
        if (rhs_[i] < 0.0 && rhs_[i] > -1e-11) rhs_[i] = 0.0;
      }
    }
    basis_[row] = col;
  }

  // After phase 1, pivot basic artificials (value 0) onto structural columns
  // where possible; fully zero rows are redundant and keep their artificial.
  void drive_out_artificials() {
    for (int i = 0; i < num_rows_; ++i) {
      if (basis_[i] < art0_) continue;
      int col = -1;
      for (int j = 0; j < art0_; ++j) {
        if (std::abs(tab_(i, j)) > 1e-7) {
          col = j;
          break;
        }
      }
      if (col >= 0) pivot(i, col);
    }
  }

  Eigen::MatrixXd tab_;
  Vec rhs_;
  std::vector<int> basis_;
  int num_rows_ = 0;
  int ncols_ = 0;
  int art0_ = 0;
  long iter_limit_switch_ = 0;
};

inline LpSolution solve_lp(int n, const std::vector<Coef>& rows, const Vec& b, const Vec& c,
                           const Vec& lb, const Vec& ub) {
  SimplexSolver solver;
  return solver.solve(n, rows, b, c, lb, ub);
}

}  // namespace fmip
