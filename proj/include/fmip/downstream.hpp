// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <map>
#include <stdexcept>
#include <vector>

#include "fmip/backend.hpp"
#include "fmip/graph.hpp"
#include "fmip/milp.hpp"
#include "fmip/rng.hpp"

namespace fmip {

/// Per-variable category probabilities (q x (K+1)); for binary problems the
/// probability of value 1 is column 1.
using Marginals = Mat;

struct NdConfig {
  int num_candidates = 50;   // K_nd sub-MIPs
  double fix_fraction = 0.1; // alpha
};

struct PsConfig {
  double k0 = 0.3;
  double k1 = 0.06;
  double delta = 0.3;
};

struct PmvbConfig {
  double conf = 0.7;       // delta_c
  double threshold = 0.9;  // tau_p
};

struct ApolloConfig {
  int iterations = 2;                 // K_it
  std::vector<PsConfig> ps = {PsConfig{}};  // per-iteration params (last repeats)
};

struct StrategyConfig {
  NdConfig nd;
  PsConfig ps;
  PmvbConfig pmvb;
  ApolloConfig apollo;
};

namespace detail {

inline void require_binary(const MilpInstance& inst, const char* who) {
  if (inst.int_bound != 1)
    throw std::invalid_argument(std::string(who) + ": requires a binary integer block (K=1)");
}

inline void require_marginals(const Marginals& marg, const MilpInstance& inst, const char* who) {
  if (marg.rows() != inst.num_int || marg.cols() != inst.int_bound + 1)
    throw std::invalid_argument(std::string(who) + ": marginal shape does not match instance");
}

inline MilpInstance append_row(const MilpInstance& inst,
                               const std::vector<std::pair<int, double>>& terms, double rhs) {
  MilpInstance out = inst;
  const int row = out.num_cons++;
  std::map<int, double> merged;  // a column may appear twice (e.g. T0 and T1 overlap)
  for (const auto& [col, coef] : terms) merged[col] += coef;
  for (const auto& [col, coef] : merged)
    if (coef != 0.0) out.con_matrix.push_back({row, col, coef});
  Vec b(out.num_cons);
  b.head(inst.num_cons) = inst.rhs;
  b[row] = rhs;
  out.rhs = std::move(b);
  return out;
}

inline double remaining(const std::chrono::steady_clock::time_point& t0, double limit) {
  const double used =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return limit - used;
}

// Strategies only tighten bounds or append rows, so any sub-MILP incumbent
// must re-evaluate feasible on the original instance; a miss is a bug.
inline void verify_restriction(const MilpInstance& original, SolveResult& res, const char* who) {
  if (!res.assignment) return;
  if (!evaluate(original, *res.assignment).feasible) {
    std::cerr << "[fmip] warning: " << who << " incumbent infeasible for the original instance\n";
    res.status = SolveStatus::kError;
    res.assignment.reset();
  }
}

}  // namespace detail

/// The ceil(alpha*q) most confident variables, ranked by max_j p_ij.
inline std::vector<int> nd_fix_set(const Marginals& marg, double fix_fraction) {
  const int q = static_cast<int>(marg.rows());
  const int count = static_cast<int>(std::ceil(fix_fraction * q));
  std::vector<int> order(q);
  for (int i = 0; i < q; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return marg.row(a).maxCoeff() > marg.row(b).maxCoeff();
  });
  order.resize(std::min(count, q));
  std::sort(order.begin(), order.end());
  return order;
}

/// All K_nd sub-MIPs: the fixed set is shared, sampled values differ per sub-MIP.
inline std::vector<MilpInstance> neural_diving_submips(const Marginals& marg,
                                                       const MilpInstance& inst,
                                                       const NdConfig& cfg, Rng& rng) {
  detail::require_marginals(marg, inst, "neural_diving");
  const std::vector<int> fix = nd_fix_set(marg, cfg.fix_fraction);
  std::vector<MilpInstance> subs;
  subs.reserve(cfg.num_candidates);
  for (int s = 0; s < cfg.num_candidates; ++s) {
    Rng stream = rng.fork();  // distinct stream per sub-MIP
    MilpInstance sub = inst;
    sub.name = inst.name + "_nd" + std::to_string(s);
    for (int i : fix) {
      Vec row = marg.row(i);
      int value = stream.categorical(row.data(), static_cast<int>(row.size()));
      value = std::min(std::max(value, static_cast<int>(std::ceil(inst.lower[i]))),
                       static_cast<int>(std::floor(inst.upper[i])));
      sub.lower[i] = sub.upper[i] = static_cast<double>(value);
    }
    subs.push_back(std::move(sub));
  }
  return subs;
}

inline SolveResult neural_diving(const Marginals& marg, const MilpInstance& inst,
                                 const NdConfig& cfg, const Backend& backend, double time_limit_s,
                                 Rng& rng) {
  const auto t0 = std::chrono::steady_clock::now();
  const std::vector<MilpInstance> subs = neural_diving_submips(marg, inst, cfg, rng);
  SolveResult best;
  best.status = SolveStatus::kInfeasible;
  best.message = "all sub-MIPs infeasible";
  for (const MilpInstance& sub : subs) {
    const double left = detail::remaining(t0, time_limit_s);
    if (left <= 0.0) {
      if (!best.assignment) best.status = SolveStatus::kTimeout;
      break;
    }
    SolveResult res = backend.solve(sub, left);
    best.nodes += res.nodes;
    if (res.assignment && res.objective < best.objective) {
      best.objective = res.objective;
      best.assignment = res.assignment;
      best.status = SolveStatus::kFeasible;
      best.message.clear();
      best.incumbent_history.push_back(res.objective);
    }
  }
  best.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  detail::verify_restriction(inst, best, "neural_diving");
  return best;
}

struct TrustRegion {
  std::vector<int> t0, t1;  // variables near 0 / near 1
  long rhs = 0;             // floor(delta * (|T0| + |T1|))
};

inline TrustRegion ps_trust_region(const Marginals& marg, const PsConfig& cfg) {
  TrustRegion tr;
  for (Eigen::Index i = 0; i < marg.rows(); ++i) {
    const double p1 = marg(i, 1);
    if (p1 <= cfg.k0) tr.t0.push_back(static_cast<int>(i));
    if (p1 >= 1.0 - cfg.k1) tr.t1.push_back(static_cast<int>(i));
  }
  tr.rhs = static_cast<long>(
      std::floor(cfg.delta * static_cast<double>(tr.t0.size() + tr.t1.size())));
  return tr;
}

// Appends  sum_{T0} x + sum_{T1} (1-x) <= rhs  and solves the restriction.
inline SolveResult predict_and_search(const Marginals& marg, const MilpInstance& inst,
                                      const PsConfig& cfg, const Backend& backend,
                                      double time_limit_s) {
  detail::require_binary(inst, "predict_and_search");
  detail::require_marginals(marg, inst, "predict_and_search");
  const TrustRegion tr = ps_trust_region(marg, cfg);
  if (tr.t0.empty() && tr.t1.empty()) {
    std::cerr << "[fmip] note: predict_and_search trust region empty, solving unchanged\n";
    SolveResult res = backend.solve(inst, time_limit_s);
    detail::verify_restriction(inst, res, "predict_and_search");
    return res;
  }
  std::vector<std::pair<int, double>> terms;
  for (int i : tr.t0) terms.push_back({i, 1.0});
  for (int i : tr.t1) terms.push_back({i, -1.0});
  const double rhs = static_cast<double>(tr.rhs) - static_cast<double>(tr.t1.size());
  const MilpInstance sub = detail::append_row(inst, terms, rhs);
  SolveResult res = backend.solve(sub, time_limit_s);
  if (res.assignment) res.objective = inst.obj.dot(*res.assignment);
  detail::verify_restriction(inst, res, "predict_and_search");
  return res;
}

/// Concentration slack gamma_S = sqrt(|S| ln(2/delta) / 2).
inline double pmvb_gamma(std::size_t set_size, double delta) {
  return std::sqrt(static_cast<double>(set_size) * std::log(2.0 / delta) / 2.0);
}

struct PmvbRows {
  std::vector<int> up, low;
  bool up_active = false, low_active = false;
  double up_rhs = 0.0, low_rhs = 0.0;  // sum_U x >= up_rhs ; sum_L x <= low_rhs
};

inline PmvbRows pmvb_rows(const Marginals& marg, const PmvbConfig& cfg) {
  PmvbRows rows;
  double up_expect = 0.0, low_expect = 0.0;
  for (Eigen::Index i = 0; i < marg.rows(); ++i) {
    const double p1 = marg(i, 1);
    if (p1 >= cfg.threshold) {
      rows.up.push_back(static_cast<int>(i));
      up_expect += p1;
    }
    if (p1 <= 1.0 - cfg.threshold) {
      rows.low.push_back(static_cast<int>(i));
      low_expect += p1;
    }
  }
  if (!rows.up.empty()) {
    rows.up_rhs = std::ceil((1.0 - cfg.conf) * up_expect - pmvb_gamma(rows.up.size(), cfg.conf));
    // omit rows that are vacuous or infeasible by construction
    rows.up_active = rows.up_rhs >= 0.0 && rows.up_rhs <= static_cast<double>(rows.up.size());
  }
  if (!rows.low.empty()) {
    rows.low_rhs = std::floor(cfg.conf * low_expect + pmvb_gamma(rows.low.size(), cfg.conf));
    rows.low_active = true;
  }
  return rows;
}

inline SolveResult pmvb(const Marginals& marg, const MilpInstance& inst, const PmvbConfig& cfg,
                        const Backend& backend, double time_limit_s) {
  detail::require_binary(inst, "pmvb");
  detail::require_marginals(marg, inst, "pmvb");
  const PmvbRows rows = pmvb_rows(marg, cfg);
  MilpInstance sub = inst;
  if (rows.up_active) {
    std::vector<std::pair<int, double>> terms;
    for (int i : rows.up) terms.push_back({i, -1.0});  // sum x >= rhs stored negated
    sub = detail::append_row(sub, terms, -rows.up_rhs);
  }
  if (rows.low_active) {
    std::vector<std::pair<int, double>> terms;
    for (int i : rows.low) terms.push_back({i, 1.0});
    sub = detail::append_row(sub, terms, rows.low_rhs);
  }
  SolveResult res = backend.solve(sub, time_limit_s);
  if (res.assignment) res.objective = inst.obj.dot(*res.assignment);
  detail::verify_restriction(inst, res, "pmvb");
  return res;
}

/// Re-predicts marginals for a (partially fixed) instance.
using MarginalFn = std::function<Marginals(const MilpInstance&)>;

// Alternating predict / correct: each iteration runs predict_and_search for a
// reference solution, then fixes the variables where the rounded prediction
// agrees with it. The final iteration's incumbent is returned.
inline SolveResult apollo(const MarginalFn& marg_fn, const MilpInstance& inst,
                          const ApolloConfig& cfg, const Backend& backend, double time_limit_s) {
  detail::require_binary(inst, "apollo");
  if (cfg.iterations < 1) throw std::invalid_argument("apollo: iterations must be >= 1");
  if (cfg.ps.empty()) throw std::invalid_argument("apollo: needs PS parameters");
  const double per_iter = time_limit_s / cfg.iterations;

  MilpInstance work = inst;
  MilpInstance prev = inst;
  SolveResult best;
  best.status = SolveStatus::kInfeasible;
  SolveResult last;

  for (int it = 0; it < cfg.iterations; ++it) {
    const PsConfig& ps_cfg = cfg.ps[std::min<std::size_t>(it, cfg.ps.size() - 1)];
    const Marginals marg = marg_fn(work);
    SolveResult ref = predict_and_search(marg, work, ps_cfg, backend, per_iter);
    if (!ref.assignment) {
      // infeasible reduction: unfix the last batch and solve once more
      SolveResult recover = backend.solve(prev, per_iter);
      detail::verify_restriction(inst, recover, "apollo");
      if (recover.assignment &&
          (!best.assignment || recover.objective < best.objective))
        best = recover;
      if (best.assignment) best.objective = inst.obj.dot(*best.assignment);
      return best;
    }
    ref.objective = inst.obj.dot(*ref.assignment);
    last = ref;
    if (!best.assignment || ref.objective < best.objective) best = ref;
    if (it + 1 == cfg.iterations) break;

    prev = work;
    for (int i = 0; i < work.num_int; ++i) {
      if (work.lower[i] == work.upper[i]) continue;  // already fixed
      Eigen::Index argmax = 0;
      marg.row(i).maxCoeff(&argmax);
      const int pred = static_cast<int>(argmax);
      const int refv = static_cast<int>(std::nearbyint((*ref.assignment)[i]));
      if (pred == refv) work.lower[i] = work.upper[i] = static_cast<double>(refv);
    }
  }
  detail::verify_restriction(inst, last, "apollo");
  return last;
}

}  // namespace fmip
