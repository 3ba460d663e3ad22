// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <chrono>
#include <cstdio>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "fmip/backend.hpp"
#include "fmip/config.hpp"
#include "fmip/downstream.hpp"
#include "fmip/external.hpp"
#include "fmip/flow.hpp"
#include "fmip/guidance.hpp"
#include "fmip/instance_gen.hpp"
#include "fmip/lp_format.hpp"
#include "fmip/metrics.hpp"
#include "fmip/report.hpp"
#include "fmip/train.hpp"

namespace fmip {

struct CheckResult {
  int id = 0;
  std::string name;
  bool pass = false;
  std::string detail;
  double seconds = 0.0;
};

namespace selfcheck {

/// Verification fixture: instance plus its oracle-confirmed optimum.
struct FixtureCase {
  MilpInstance instance;
  double expected_optimum = 0.0;
  bool feasible = true;
  std::string provenance;
};

inline MilpInstance toy_instance() {
  MilpInstance inst;
  inst.name = "toy";
  inst.num_vars = 2;
  inst.num_cons = 2;
  inst.num_int = 1;
  inst.int_bound = 5;
  inst.obj = (Vec(2) << 4.0, 1.0).finished();
  inst.con_matrix = {{0, 0, 3.0}, {0, 1, 1.0}, {1, 0, 1.0}, {1, 1, 1.0}};
  inst.rhs = (Vec(2) << 1.0, 2.0).finished();
  inst.lower = Vec::Zero(2);
  inst.upper = (Vec(2) << 5.0, 3.0).finished();
  validate(inst);
  return inst;
}

/// Seeded random mixed-binary instance within the brute-force budget.
inline MilpInstance random_milp(std::uint64_t seed, int max_bin = 12, int max_cont = 3) {
  Rng rng(seed);
  MilpInstance inst;
  const int q = 1 + static_cast<int>(rng.below(max_bin));
  const int nc = static_cast<int>(rng.below(max_cont + 1));
  const int m = 2 + static_cast<int>(rng.below(8));
  inst.name = "rand_" + std::to_string(seed);
  inst.num_vars = q + nc;
  inst.num_cons = m;
  inst.num_int = q;
  inst.int_bound = 1;
  inst.obj.resize(inst.num_vars);
  for (int i = 0; i < inst.num_vars; ++i) inst.obj[i] = rng.uniform() * 10.0 - 5.0;
  inst.lower = Vec::Zero(inst.num_vars);
  inst.upper = Vec::Ones(inst.num_vars);
  for (int i = q; i < inst.num_vars; ++i) inst.upper[i] = 1.0 + rng.uniform() * 4.0;
  inst.rhs.resize(m);
  for (int r = 0; r < m; ++r) {
    int nz = 0;
    for (int j = 0; j < inst.num_vars; ++j)
      if (rng.uniform() < 0.5) {
        const double coef = std::floor(rng.uniform() * 9.0) - 4.0;
        if (coef != 0.0) {
          inst.con_matrix.push_back({r, j, coef});
          ++nz;
        }
      }
    if (nz == 0) inst.con_matrix.push_back({r, static_cast<int>(rng.below(inst.num_vars)), 1.0});
    inst.rhs[r] = std::floor(rng.uniform() * 7.0) - 1.0;
  }
  validate(inst);
  return inst;
}

/// The frozen memorization set: independent-set, mixed combinatorial-auction
/// and set-cover instances at desk scale.
inline std::vector<MilpInstance> memorization_instances() {
  std::vector<MilpInstance> v;
  for (int i = 0; i < 4; ++i) {
    GenSpec s;
    s.family = Family::kIndepSet;
    s.nodes = 14;
    s.edge_prob = 0.25;
    s.seed = 900 + i;
    v.push_back(generate(s));
  }
  for (int i = 0; i < 3; ++i) {
    GenSpec s;
    s.family = Family::kCombAuction;
    s.items = 8;
    s.bids = 14;
    s.seed = 910 + i;
    v.push_back(make_mixed(s, 0.25));
  }
  for (int i = 0; i < 3; ++i) {
    GenSpec s;
    s.family = Family::kSetCover;
    s.rows = 10;
    s.cols = 14;
    s.density = 0.3;
    s.seed = 920 + i;
    v.push_back(generate(s));
  }
  return v;
}

inline std::string fmt2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

class Suite {
 public:
  explicit Suite(std::ostream& log = std::cerr) : log_(log) {}

  std::vector<CheckResult> run() {
    results_.clear();
    check(1, "metric arithmetic reproduces reported values", [&] { return check_metrics(); });
    check(2, "branch-and-bound matches the brute-force oracle (50 instances)",
          [&] { return check_oracle_equivalence(); });
    check(3, "flow invariants (Euler landing, path marginals, rates, schedule)",
          [&] { return check_flow_invariants(); });
    check(4, "analytic gradients match finite differences",
          [&] { return check_gradients(); });
    check(5, "loss sanity at perfect and uniform predictions", [&] { return check_loss_sanity(); });
    check(6, "memorization experiment (300 epochs, 64 guided candidates)",
          [&] { return check_memorization(); });
    check(7, "guidance improves under-trained sampling and downstream PS",
          [&] { return check_guidance_effect(); });
    check(8, "downstream strategy contracts", [&] { return check_strategy_contracts(); });
    check(9, "restriction soundness of every recorded incumbent",
          [&] { return check_restriction_soundness(); });
    check(10, "serialization round-trips are bit-exact", [&] { return check_round_trips(); });
    return results_;
  }

  static nlohmann::json manifest(const std::vector<CheckResult>& results) {
    nlohmann::json j;
    j["checks"] = nlohmann::json::array();
    bool all = true;
    for (const CheckResult& r : results) {
      j["checks"].push_back({{"id", r.id},
                             {"name", r.name},
                             {"pass", r.pass},
                             {"detail", r.detail},
                             {"seconds", r.seconds}});
      all = all && r.pass;
    }
    j["pass"] = all;
    return j;
  }

 private:
  template <typename F>
  void check(int id, const std::string& name, F&& fn) {
    CheckResult r;
    r.id = id;
    r.name = name;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      r.pass = fn();
      r.detail = detail_;
    } catch (const std::exception& e) {
      r.pass = false;
      r.detail = std::string("exception: ") + e.what();
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    log_ << (r.pass ? "[PASS] " : "[FAIL] ") << r.id << ". " << r.name;
    if (!r.detail.empty()) log_ << " -- " << r.detail;
    log_ << " (" << fmt2(r.seconds) << "s)\n";
    results_.push_back(std::move(r));
    detail_.clear();
  }

  bool check_metrics() {
    const bool gap_ok = fmt2(metrics_gap(401.00, 400.70)) == "0.30";
    const auto imp = metrics_imp(0.30, 0.10);
    const bool imp_ok = imp && fmt2(*imp) == "66.67";
    detail_ = "gap(401.00,400.70)=" + fmt2(metrics_gap(401.00, 400.70)) +
              ", imp(0.30,0.10)=" + (imp ? fmt2(*imp) : std::string("n/a")) + "%";
    return gap_ok && imp_ok;
  }

  bool check_oracle_equivalence() {
    int agreed = 0;
    for (std::uint64_t seed = 1; seed <= 50; ++seed) {
      const MilpInstance inst = random_milp(seed);
      const SolveResult oracle = brute_force(inst);
      const SolveResult bnb = branch_and_bound(inst, 120.0, 1e-6);
      const bool both_infeasible = oracle.status == SolveStatus::kInfeasible &&
                                   bnb.status == SolveStatus::kInfeasible;
      const bool both_solved =
          oracle.status == SolveStatus::kOptimal && bnb.status == SolveStatus::kOptimal &&
          std::abs(oracle.objective - bnb.objective) <= 1e-6;
      if (both_infeasible || both_solved) {
        ++agreed;
      } else {
        detail_ = "disagreement on " + inst.name;
        return false;
      }
    }
    detail_ = "agreed on 50/50 instances";
    return true;
  }

  bool check_flow_invariants() {
    Rng rng(11);
    // (a) exact-velocity Euler step of size (1-t) lands on c_1
    for (int trial = 0; trial < 20; ++trial) {
      Vec c1(4), ct(4);
      for (int i = 0; i < 4; ++i) {
        c1[i] = rng.normal();
        ct[i] = rng.normal();
      }
      const double t = rng.uniform() * 0.95;
      const Vec landed = euler_step_cont(ct, cond_velocity(ct, c1, t), 1.0 - t);
      if ((landed - c1).cwiseAbs().maxCoeff() > 1e-9) {
        detail_ = "Euler landing missed c1";
        return false;
      }
    }
    // (b) conditional path marginals, 1e5 Monte-Carlo draws, 3-sigma bounds
    const int n = 100000;
    const int k_bound = 2;
    const VecI d1 = (VecI(1) << 1).finished();
    const Vec c1 = Vec::Constant(1, 0.6);
    for (const double t : {0.0, 0.25, 0.5, 0.75}) {
      double mean = 0.0, sq = 0.0;
      int on_label = 0;
      for (int i = 0; i < n; ++i) {
        const SolutionState s = sample_conditional(d1, c1, t, k_bound, rng);
        mean += s.c[0];
        sq += s.c[0] * s.c[0];
        on_label += s.d[0] == d1[0];
      }
      mean /= n;
      const double var = sq / n - mean * mean;
      const double p_label = t + (1.0 - t) / (k_bound + 1);
      const double sd_mean = (1.0 - t) / std::sqrt(static_cast<double>(n));
      const double sd_var = (1.0 - t) * (1.0 - t) * std::sqrt(2.0 / n);
      const double sd_cat = std::sqrt(std::max(p_label * (1.0 - p_label), 1e-12) / n);
      if (std::abs(mean - t * c1[0]) > 3.0 * sd_mean + 1e-12 ||
          std::abs(var - (1.0 - t) * (1.0 - t)) > 3.0 * sd_var + 1e-12 ||
          std::abs(on_label / static_cast<double>(n) - p_label) > 3.0 * sd_cat + 1e-12) {
        detail_ = "path marginal outside 3 sigma at t=" + fmt2(t);
        return false;
      }
    }
    // (c) rate rows nonnegative with zero at the current state
    for (int trial = 0; trial < 20; ++trial) {
      ModelOutput out;
      out.int_logits = Mat(3, k_bound + 1);
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j <= k_bound; ++j) out.int_logits(i, j) = rng.normal() * 3.0;
      out.cont_values = Vec(0);
      SolutionState s;
      s.d = VecI(3);
      for (int i = 0; i < 3; ++i) s.d[i] = static_cast<int>(rng.below(k_bound + 1));
      s.c = Vec(0);
      const double t = rng.uniform() * 0.9;
      const VelocityAndRates vr = model_velocity_and_rates(out, s, t, k_bound);
      for (int i = 0; i < 3; ++i) {
        if (vr.rates(i, s.d[i]) != 0.0) {
          detail_ = "rate diagonal not zero";
          return false;
        }
        for (int j = 0; j <= k_bound; ++j)
          if (vr.rates(i, j) < 0.0) {
            detail_ = "negative rate";
            return false;
          }
      }
    }
    // (d) cosine schedule endpoints and strictly decreasing steps
    for (const int steps : {2, 5, 30}) {
      const Schedule s = cosine_schedule(steps);
      if (s.times.front() != 0.0 || s.times.back() != 1.0) {
        detail_ = "schedule endpoints not exact";
        return false;
      }
      for (int k = 1; k < steps; ++k)
        if (s.times[k + 1] - s.times[k] >= s.times[k] - s.times[k - 1]) {
          detail_ = "cosine steps not strictly decreasing";
          return false;
        }
    }
    detail_ = "Euler landing, 4 path marginals, rate structure, schedule shape";
    return true;
  }

  bool check_gradients() {
    // target gradient vs central finite differences at 5 random points
    const MilpInstance inst = toy_instance();
    Rng rng(5);
    const double gamma = 2.0, h = 1e-6;
    for (int trial = 0; trial < 5; ++trial) {
      Vec x(2);
      x << rng.uniform() * 4.0 - 1.0, rng.uniform() * 4.0 - 1.0;
      const Vec g = target_grad_continuous(inst, x, gamma);
      Vec xp = x, xm = x;
      xp[1] += h;
      xm[1] -= h;
      const double fd = (target_f(inst, xp, gamma) - target_f(inst, xm, gamma)) / (2 * h);
      if (std::abs(g[0] - fd) > 1e-5 * std::max(1.0, std::abs(fd))) {
        detail_ = "target gradient mismatch";
        return false;
      }
    }

    // full training-loss parameter gradients on a 3-variable toy
    MilpInstance toy3;
    toy3.name = "toy3";
    toy3.num_vars = 3;
    toy3.num_cons = 2;
    toy3.num_int = 2;
    toy3.int_bound = 1;
    toy3.obj = (Vec(3) << 1.0, -2.0, 0.5).finished();
    toy3.con_matrix = {{0, 0, 1.0}, {0, 2, 2.0}, {1, 1, 1.0}, {1, 2, -1.0}};
    toy3.rhs = (Vec(2) << 1.5, 1.0).finished();
    toy3.lower = Vec::Zero(3);
    toy3.upper = (Vec(3) << 1.0, 1.0, 2.0).finished();
    validate(toy3);

    ModelConfig cfg;
    cfg.layers = 2;
    cfg.hidden = 4;
    cfg.int_categories = 2;
    ModelParams params = init_params(cfg, 17);
    const TripartiteGraph g = encode(toy3);
    SolutionState s;
    s.d = (VecI(2) << 1, 0).finished();
    s.c = Vec::Constant(1, 0.8);
    s.t = 0.4;
    const AugmentedGraph aug = attach_state(g, s);
    const VecI d1 = (VecI(2) << 0, 1).finished();
    const Vec c1 = Vec::Constant(1, 0.3);
    const double omega = 0.9;

    const auto loss_of = [&](const ModelParams& p) {
      ad::Tape tape;
      BoundParams bp = bind_params(tape, p, false);
      ForwardVars fv = forward_tape(tape, bp, cfg, GraphBatch::build({aug}));
      ModelOutput out;
      out.int_logits = tape.value(fv.int_logits);
      out.cont_values = tape.value(fv.cont_values).col(0);
      return training_loss(out, d1, c1, s.t, omega);
    };

    ad::Tape tape;
    BoundParams bp = bind_params(tape, params, true);
    ForwardVars fv = forward_tape(tape, bp, cfg, GraphBatch::build({aug}));
    Mat target(1, 1);
    target(0, 0) = c1[0];
    ad::Var loss =
        ad::add(ad::weighted_sse(fv.cont_values, target, Vec::Constant(1, 1.0 / (1.0 - s.t))),
                ad::scale(ad::cross_entropy_rows(fv.int_logits, {d1[0], d1[1]}), omega));
    tape.backward(loss);
    std::vector<Mat> analytic;
    visit_params(bp, [&](const std::string&, ad::Var& v) {
      analytic.push_back(tape.has_grad(v) ? tape.grad(v)
                                          : Mat::Zero(tape.value(v).rows(), tape.value(v).cols()));
    });

    const double hh = 1e-4;
    std::size_t pi = 0;
    long checked = 0;
    bool ok = true;
    std::string bad;
    visit_params(params, [&](const std::string& name, Mat& m) {
      const Mat& ga = analytic[pi++];
      for (Eigen::Index i = 0; i < m.rows() && ok; ++i)
        for (Eigen::Index j = 0; j < m.cols() && ok; ++j) {
          const double orig = m(i, j);
          m(i, j) = orig + hh;
          const double fp = loss_of(params);
          m(i, j) = orig - hh;
          const double fm = loss_of(params);
          m(i, j) = orig;
          const double fd = (fp - fm) / (2 * hh);
          ++checked;
          const double diff = std::abs(ga(i, j) - fd);
          if (diff > 1e-4 * std::max({1.0, std::abs(ga(i, j)), std::abs(fd)}) && diff > 1e-7) {
            ok = false;
            bad = name;
          }
        }
    });
    detail_ = "checked " + std::to_string(checked) + " parameters" + (ok ? "" : ", first bad: " + bad);
    return ok;
  }

  bool check_loss_sanity() {
    ModelOutput perfect;
    perfect.int_logits = Mat(1, 2);
    perfect.int_logits << -1000.0, 1000.0;
    perfect.cont_values = Vec::Constant(1, 0.7);
    const VecI d1 = (VecI(1) << 1).finished();
    const Vec c1 = Vec::Constant(1, 0.7);
    const double zero = training_loss(perfect, d1, c1, 0.5, 1.0);

    ModelOutput uniform;
    uniform.int_logits = Mat::Zero(1, 2);
    uniform.cont_values = Vec(0);
    const double omega = 1.3;
    const double ln2 = training_loss(uniform, (VecI(1) << 0).finished(), Vec(0), 0.25, omega);
    detail_ = "perfect=" + std::to_string(zero) + ", uniform=" + std::to_string(ln2) +
              " (omega*ln2=" + std::to_string(omega * std::log(2.0)) + ")";
    return zero == 0.0 && std::abs(ln2 - omega * std::log(2.0)) < 1e-15;
  }

  bool check_memorization() {
    const BnbBackend backend;
    dataset_ = label_dataset(memorization_instances(), backend, 120.0);
    if (dataset_.size() != 10) {
      detail_ = "labeling failed";
      return false;
    }
    ModelConfig mcfg;
    mcfg.layers = 12;
    mcfg.hidden = 64;
    mcfg.int_categories = 2;
    TrainConfig tcfg;  // Table-5 values: 300 epochs, lr 2e-4, wd 1e-4, cosine decay
    tcfg.epochs = 300;
    tcfg.batch_size = 1;
    tcfg.seed = 1;
    const TrainResult res = train(dataset_, mcfg, tcfg);
    trained_ = res.checkpoint;
    const double first_loss = res.epoch_loss.front();
    const double last_loss = res.epoch_loss.back();
    const bool loss_drop = last_loss < 0.1 * first_loss;

    const Schedule sched = cosine_schedule(30);
    GuidanceConfig gcfg;  // guidance on, defaults
    int with_feasible = 0, within_gap = 0;
    for (std::size_t k = 0; k < dataset_.size(); ++k) {
      Rng rng(1000 + k);
      const CandidatePool pool =
          sample_solutions(dataset_[k].instance, trained_.model, gcfg, sched, 64, rng);
      pools_.push_back(pool);
      double best_f = std::numeric_limits<double>::infinity();
      int feas = 0;
      for (const Candidate& c : pool.candidates) {
        if (c.feasible) {
          ++feas;
          best_f = std::min(best_f, c.f);
          incumbents_.push_back({static_cast<int>(k), c.values});
        }
      }
      if (feas > 0) {
        ++with_feasible;
        const double rel = std::abs(best_f - dataset_[k].label_objective) /
                           std::max(std::abs(dataset_[k].label_objective), 1e-9);
        if (rel <= 0.05) ++within_gap;
      }
    }
    detail_ = "feasible candidates on " + std::to_string(with_feasible) + "/10, within 5% on " +
              std::to_string(within_gap) + ", loss " + fmt2(first_loss) + " -> " + fmt2(last_loss);
    return with_feasible >= 8 && within_gap == with_feasible && loss_drop;
  }

  bool check_guidance_effect() {
    if (dataset_.empty()) {
      detail_ = "depends on check 6 dataset";
      return false;
    }
    ModelConfig mcfg;
    mcfg.layers = 12;
    mcfg.hidden = 64;
    mcfg.int_categories = 2;
    TrainConfig tcfg;
    tcfg.epochs = 30;  // deliberately under-trained
    tcfg.batch_size = 1;
    tcfg.seed = 1;
    const TrainResult res = train(dataset_, mcfg, tcfg);

    const BnbBackend backend;
    const Schedule sched = cosine_schedule(30);
    double guided_mean = 0.0, unguided_mean = 0.0;
    int ps_wins = 0;
    for (std::size_t k = 0; k < dataset_.size(); ++k) {
      const MilpInstance& inst = dataset_[k].instance;
      GuidanceConfig on;
      GuidanceConfig off;
      off.enabled = false;
      Rng r1(7000 + k), r2(7000 + k);  // paired seeds
      const CandidatePool gp = sample_solutions(inst, res.checkpoint.model, on, sched, 100, r1);
      const CandidatePool up = sample_solutions(inst, res.checkpoint.model, off, sched, 100, r2);
      for (const Candidate& c : gp.candidates) guided_mean += c.f;
      for (const Candidate& c : up.candidates) unguided_mean += c.f;
      const SolveResult psg = predict_and_search(gp.marginals, inst, PsConfig{}, backend, 20.0);
      const SolveResult psu = predict_and_search(up.marginals, inst, PsConfig{}, backend, 20.0);
      if (psg.assignment) incumbents_.push_back({static_cast<int>(k), *psg.assignment});
      if (psu.assignment) incumbents_.push_back({static_cast<int>(k), *psu.assignment});
      if (psg.assignment && psu.assignment && psg.objective <= psu.objective + 1e-9) ++ps_wins;
    }
    guided_mean /= 10.0 * 100.0;
    unguided_mean /= 10.0 * 100.0;
    detail_ = "mean f guided " + fmt2(guided_mean) + " vs unguided " + fmt2(unguided_mean) +
              ", PS wins " + std::to_string(ps_wins) + "/10";
    return guided_mean <= unguided_mean && ps_wins >= 7;
  }

  bool check_strategy_contracts() {
    // neural diving: exactly K_nd sub-MIPs each fixing ceil(alpha q)
    GenSpec spec;
    spec.family = Family::kIndepSet;
    spec.nodes = 10;
    spec.edge_prob = 0.3;
    spec.seed = 8;
    const MilpInstance ten = generate(spec);
    const Marginals uniform = Mat::Constant(10, 2, 0.5);
    NdConfig nd_cfg = nd_from_bracket("[50, 0.1]");  // Table-4 parsing check
    Rng rng(3);
    const auto subs = neural_diving_submips(uniform, ten, nd_cfg, rng);
    if (subs.size() != 50) {
      detail_ = "sub-MIP count " + std::to_string(subs.size());
      return false;
    }
    for (const MilpInstance& sub : subs) {
      int fixed = 0;
      for (int i = 0; i < sub.num_int; ++i) fixed += sub.lower[i] == sub.upper[i];
      if (fixed != 1) {  // ceil(0.1 * 10) = 1
        detail_ = "fix count " + std::to_string(fixed);
        return false;
      }
    }

    // PS trust region rhs
    Marginals m(4, 2);
    m << 0.05, 0.95, 0.9, 0.1, 0.97, 0.03, 0.5, 0.5;
    PsConfig ps_cfg;  // k0=0.3, k1=0.06, delta=0.3: T1={0}, T0={1,2}, rhs=floor(0.9)=0
    const TrustRegion tr = ps_trust_region(m, ps_cfg);
    if (tr.rhs != static_cast<long>(std::floor(ps_cfg.delta * (tr.t0.size() + tr.t1.size())))) {
      detail_ = "trust-region rhs mismatch";
      return false;
    }

    // PMVB gamma
    if (std::abs(pmvb_gamma(8, 0.5) - 2.35482) > 1e-5) {
      detail_ = "gamma(8, 0.5) = " + std::to_string(pmvb_gamma(8, 0.5));
      return false;
    }

    // Apollo with one iteration equals predict-and-search bitwise
    const MilpInstance small = random_milp(4, 8, 0);
    const SolveResult oracle = brute_force(small);
    if (oracle.status == SolveStatus::kOptimal) {
      const BnbBackend backend;
      Marginals pm = Mat::Zero(small.num_int, 2);
      for (int i = 0; i < small.num_int; ++i)
        pm(i, static_cast<int>(std::nearbyint((*oracle.assignment)[i]))) = 1.0;
      ApolloConfig acfg;
      acfg.iterations = 1;
      const MarginalFn fn = [&](const MilpInstance&) { return pm; };
      const SolveResult a = apollo(fn, small, acfg, backend, 20.0);
      const SolveResult b = predict_and_search(pm, small, acfg.ps[0], backend, 20.0);
      const bool same = a.assignment.has_value() == b.assignment.has_value() &&
                        (!a.assignment || (*a.assignment == *b.assignment &&
                                           a.objective == b.objective && a.status == b.status));
      if (!same) {
        detail_ = "apollo(K=1) != predict_and_search";
        return false;
      }
    }
    detail_ = "ND 50x1 fix, PS rhs, PMVB gamma 2.35482, Apollo K=1 bitwise";
    return true;
  }

  bool check_restriction_soundness() {
    if (incumbents_.empty() || dataset_.empty()) {
      detail_ = "no incumbents recorded (checks 6-7 must run first)";
      return false;
    }
    for (const auto& [idx, values] : incumbents_) {
      if (!evaluate(dataset_[idx].instance, values, 1e-6).feasible) {
        detail_ = "incumbent infeasible on " + dataset_[idx].instance.name;
        return false;
      }
    }
    detail_ = std::to_string(incumbents_.size()) + " incumbents re-evaluated feasible at 1e-6";
    return true;
  }

  bool check_round_trips() {
    // instance JSON
    std::vector<MilpInstance> fixtures = {toy_instance(), random_milp(2), random_milp(3)};
    for (const MilpInstance& inst : memorization_instances()) fixtures.push_back(inst);
    for (const MilpInstance& inst : fixtures) {
      const std::string once = serialize(inst);
      if (serialize(parse(once)) != once) {
        detail_ = "instance JSON round-trip failed on " + inst.name;
        return false;
      }
      const std::string lp_once = write_lp(inst);
      if (write_lp(read_lp(lp_once)) != lp_once) {
        detail_ = "LP round-trip failed on " + inst.name;
        return false;
      }
    }
    // checkpoint
    Checkpoint ckpt = trained_;
    if (ckpt.model.params.layers.empty()) {
      ModelConfig cfg;
      cfg.layers = 2;
      cfg.hidden = 8;
      ckpt.model.config = cfg;
      ckpt.model.params = init_params(cfg, 5);
    }
    const std::string ck_once = save_checkpoint(ckpt);
    if (save_checkpoint(load_checkpoint(ck_once)) != ck_once) {
      detail_ = "checkpoint round-trip failed";
      return false;
    }
    // pool file
    CandidatePool pool;
    if (!pools_.empty()) {
      pool = pools_.front();
    } else {
      Candidate c;
      c.values = (Vec(2) << 1.0, 0.5).finished();
      c.f = 2.0;
      c.feasible = true;
      pool.candidates.push_back(c);
      pool.marginals = Mat::Constant(1, 2, 0.5);
    }
    const std::string pool_once = save_pool(pool);
    if (save_pool(load_pool(pool_once)) != pool_once) {
      detail_ = "pool round-trip failed";
      return false;
    }
    detail_ = std::to_string(fixtures.size()) + " instances + checkpoint + pool + LP export";
    return true;
  }

  std::ostream& log_;
  std::vector<CheckResult> results_;
  std::string detail_;

  // state shared between the experiment checks
  std::vector<LabeledInstance> dataset_;
  Checkpoint trained_;
  std::vector<CandidatePool> pools_;
  std::vector<std::pair<int, Assignment>> incumbents_;
};

}  // namespace selfcheck

inline std::vector<CheckResult> run_acceptance_suite(std::ostream& log = std::cerr) {
  selfcheck::Suite suite(log);
  return suite.run();
}

}  // namespace fmip
