// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <iostream>
#include <stdexcept>
#include <thread>
#include <vector>

#include "fmip/flow.hpp"
#include "fmip/graph.hpp"
#include "fmip/milp.hpp"
#include "fmip/model.hpp"
#include "fmip/rng.hpp"

namespace fmip {

struct GuidanceConfig {
  double gamma = 10.0;  // constraint penalty weight in the target
  double rho = 1e-2;    // continuous step size, constant per run
  double tau = 1.0;     // Boltzmann temperature over sampled assignments
  int n_samples = 8;    // R
  int n_iter = 3;       // inner gradient iterations
  bool enabled = true;
};

struct Candidate {
  Assignment values;
  double f = 0.0;
  bool feasible = false;
};

struct CandidatePool {
  std::vector<Candidate> candidates;
  Mat marginals;  // q x (K+1), empirical over final integer blocks
};

namespace detail {

inline Assignment assemble(const VecI& d, const Vec& c) {
  Assignment x(d.size() + c.size());
  for (Eigen::Index i = 0; i < d.size(); ++i) x[i] = static_cast<double>(d[i]);
  x.tail(c.size()) = c;
  return x;
}

inline void clamp_continuous(const MilpInstance& inst, Vec& c) {
  const int q = inst.num_int;
  for (Eigen::Index i = 0; i < c.size(); ++i) {
    const int col = q + static_cast<int>(i);
    if (std::isfinite(inst.lower[col])) c[i] = std::max(c[i], inst.lower[col]);
    if (std::isfinite(inst.upper[col])) c[i] = std::min(c[i], inst.upper[col]);
  }
}

inline void clamp_integers(const MilpInstance& inst, VecI& d) {
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    const int lo = static_cast<int>(std::ceil(inst.lower[i]));
    const int hi = static_cast<int>(std::floor(inst.upper[i]));
    d[i] = std::min(std::max(d[i], lo), hi);
  }
}

inline VecI sample_integer_assignment(const ModelOutput& output, Rng& rng) {
  VecI d(output.int_logits.rows());
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    const Vec p = softmax_row(output.int_logits.row(i));
    d[i] = rng.categorical(p.data(), static_cast<int>(p.size()));
  }
  return d;
}

}  // namespace detail

// Inner gradient loop on the continuous block: descend the guidance target,
// projecting onto the bounds after every step. The gradient is evaluated at
// the model's prediction point and held fixed across the inner iterations.
inline Vec guided_cont_step(const SolutionState& state, const ModelOutput& output,
                            const MilpInstance& inst, const GuidanceConfig& cfg, double t,
                            Rng& rng) {
  if (!cfg.enabled) throw std::logic_error("guided_cont_step: guidance disabled");
  if (t >= 1.0) throw std::domain_error("guided_cont_step: t must be < 1");
  const VecI d_sample = detail::sample_integer_assignment(output, rng);
  const Assignment pred = detail::assemble(d_sample, output.cont_values);
  const Vec grad = target_grad_continuous(inst, pred, cfg.gamma);
  Vec c = state.c;
  for (int it = 0; it < cfg.n_iter; ++it) {
    c -= cfg.rho * grad;
    detail::clamp_continuous(inst, c);
  }
  return c;
}

// Monte-Carlo guided rate matrix: R sampled assignments, each scored by the
// target and weighted exp(-f/tau) (shifted by the minimum so the best sample
// always carries weight 1), averaged over the conditional rates.
inline Mat guided_rate_matrix(const SolutionState& state, const ModelOutput& output,
                              const MilpInstance& inst, const GuidanceConfig& cfg, double t,
                              Rng& rng) {
  if (!cfg.enabled) throw std::logic_error("guided_rate_matrix: guidance disabled");
  if (t >= 1.0) throw std::domain_error("guided_rate_matrix: t must be < 1");
  const int cats = static_cast<int>(output.int_logits.cols());
  const Eigen::Index q = state.d.size();

  std::vector<VecI> samples;
  std::vector<double> f_values;
  samples.reserve(cfg.n_samples);
  for (int r = 0; r < cfg.n_samples; ++r) {
    samples.push_back(detail::sample_integer_assignment(output, rng));
    f_values.push_back(target_f(inst, detail::assemble(samples.back(), output.cont_values),
                                cfg.gamma));
  }
  const double f_min = *std::min_element(f_values.begin(), f_values.end());
  std::vector<double> weights(f_values.size());
  double total = 0.0;
  for (std::size_t r = 0; r < f_values.size(); ++r) {
    weights[r] = std::exp(-(f_values[r] - f_min) / cfg.tau);
    total += weights[r];
  }
  if (!(total > 0.0) || !std::isfinite(total)) {
    std::cerr << "[fmip] warning: guidance weights degenerate, falling back to unweighted average\n";
    std::fill(weights.begin(), weights.end(), 1.0);
    total = static_cast<double>(weights.size());
  }

  Mat rates = Mat::Zero(q, cats);
  for (std::size_t r = 0; r < samples.size(); ++r) {
    const double w = weights[r] / total;
    for (Eigen::Index i = 0; i < q; ++i) {
      const int d1 = samples[r][i];
      if (d1 != state.d[i]) rates(i, d1) += w / (1.0 - t);
    }
  }
  return rates;
}

/// Batched model evaluation hook; lets tests and downstream closures supply
/// oracle predictions without a trained network.
using BatchPredictor = std::function<std::vector<ModelOutput>(const GraphBatch&)>;

inline BatchPredictor model_predictor(const Model& model) {
  const Model* m = &model;
  return [m](const GraphBatch& batch) { return forward_batch(*m, batch); };
}

namespace detail {

struct Trajectory {
  SolutionState state;
  Rng rng;
  bool failed = false;
};

inline Trajectory init_trajectory(const MilpInstance& inst, Rng seed_rng) {
  Trajectory tr{SolutionState{}, seed_rng, false};
  const int q = inst.num_int;
  const int nc = inst.num_vars - q;
  const int cats = inst.int_bound + 1;
  tr.state.t = 0.0;
  tr.state.d.resize(q);
  for (int i = 0; i < q; ++i) tr.state.d[i] = static_cast<int>(tr.rng.below(cats));
  tr.state.c.resize(nc);
  for (int i = 0; i < nc; ++i) tr.state.c[i] = tr.rng.normal();
  clamp_integers(inst, tr.state.d);
  clamp_continuous(inst, tr.state.c);
  return tr;
}

inline bool output_finite(const ModelOutput& o) {
  return o.int_logits.allFinite() && o.cont_values.allFinite();
}

}  // namespace detail

// Full inference loop: noise -> schedule-driven discrete/continuous updates
// (guided when enabled) -> projected candidates plus empirical marginals.
// Candidates carry private pre-forked RNG streams, so chunk execution order
// and worker count never change the result.
inline CandidatePool sample_solutions(const MilpInstance& inst, const BatchPredictor& predict,
                                      bool normalize, const GuidanceConfig& cfg,
                                      const Schedule& sched, int n_candidates, Rng& rng,
                                      int n_threads = 0) {
  if (n_candidates < 1) throw std::invalid_argument("sample_solutions: need n_candidates >= 1");
  const TripartiteGraph graph = encode(inst, normalize);
  const int q = inst.num_int;
  const int cats = inst.int_bound + 1;
  if (n_threads <= 0)
    n_threads = std::max(1u, std::min(4u, std::thread::hardware_concurrency()));

  // chunk so one batched forward stays within a modest memory budget and the
  // workers all get something to do
  const std::size_t n_nodes = static_cast<std::size_t>(inst.num_vars + inst.num_cons);
  const std::size_t n_edges = graph.edges_int.size() + graph.edges_cont.size();
  const std::size_t per_cand = (n_nodes * 24 + n_edges * 10) * 64 * 8 * 12;  // rough tape bytes
  int chunk = std::max<int>(1, static_cast<int>(std::min<std::size_t>(
                                   n_candidates, (256ull << 20) / std::max<std::size_t>(per_cand, 1))));
  if (n_threads > 1)
    chunk = std::max(1, std::min(chunk, (n_candidates + 2 * n_threads - 1) / (2 * n_threads)));

  std::vector<detail::Trajectory> all;
  all.reserve(n_candidates);
  for (int i = 0; i < n_candidates; ++i) all.push_back(detail::init_trajectory(inst, rng.fork()));

  const auto run_chunk = [&](const std::vector<detail::Trajectory*>& chunk_trs) {
    for (int k = 0; k < sched.steps; ++k) {
      const double t = sched.times[k];
      const double dt = sched.times[k + 1] - sched.times[k];
      std::vector<AugmentedGraph> graphs;
      graphs.reserve(chunk_trs.size());
      for (detail::Trajectory* tr : chunk_trs) {
        tr->state.t = t;
        graphs.push_back(attach_state(graph, tr->state));
      }
      const GraphBatch batch = GraphBatch::build(graphs);
      const std::vector<ModelOutput> outputs = predict(batch);
      if (outputs.size() != chunk_trs.size())
        throw std::runtime_error("sample_solutions: predictor returned wrong batch size");
      for (std::size_t j = 0; j < chunk_trs.size(); ++j) {
        detail::Trajectory& tr = *chunk_trs[j];
        if (tr.failed) continue;
        const ModelOutput& out = outputs[j];
        if (!detail::output_finite(out)) {
          tr.failed = true;
          continue;
        }
        const Mat rates = cfg.enabled
                              ? guided_rate_matrix(tr.state, out, inst, cfg, t, tr.rng)
                              : model_velocity_and_rates(out, tr.state, t, inst.int_bound).rates;
        for (int i = 0; i < q; ++i)
          tr.state.d[i] = categorical_step(tr.state.d[i], rates.row(i), dt, tr.rng);
        detail::clamp_integers(inst, tr.state.d);
        if (cfg.enabled && tr.state.c.size() > 0)
          tr.state.c = guided_cont_step(tr.state, out, inst, cfg, t, tr.rng);
        const Vec velocity = (out.cont_values - tr.state.c) / (1.0 - t);
        tr.state.c = euler_step_cont(tr.state.c, velocity, dt);
        detail::clamp_continuous(inst, tr.state.c);
      }
    }
  };

  std::vector<std::vector<detail::Trajectory*>> chunks;
  for (int base = 0; base < n_candidates; base += chunk) {
    const int count = std::min(chunk, n_candidates - base);
    std::vector<detail::Trajectory*> chunk_trs;
    for (int i = 0; i < count; ++i) chunk_trs.push_back(&all[base + i]);
    chunks.push_back(std::move(chunk_trs));
  }
  const auto run_all = [&](const std::vector<std::vector<detail::Trajectory*>>& work) {
    if (n_threads <= 1 || work.size() <= 1) {
      for (const auto& c : work) run_chunk(c);
      return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> workers;
    for (int w = 0; w < n_threads; ++w)
      workers.emplace_back([&] {
        for (;;) {
          const std::size_t i = next.fetch_add(1);
          if (i >= work.size()) return;
          run_chunk(work[i]);
        }
      });
    for (std::thread& w : workers) w.join();
  };
  run_all(chunks);

  // one retry for candidates that hit a non-finite model output
  std::vector<detail::Trajectory*> retry;
  for (detail::Trajectory& tr : all)
    if (tr.failed) {
      tr = detail::init_trajectory(inst, rng.fork());
      retry.push_back(&tr);
    }
  if (!retry.empty()) {
    run_all({retry});
    for (detail::Trajectory* tr : retry)
      if (tr->failed)
        throw std::runtime_error("sample_solutions: non-finite model output after resample");
  }

  CandidatePool pool;
  pool.marginals = Mat::Zero(q, cats);
  for (detail::Trajectory& tr : all) {
    Assignment x = detail::assemble(tr.state.d, tr.state.c);
    x = project_bounds(inst, x, /*round_integers=*/true);
    Candidate cand;
    cand.values = x;
    cand.f = target_f(inst, x, cfg.gamma);
    cand.feasible = evaluate(inst, x).feasible;
    for (int i = 0; i < q; ++i) {
      const int v = static_cast<int>(std::nearbyint(x[i]));
      pool.marginals(i, std::min(std::max(v, 0), cats - 1)) += 1.0;
    }
    pool.candidates.push_back(std::move(cand));
  }
  if (q > 0) pool.marginals /= static_cast<double>(n_candidates);
  return pool;
}

inline CandidatePool sample_solutions(const MilpInstance& inst, const Model& model,
                                      const GuidanceConfig& cfg, const Schedule& sched,
                                      int n_candidates, Rng& rng, int n_threads = 0) {
  if (model.config.int_categories != inst.int_bound + 1)
    throw std::invalid_argument("sample_solutions: model categories do not match instance K+1");
  return sample_solutions(inst, model_predictor(model), model.config.normalize, cfg, sched,
                          n_candidates, rng, n_threads);
}

// ---- pool file: candidates plus marginals, consumed by downstream and CLI

inline std::string save_pool(const CandidatePool& pool) {
  nlohmann::json j;
  j["candidates"] = nlohmann::json::array();
  for (const Candidate& c : pool.candidates) {
    j["candidates"].push_back({{"values", std::vector<double>(c.values.begin(), c.values.end())},
                               {"f", c.f},
                               {"feasible", c.feasible}});
  }
  nlohmann::json marg = nlohmann::json::array();
  for (Eigen::Index i = 0; i < pool.marginals.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index k = 0; k < pool.marginals.cols(); ++k) row.push_back(pool.marginals(i, k));
    marg.push_back(row);
  }
  j["marginals"] = marg;
  return j.dump(2);
}

inline CandidatePool load_pool(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  CandidatePool pool;
  for (const auto& cj : j.at("candidates")) {
    Candidate c;
    const auto values = cj.at("values").get<std::vector<double>>();
    c.values = Eigen::Map<const Vec>(values.data(), static_cast<Eigen::Index>(values.size()));
    c.f = cj.at("f").get<double>();
    c.feasible = cj.at("feasible").get<bool>();
    pool.candidates.push_back(std::move(c));
  }
  const auto& marg = j.at("marginals");
  const Eigen::Index rows = static_cast<Eigen::Index>(marg.size());
  const Eigen::Index cols = rows > 0 ? static_cast<Eigen::Index>(marg[0].size()) : 0;
  pool.marginals.resize(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index k = 0; k < cols; ++k) pool.marginals(i, k) = marg[i][k].get<double>();
  return pool;
}

}  // namespace fmip
