// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "fmip/config.hpp"
#include "fmip/flow.hpp"
#include "fmip/instance_gen.hpp"
#include "fmip/model.hpp"

namespace fmip {

// AdamW over the flat parameter list (visit order). Moments live here and are
// serialized into the checkpoint so training can resume.
class AdamW {
 public:
  AdamW(const ModelParams& params, double lr, double weight_decay)
      : lr_(lr), wd_(weight_decay) {
    visit_params(const_cast<ModelParams&>(params), [&](const std::string&, Mat& p) {
      m_.push_back(Mat::Zero(p.rows(), p.cols()));
      v_.push_back(Mat::Zero(p.rows(), p.cols()));
    });
  }

  void step(ModelParams& params, const std::vector<Mat>& grads, double lr_scale) {
    ++t_;
    const double lr = lr_ * lr_scale;
    const double bc1 = 1.0 - std::pow(kBeta1, t_);
    const double bc2 = 1.0 - std::pow(kBeta2, t_);
    std::size_t i = 0;
    visit_params(params, [&](const std::string&, Mat& p) {
      const Mat& g = grads[i];
      m_[i] = kBeta1 * m_[i] + (1.0 - kBeta1) * g;
      v_[i] = kBeta2 * v_[i] + (1.0 - kBeta2) * g.cwiseProduct(g);
      const Mat mhat = m_[i] / bc1;
      const Mat vhat = v_[i] / bc2;
      const Mat denom = vhat.cwiseSqrt() + Mat::Constant(p.rows(), p.cols(), kEps);
      p -= lr * (mhat.cwiseQuotient(denom) + wd_ * p);
      ++i;
    });
  }

  long step_count() const { return t_; }
  void set_step_count(long t) { t_ = t; }
  std::vector<Mat>& moments_m() { return m_; }
  std::vector<Mat>& moments_v() { return v_; }

 private:
  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEps = 1e-8;
  double lr_, wd_;
  long t_ = 0;
  std::vector<Mat> m_, v_;
};

struct TrainItem {
  const LabeledInstance* data = nullptr;
  TripartiteGraph graph;
  VecI d1;
  Vec c1;
};

namespace detail {

inline TrainItem make_train_item(const LabeledInstance& li, bool normalize) {
  TrainItem item;
  item.data = &li;
  item.graph = encode(li.instance, normalize);
  const int q = li.instance.num_int;
  item.d1.resize(q);
  for (int i = 0; i < q; ++i) item.d1[i] = static_cast<int>(std::nearbyint(li.label[i]));
  item.c1 = li.label.tail(li.instance.num_vars - q);
  return item;
}

struct BatchLoss {
  ad::Var loss;
  ForwardVars fv;
};

// Eq.-4 loss over one batch: per-item path samples, one batched forward,
// squared continuous error scaled by 1/(1-t) plus omega times the integer
// cross entropy, averaged over the batch.
inline BatchLoss batch_loss(ad::Tape& tape, const BoundParams& bp, const ModelConfig& cfg,
                            const std::vector<const TrainItem*>& items, double omega, Rng& rng) {
  std::vector<AugmentedGraph> graphs;
  std::vector<double> times;
  graphs.reserve(items.size());
  for (const TrainItem* item : items) {
    const double t = rng.uniform() * (1.0 - kEpsTrain);
    times.push_back(t);
    SolutionState state =
        sample_conditional(item->d1, item->c1, t, cfg.int_categories - 1, rng);
    graphs.push_back(attach_state(item->graph, state));
  }
  GraphBatch batch = GraphBatch::build(graphs);
  ForwardVars fv = forward_tape(tape, bp, cfg, batch);

  // continuous targets and per-row 1/(1-t) weights
  const int total_c = batch.cvar_offset.back();
  Mat target(total_c, 1);
  Vec weights(total_c);
  for (std::size_t k = 0; k < items.size(); ++k) {
    const int c0 = batch.cvar_offset[k];
    for (Eigen::Index i = 0; i < items[k]->c1.size(); ++i) {
      target(c0 + i, 0) = items[k]->c1[i];
      weights[c0 + i] = 1.0 / (1.0 - times[k]);
    }
  }
  std::vector<int> labels(static_cast<std::size_t>(batch.ivar_offset.back()));
  for (std::size_t k = 0; k < items.size(); ++k) {
    const int q0 = batch.ivar_offset[k];
    for (Eigen::Index i = 0; i < items[k]->d1.size(); ++i)
      labels[static_cast<std::size_t>(q0 + i)] = items[k]->d1[i];
  }

  ad::Var sse = ad::weighted_sse(fv.cont_values, std::move(target), std::move(weights));
  ad::Var ce = ad::cross_entropy_rows(fv.int_logits, std::move(labels));
  ad::Var loss = ad::scale(ad::add(sse, ad::scale(ce, omega)), 1.0 / static_cast<double>(items.size()));
  return {loss, fv};
}

inline double cosine_lr_scale(const std::string& schedule, long step, long total_steps) {
  if (schedule == "constant") return 1.0;
  // cosine-decay (default)
  const double frac = total_steps > 0 ? static_cast<double>(step) / total_steps : 0.0;
  return 0.5 * (1.0 + std::cos(3.14159265358979323846 * std::min(frac, 1.0)));
}

}  // namespace detail

struct TrainResult {
  Checkpoint checkpoint;
  std::vector<double> epoch_loss;  // mean loss per epoch
};

/// Doubles the batch until the dry-run forward/backward exceeds the budget.
inline int probe_batch_size(const std::vector<TrainItem>& items, const ModelConfig& cfg,
                            const TrainConfig& tcfg, const ModelParams& params) {
  const int n = static_cast<int>(items.size());
  int batch = 1;
  while (batch < n) {
    const int next = std::min(batch * 2, n);
    Rng probe_rng(0);
    ad::Tape tape;
    BoundParams bp = bind_params(tape, params, /*requires_grad=*/true);
    std::vector<const TrainItem*> chunk;
    for (int i = 0; i < next; ++i) chunk.push_back(&items[i % items.size()]);
    detail::BatchLoss bl = detail::batch_loss(tape, bp, cfg, chunk, tcfg.omega, probe_rng);
    tape.backward(bl.loss);
    if (tape.bytes() > tcfg.memory_budget_bytes) break;
    batch = next;
  }
  return batch;
}

inline TrainResult train(const std::vector<LabeledInstance>& dataset, const ModelConfig& model_cfg,
                         const TrainConfig& train_cfg, const Checkpoint* resume = nullptr) {
  if (dataset.empty()) throw std::invalid_argument("train: dataset is empty");
  for (const LabeledInstance& li : dataset)
    if (li.instance.int_bound + 1 != model_cfg.int_categories)
      throw std::invalid_argument("train: instance '" + li.instance.name +
                                  "' K+1 does not match model int_categories");

  std::vector<TrainItem> items;
  items.reserve(dataset.size());
  for (const LabeledInstance& li : dataset)
    items.push_back(detail::make_train_item(li, model_cfg.normalize));

  Checkpoint ckpt;
  ckpt.model.config = model_cfg;
  ckpt.seed = train_cfg.seed;
  ckpt.model.params =
      resume ? resume->model.params : init_params(model_cfg, train_cfg.seed);
  int start_epoch = 0;
  AdamW opt(ckpt.model.params, train_cfg.learning_rate, train_cfg.weight_decay);
  if (resume) {
    if (!resume->extra.is_null()) {
      start_epoch = resume->extra.value("epoch", 0);
      opt.set_step_count(resume->extra.value("step", 0l));
      if (resume->extra.contains("adam_m")) {
        std::size_t i = 0;
        visit_params(ckpt.model.params, [&](const std::string& name, Mat&) {
          opt.moments_m()[i] = detail::tensor_from_json(resume->extra.at("adam_m").at(name));
          opt.moments_v()[i] = detail::tensor_from_json(resume->extra.at("adam_v").at(name));
          ++i;
        });
      }
    }
  }

  const int batch_size =
      train_cfg.batch_size > 0
          ? std::min(train_cfg.batch_size, static_cast<int>(items.size()))
          : probe_batch_size(items, model_cfg, train_cfg, ckpt.model.params);
  const long steps_per_epoch = (items.size() + batch_size - 1) / batch_size;
  const long total_steps = steps_per_epoch * train_cfg.epochs;

  TrainResult result;
  for (int epoch = start_epoch; epoch < train_cfg.epochs; ++epoch) {
    // per-epoch stream keyed by (seed, epoch): resuming reproduces the run
    Rng rng(train_cfg.seed ^ (0xD1342543DE82EF95ULL * static_cast<std::uint64_t>(epoch + 1)));
    std::vector<int> order(items.size());
    std::iota(order.begin(), order.end(), 0);
    for (int i = static_cast<int>(order.size()) - 1; i > 0; --i) {
      const int j = static_cast<int>(rng.below(static_cast<std::uint64_t>(i + 1)));
      std::swap(order[i], order[j]);
    }

    double epoch_total = 0.0;
    long epoch_batches = 0;
    for (std::size_t base = 0; base < order.size(); base += batch_size) {
      std::vector<const TrainItem*> chunk;
      for (std::size_t i = base; i < std::min(order.size(), base + batch_size); ++i)
        chunk.push_back(&items[order[i]]);

      ad::Tape tape;
      BoundParams bp = bind_params(tape, ckpt.model.params, /*requires_grad=*/true);
      detail::BatchLoss bl = detail::batch_loss(tape, bp, model_cfg, chunk, train_cfg.omega, rng);
      const double loss_value = tape.value(bl.loss)(0, 0);
      if (!std::isfinite(loss_value)) {
        std::ostringstream names;
        for (const TrainItem* it : chunk) names << " " << it->data->instance.name;
        throw std::runtime_error("train: non-finite loss on batch of:" + names.str());
      }
      tape.backward(bl.loss);

      std::vector<Mat> grads;
      grads.reserve(opt.moments_m().size());
      visit_params(bp, [&](const std::string&, ad::Var& v) {
        grads.push_back(tape.has_grad(v) ? tape.grad(v)
                                         : Mat::Zero(tape.value(v).rows(), tape.value(v).cols()));
      });
      const double lr_scale =
          detail::cosine_lr_scale(train_cfg.lr_schedule, opt.step_count(), total_steps);
      opt.step(ckpt.model.params, grads, lr_scale);
      epoch_total += loss_value;
      ++epoch_batches;
    }
    result.epoch_loss.push_back(epoch_total / static_cast<double>(epoch_batches));
  }

  nlohmann::json state;
  state["epoch"] = train_cfg.epochs;
  state["step"] = opt.step_count();
  nlohmann::json am = nlohmann::json::object(), av = nlohmann::json::object();
  std::size_t i = 0;
  visit_params(ckpt.model.params, [&](const std::string& name, Mat&) {
    am[name] = detail::tensor_to_json(opt.moments_m()[i]);
    av[name] = detail::tensor_to_json(opt.moments_v()[i]);
    ++i;
  });
  state["adam_m"] = am;
  state["adam_v"] = av;
  ckpt.extra = state;
  result.checkpoint = std::move(ckpt);
  return result;
}

}  // namespace fmip
