// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "fmip/graph.hpp"
#include "fmip/model.hpp"
#include "fmip/rng.hpp"

namespace fmip {

// Training times are drawn from U(0, 1 - kEpsTrain): the loss carries a
// 1/(1-t) factor that diverges at t = 1.
inline constexpr double kEpsTrain = 1e-3;

struct Schedule {
  enum class Kind { kCosine, kUniform };
  int steps = 30;
  Kind kind = Kind::kCosine;
  std::vector<double> times;  // t_0 = 0 < ... < t_N = 1
};

/// t_k = sin(pi k / 2N): step sizes shrink toward the data end t = 1.
inline Schedule cosine_schedule(int n) {
  if (n < 1) throw std::invalid_argument("cosine_schedule: need at least one step");
  Schedule s;
  s.steps = n;
  s.kind = Schedule::Kind::kCosine;
  s.times.resize(n + 1);
  for (int k = 0; k <= n; ++k) s.times[k] = std::sin(3.14159265358979323846 * k / (2.0 * n));
  s.times.front() = 0.0;
  s.times.back() = 1.0;
  return s;
}

inline Schedule uniform_schedule(int n) {
  if (n < 1) throw std::invalid_argument("uniform_schedule: need at least one step");
  Schedule s;
  s.steps = n;
  s.kind = Schedule::Kind::kUniform;
  s.times.resize(n + 1);
  for (int k = 0; k <= n; ++k) s.times[k] = static_cast<double>(k) / n;
  s.times.front() = 0.0;
  s.times.back() = 1.0;
  return s;
}

// Draw (d_t, c_t) from the conditional path given the label (d_1, c_1):
// c_t ~ N(t c_1, (1-t)^2 I) and each d_t gets mass t + (1-t)/(K+1) on the
// label and (1-t)/(K+1) on every other category.
inline SolutionState sample_conditional(const VecI& d1, const Vec& c1, double t, int k_bound,
                                        Rng& rng) {
  if (!(t >= 0.0 && t < 1.0)) throw std::domain_error("sample_conditional: t must lie in [0,1)");
  SolutionState s;
  s.t = t;
  s.c.resize(c1.size());
  for (Eigen::Index i = 0; i < c1.size(); ++i) s.c[i] = t * c1[i] + (1.0 - t) * rng.normal();
  s.d.resize(d1.size());
  const int cats = k_bound + 1;
  const double off = (1.0 - t) / cats;
  for (Eigen::Index i = 0; i < d1.size(); ++i) {
    const double u = rng.uniform();
    if (u < t + off) {
      s.d[i] = d1[i];
    } else {
      // remaining mass is uniform over the other categories
      int j = static_cast<int>((u - (t + off)) / off);
      if (j >= cats - 1) j = cats - 2;
      s.d[i] = j >= d1[i] ? j + 1 : j;
    }
  }
  return s;
}

/// Conditional velocity (c_1 - c_t)/(1 - t).
inline Vec cond_velocity(const Vec& c_t, const Vec& c1, double t) {
  if (t >= 1.0) throw std::domain_error("cond_velocity: t must be < 1");
  return (c1 - c_t) / (1.0 - t);
}

/// Conditional rate toward category j: delta(d_1, j)/(1-t) off the label, 0 at it.
inline double cond_rate(int d_t, int j, int d1, double t) {
  if (t >= 1.0) throw std::domain_error("cond_rate: t must be < 1");
  if (d_t == d1) return 0.0;
  return j == d1 ? 1.0 / (1.0 - t) : 0.0;
}

inline Vec euler_step_cont(const Vec& c_t, const Vec& velocity, double dt) {
  if (dt <= 0.0) throw std::invalid_argument("euler_step_cont: dt must be positive");
  return c_t + velocity * dt;
}

// One CTMC transition. Off-state probabilities are rate*dt; the stay
// probability absorbs the rest. When the outflow exceeds 1 the step is
// clipped and redistributed proportionally.
inline int categorical_step(int d_t, const Vec& rates_row, double dt, Rng& rng) {
  const int cats = static_cast<int>(rates_row.size());
  Vec probs = Vec::Zero(cats);
  double outflow = 0.0;
  for (int j = 0; j < cats; ++j) {
    if (j == d_t) continue;
    if (rates_row[j] < 0.0)
      throw std::invalid_argument("categorical_step: negative rate violates the contract");
    probs[j] = rates_row[j] * dt;
    outflow += probs[j];
  }
  if (outflow > 1.0) {
    probs /= outflow;  // move with probability 1, proportionally
    outflow = 1.0;
  }
  probs[d_t] = 1.0 - outflow;
  return rng.categorical(probs.data(), cats);
}

/// Plain-math Eq.-style training loss for one item (reporting/eval path).
inline double training_loss(const ModelOutput& output, const VecI& d1, const Vec& c1, double t,
                            double omega) {
  if (t > 1.0 - kEpsTrain) throw std::domain_error("training_loss: t too close to 1");
  double loss = (output.cont_values - c1).squaredNorm() / (1.0 - t);
  for (Eigen::Index i = 0; i < d1.size(); ++i) {
    const Eigen::RowVectorXd& row = output.int_logits.row(i);
    const double mx = row.maxCoeff();
    const double lse = mx + std::log((row.array() - mx).exp().sum());
    loss -= omega * (row[d1[i]] - lse);
  }
  return loss;
}

struct VelocityAndRates {
  Vec velocity;  // n - q
  Mat rates;     // q x (K+1), zero at the current state
};

// Parameterize the updates with the model's prediction: velocity from the
// denoised continuous values, rates from the categorical posterior.
inline VelocityAndRates model_velocity_and_rates(const ModelOutput& output,
                                                 const SolutionState& state, double t,
                                                 int k_bound) {
  if (t >= 1.0) throw std::domain_error("model_velocity_and_rates: t must be < 1");
  VelocityAndRates vr;
  vr.velocity = (output.cont_values - state.c) / (1.0 - t);
  const int cats = k_bound + 1;
  const Eigen::Index q = state.d.size();
  vr.rates.resize(q, cats);
  for (Eigen::Index i = 0; i < q; ++i) {
    const Eigen::RowVectorXd& row = output.int_logits.row(i);
    const double mx = row.maxCoeff();
    Eigen::RowVectorXd p = (row.array() - mx).exp();
    p /= p.sum();
    vr.rates.row(i) = p / (1.0 - t);
    vr.rates(i, state.d[i]) = 0.0;
  }
  return vr;
}

/// Softmax of one logits row (helper shared by guidance and metrics).
inline Vec softmax_row(const Eigen::RowVectorXd& logits) {
  const double mx = logits.maxCoeff();
  Vec p = (logits.transpose().array() - mx).exp();
  p /= p.sum();
  return p;
}

}  // namespace fmip
