// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <utility>
#include <vector>

namespace fmip::ad {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

// Reverse-mode autodiff over dense matrices. A Tape owns every intermediate;
// ops append nodes and, when any parent requires a gradient, a backward
// closure. Inference binds parameters without gradients, so no closures are
// recorded and the forward pass stays cheap.

class Tape;

struct Var {
  Tape* tape = nullptr;
  int idx = -1;
};

class Tape {
 public:
  Var make(Mat value, bool requires_grad) {
    Node n;
    bytes_ += sizeof(double) * static_cast<std::size_t>(value.size());
    n.value = std::move(value);
    n.requires_grad = requires_grad;
    nodes_.push_back(std::move(n));
    return Var{this, static_cast<int>(nodes_.size()) - 1};
  }

  void set_backward(Var v, std::function<void()> fn) { nodes_[v.idx].backward = std::move(fn); }

  const Mat& value(Var v) const { return nodes_[v.idx].value; }
  bool requires_grad(Var v) const { return nodes_[v.idx].requires_grad; }

  /// Gradient accumulator, allocated (zero) on first touch.
  Mat& grad(Var v) {
    Node& n = nodes_[v.idx];
    if (n.grad.size() == 0) {
      n.grad = Mat::Zero(n.value.rows(), n.value.cols());
      bytes_ += sizeof(double) * static_cast<std::size_t>(n.grad.size());
    }
    return n.grad;
  }

  bool has_grad(Var v) const { return nodes_[v.idx].grad.size() != 0; }

  /// Reverse sweep from a 1x1 scalar root.
  void backward(Var root) {
    if (value(root).size() != 1) throw std::invalid_argument("backward: root must be 1x1");
    grad(root)(0, 0) = 1.0;
    for (int i = root.idx; i >= 0; --i) {
      Node& n = nodes_[i];
      if (n.backward && n.grad.size() != 0) n.backward();
    }
  }

  std::size_t bytes() const { return bytes_; }
  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Mat value;
    Mat grad;
    bool requires_grad = false;
    std::function<void()> backward;
  };
  std::vector<Node> nodes_;
  std::size_t bytes_ = 0;
};

inline Var input(Tape& t, Mat value, bool requires_grad = false) {
  return t.make(std::move(value), requires_grad);
}

namespace detail {

inline Tape& tape_of(Var a, Var b) {
  if (a.tape != b.tape) throw std::invalid_argument("autodiff: vars on different tapes");
  return *a.tape;
}

}  // namespace detail

inline Var matmul(Var a, Var b) {
  Tape& t = detail::tape_of(a, b);
  const bool rg = t.requires_grad(a) || t.requires_grad(b);
  Var out = t.make(t.value(a) * t.value(b), rg);
  if (rg) {
    Tape* tp = &t;
    t.set_backward(out, [tp, a, b, out] {
      const Mat& g = tp->grad(out);
      if (tp->requires_grad(a)) tp->grad(a).noalias() += g * tp->value(b).transpose();
      if (tp->requires_grad(b)) tp->grad(b).noalias() += tp->value(a).transpose() * g;
    });
  }
  return out;
}

inline Var add(Var a, Var b) {
  Tape& t = detail::tape_of(a, b);
  const bool rg = t.requires_grad(a) || t.requires_grad(b);
  Var out = t.make(t.value(a) + t.value(b), rg);
  if (rg) {
    Tape* tp = &t;
    t.set_backward(out, [tp, a, b, out] {
      const Mat& g = tp->grad(out);
      if (tp->requires_grad(a)) tp->grad(a) += g;
      if (tp->requires_grad(b)) tp->grad(b) += g;
    });
  }
  return out;
}

inline Var sub(Var a, Var b) {
  Tape& t = detail::tape_of(a, b);
  const bool rg = t.requires_grad(a) || t.requires_grad(b);
  Var out = t.make(t.value(a) - t.value(b), rg);
  if (rg) {
    Tape* tp = &t;
    t.set_backward(out, [tp, a, b, out] {
      const Mat& g = tp->grad(out);
      if (tp->requires_grad(a)) tp->grad(a) += g;
      if (tp->requires_grad(b)) tp->grad(b) -= g;
    });
  }
  return out;
}

/// Broadcast a 1 x h row vector over every row of a.
inline Var add_rowvec(Var a, Var r) {
  Tape& t = detail::tape_of(a, r);
  if (t.value(r).rows() != 1 || t.value(r).cols() != t.value(a).cols())
    throw std::invalid_argument("add_rowvec: shape mismatch");
  Mat v = t.value(a);
  v.rowwise() += t.value(r).row(0);
  const bool rg = t.requires_grad(a) || t.requires_grad(r);
  Var out = t.make(std::move(v), rg);
  if (rg) {
    Tape* tp = &t;
    t.set_backward(out, [tp, a, r, out] {
      const Mat& g = tp->grad(out);
      if (tp->requires_grad(a)) tp->grad(a) += g;
      if (tp->requires_grad(r)) tp->grad(r).row(0) += g.colwise().sum();
    });
  }
  return out;
}

inline Var hadamard(Var a, Var b) {
  Tape& t = detail::tape_of(a, b);
  const bool rg = t.requires_grad(a) || t.requires_grad(b);
  Var out = t.make(t.value(a).cwiseProduct(t.value(b)), rg);
  if (rg) {
    Tape* tp = &t;
    t.set_backward(out, [tp, a, b, out] {
      const Mat& g = tp->grad(out);
      if (tp->requires_grad(a)) tp->grad(a) += g.cwiseProduct(tp->value(b));
      if (tp->requires_grad(b)) tp->grad(b) += g.cwiseProduct(tp->value(a));
    });
  }
  return out;
}

inline Var scale(Var a, double s) {
  Tape& t = *a.tape;
  const bool rg = t.requires_grad(a);
  Var out = t.make(t.value(a) * s, rg);
  if (rg) {
    Tape* tp = &t;
    t.set_backward(out, [tp, a, s, out] { tp->grad(a) += s * tp->grad(out); });
  }
  return out;
}

/// Exact GELU: x * Phi(x) with the Gaussian CDF.
inline Var gelu(Var a) {
  Tape& t = *a.tape;
  const Mat& x = t.value(a);
  Mat v = x.unaryExpr([](double u) { return 0.5 * u * (1.0 + std::erf(u / 1.4142135623730951)); });
  const bool rg = t.requires_grad(a);
  Var out = t.make(std::move(v), rg);
  if (rg) {
    Tape* tp = &t;
    t.set_backward(out, [tp, a, out] {
      const Mat& g = tp->grad(out);
      const Mat& x = tp->value(a);
      tp->grad(a) += g.cwiseProduct(x.unaryExpr([](double u) {
        const double cdf = 0.5 * (1.0 + std::erf(u / 1.4142135623730951));
        const double pdf = std::exp(-0.5 * u * u) / 2.5066282746310002;  // sqrt(2*pi)
        return cdf + u * pdf;
      }));
    });
  }
  return out;
}

inline Var sigmoid(Var a) {
  Tape& t = *a.tape;
  Mat v = t.value(a).unaryExpr([](double u) { return 1.0 / (1.0 + std::exp(-u)); });
  const bool rg = t.requires_grad(a);
  Var out = t.make(std::move(v), rg);
  if (rg) {
    Tape* tp = &t;
    t.set_backward(out, [tp, a, out] {
      const Mat& g = tp->grad(out);
      const Mat& s = tp->value(out);
      tp->grad(a) += g.cwiseProduct(s.cwiseProduct((1.0 - s.array()).matrix()));
    });
  }
  return out;
}

// Row-wise layer norm with learned scale and shift (both 1 x h).
inline Var layer_norm(Var a, Var gamma, Var beta, double eps = 1e-5) {
  Tape& t = detail::tape_of(a, gamma);
  detail::tape_of(gamma, beta);
  const Mat& x = t.value(a);
  const Eigen::Index rows = x.rows(), cols = x.cols();
  if (t.value(gamma).cols() != cols || t.value(beta).cols() != cols)
    throw std::invalid_argument("layer_norm: scale/shift width mismatch");
  Mat xhat(rows, cols);
  Vec inv_std(rows);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const double mu = x.row(i).mean();
    const double var = (x.row(i).array() - mu).square().mean();
    inv_std[i] = 1.0 / std::sqrt(var + eps);
    xhat.row(i) = (x.row(i).array() - mu) * inv_std[i];
  }
  Mat v = (xhat.array().rowwise() * t.value(gamma).row(0).array()).matrix();
  v.rowwise() += t.value(beta).row(0);
  const bool rg = t.requires_grad(a) || t.requires_grad(gamma) || t.requires_grad(beta);
  Var out = t.make(std::move(v), rg);
  if (rg) {
    Tape* tp = &t;
    t.set_backward(out, [tp, a, gamma, beta, out, xhat = std::move(xhat),
                         inv_std = std::move(inv_std)] {
      const Mat& g = tp->grad(out);
      if (tp->requires_grad(beta)) tp->grad(beta).row(0) += g.colwise().sum();
      if (tp->requires_grad(gamma))
        tp->grad(gamma).row(0) += g.cwiseProduct(xhat).colwise().sum();
      if (tp->requires_grad(a)) {
        const Eigen::Index h = g.cols();
        Mat dxhat = (g.array().rowwise() * tp->value(gamma).row(0).array()).matrix();
        Mat& da = tp->grad(a);
        for (Eigen::Index i = 0; i < g.rows(); ++i) {
          const double sum_d = dxhat.row(i).sum();
          const double sum_dx = dxhat.row(i).dot(xhat.row(i));
          da.row(i) += (inv_std[i] / static_cast<double>(h)) *
                       (static_cast<double>(h) * dxhat.row(i).array() - sum_d -
                        xhat.row(i).array() * sum_dx)
                           .matrix();
        }
      }
    });
  }
  return out;
}

inline Var concat_cols(Var a, Var b) {
  Tape& t = detail::tape_of(a, b);
  const Mat& av = t.value(a);
  const Mat& bv = t.value(b);
  if (av.rows() != bv.rows()) throw std::invalid_argument("concat_cols: row mismatch");
  Mat v(av.rows(), av.cols() + bv.cols());
  v.leftCols(av.cols()) = av;
  v.rightCols(bv.cols()) = bv;
  const bool rg = t.requires_grad(a) || t.requires_grad(b);
  Var out = t.make(std::move(v), rg);
  if (rg) {
    Tape* tp = &t;
    const Eigen::Index ac = av.cols(), bc = bv.cols();
    t.set_backward(out, [tp, a, b, out, ac, bc] {
      const Mat& g = tp->grad(out);
      if (tp->requires_grad(a)) tp->grad(a) += g.leftCols(ac);
      if (tp->requires_grad(b)) tp->grad(b) += g.rightCols(bc);
    });
  }
  return out;
}

/// out.row(k) = a.row(idx[k])
inline Var gather_rows(Var a, std::vector<int> idx) {
  Tape& t = *a.tape;
  const Mat& av = t.value(a);
  Mat v(static_cast<Eigen::Index>(idx.size()), av.cols());
  for (std::size_t k = 0; k < idx.size(); ++k) v.row(static_cast<Eigen::Index>(k)) = av.row(idx[k]);
  const bool rg = t.requires_grad(a);
  Var out = t.make(std::move(v), rg);
  if (rg) {
    Tape* tp = &t;
    t.set_backward(out, [tp, a, out, idx = std::move(idx)] {
      const Mat& g = tp->grad(out);
      Mat& da = tp->grad(a);
      for (std::size_t k = 0; k < idx.size(); ++k)
        da.row(idx[k]) += g.row(static_cast<Eigen::Index>(k));
    });
  }
  return out;
}

/// out = zeros(out_rows, h); out.row(idx[k]) += a.row(k)
inline Var scatter_sum_rows(Var a, std::vector<int> idx, int out_rows) {
  Tape& t = *a.tape;
  const Mat& av = t.value(a);
  if (static_cast<std::size_t>(av.rows()) != idx.size())
    throw std::invalid_argument("scatter_sum_rows: index count mismatch");
  Mat v = Mat::Zero(out_rows, av.cols());
  for (std::size_t k = 0; k < idx.size(); ++k) v.row(idx[k]) += av.row(static_cast<Eigen::Index>(k));
  const bool rg = t.requires_grad(a);
  Var out = t.make(std::move(v), rg);
  if (rg) {
    Tape* tp = &t;
    t.set_backward(out, [tp, a, out, idx = std::move(idx)] {
      const Mat& g = tp->grad(out);
      Mat& da = tp->grad(a);
      for (std::size_t k = 0; k < idx.size(); ++k)
        da.row(static_cast<Eigen::Index>(k)) += g.row(idx[k]);
    });
  }
  return out;
}

/// Weighted sum of squared residuals: sum_r w_r * ||pred.row(r) - target.row(r)||^2 (1x1).
inline Var weighted_sse(Var pred, Mat target, Vec row_weights) {
  Tape& t = *pred.tape;
  const Mat& p = t.value(pred);
  if (p.rows() != target.rows() || p.cols() != target.cols())
    throw std::invalid_argument("weighted_sse: target shape mismatch");
  if (row_weights.size() != p.rows()) throw std::invalid_argument("weighted_sse: weight length");
  double total = 0.0;
  for (Eigen::Index r = 0; r < p.rows(); ++r)
    total += row_weights[r] * (p.row(r) - target.row(r)).squaredNorm();
  Mat v(1, 1);
  v(0, 0) = total;
  const bool rg = t.requires_grad(pred);
  Var out = t.make(std::move(v), rg);
  if (rg) {
    Tape* tp = &t;
    t.set_backward(out, [tp, pred, out, target = std::move(target),
                         row_weights = std::move(row_weights)] {
      const double g = tp->grad(out)(0, 0);
      Mat& dp = tp->grad(pred);
      const Mat& p = tp->value(pred);
      for (Eigen::Index r = 0; r < p.rows(); ++r)
        dp.row(r) += g * 2.0 * row_weights[r] * (p.row(r) - target.row(r));
    });
  }
  return out;
}

// Sum over rows of -log softmax(logits)[label]; rows with label < 0 are
// skipped (used to mask variables outside an item).
inline Var cross_entropy_rows(Var logits, std::vector<int> labels) {
  Tape& t = *logits.tape;
  const Mat& z = t.value(logits);
  if (static_cast<std::size_t>(z.rows()) != labels.size())
    throw std::invalid_argument("cross_entropy_rows: label count mismatch");
  Mat probs(z.rows(), z.cols());
  double total = 0.0;
  for (Eigen::Index r = 0; r < z.rows(); ++r) {
    const double mx = z.cols() > 0 ? z.row(r).maxCoeff() : 0.0;
    Eigen::RowVectorXd e = (z.row(r).array() - mx).exp();
    const double denom = e.sum();
    probs.row(r) = e / denom;
    if (labels[static_cast<std::size_t>(r)] >= 0)
      total -= std::log(std::max(probs(r, labels[static_cast<std::size_t>(r)]), 1e-300));
  }
  Mat v(1, 1);
  v(0, 0) = total;
  const bool rg = t.requires_grad(logits);
  Var out = t.make(std::move(v), rg);
  if (rg) {
    Tape* tp = &t;
    t.set_backward(out, [tp, logits, out, probs = std::move(probs), labels = std::move(labels)] {
      const double g = tp->grad(out)(0, 0);
      Mat& dz = tp->grad(logits);
      for (Eigen::Index r = 0; r < dz.rows(); ++r) {
        const int lab = labels[static_cast<std::size_t>(r)];
        if (lab < 0) continue;
        dz.row(r) += g * probs.row(r);
        dz(r, lab) -= g;
      }
    });
  }
  return out;
}

}  // namespace fmip::ad
