// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <functional>

#include "fmip/autodiff.hpp"
#include "fmip/rng.hpp"

using namespace fmip;
using ad::Mat;

namespace {

Mat random_mat(Rng& rng, int r, int c) {
  Mat m(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) m(i, j) = rng.uniform() * 2.0 - 1.0;
  return m;
}

// Central finite differences of a scalar-valued builder over one input.
void check_gradient(const std::function<ad::Var(ad::Tape&, ad::Var)>& build, const Mat& x0,
                    double tol = 1e-6) {
  ad::Tape tape;
  ad::Var x = ad::input(tape, x0, /*requires_grad=*/true);
  ad::Var loss = build(tape, x);
  tape.backward(loss);
  const Mat analytic = tape.grad(x);

  const double h = 1e-6;
  for (Eigen::Index i = 0; i < x0.rows(); ++i) {
    for (Eigen::Index j = 0; j < x0.cols(); ++j) {
      Mat xp = x0, xm = x0;
      xp(i, j) += h;
      xm(i, j) -= h;
      ad::Tape tp, tm;
      const double fp = tp.value(build(tp, ad::input(tp, xp, true)))(0, 0);
      const double fm = tm.value(build(tm, ad::input(tm, xm, true)))(0, 0);
      const double fd = (fp - fm) / (2 * h);
      EXPECT_NEAR(analytic(i, j), fd, tol * std::max(1.0, std::abs(fd)))
          << "entry (" << i << "," << j << ")";
    }
  }
}

// reduce to scalar by summing squares against zeros
ad::Var to_scalar(ad::Tape& t, ad::Var v) {
  const Mat zero = Mat::Zero(t.value(v).rows(), t.value(v).cols());
  return ad::weighted_sse(v, zero, ad::Vec::Ones(t.value(v).rows()));
}

}  // namespace

TEST(Autodiff, MatmulGradient) {
  Rng rng(1);
  const Mat a = random_mat(rng, 3, 4);
  const Mat b = random_mat(rng, 4, 2);
  check_gradient(
      [&](ad::Tape& t, ad::Var x) { return to_scalar(t, ad::matmul(x, ad::input(t, b))); }, a);
  check_gradient(
      [&](ad::Tape& t, ad::Var x) { return to_scalar(t, ad::matmul(ad::input(t, a), x)); }, b);
}

TEST(Autodiff, AddSubHadamardScale) {
  Rng rng(2);
  const Mat a = random_mat(rng, 3, 3);
  const Mat b = random_mat(rng, 3, 3);
  check_gradient(
      [&](ad::Tape& t, ad::Var x) { return to_scalar(t, ad::add(x, ad::input(t, b))); }, a);
  check_gradient(
      [&](ad::Tape& t, ad::Var x) { return to_scalar(t, ad::sub(ad::input(t, b), x)); }, a);
  check_gradient(
      [&](ad::Tape& t, ad::Var x) { return to_scalar(t, ad::hadamard(x, ad::input(t, b))); }, a);
  check_gradient([&](ad::Tape& t, ad::Var x) { return to_scalar(t, ad::scale(x, -2.5)); }, a);
}

TEST(Autodiff, RowvecBroadcastGradient) {
  Rng rng(3);
  const Mat a = random_mat(rng, 4, 3);
  const Mat r = random_mat(rng, 1, 3);
  check_gradient(
      [&](ad::Tape& t, ad::Var x) { return to_scalar(t, ad::add_rowvec(x, ad::input(t, r))); }, a);
  check_gradient(
      [&](ad::Tape& t, ad::Var x) { return to_scalar(t, ad::add_rowvec(ad::input(t, a), x)); }, r);
}

TEST(Autodiff, ActivationGradients) {
  Rng rng(4);
  const Mat a = random_mat(rng, 3, 5);
  check_gradient([&](ad::Tape& t, ad::Var x) { return to_scalar(t, ad::gelu(x)); }, a, 1e-5);
  check_gradient([&](ad::Tape& t, ad::Var x) { return to_scalar(t, ad::sigmoid(x)); }, a, 1e-5);
}

TEST(Autodiff, LayerNormGradient) {
  Rng rng(5);
  const Mat a = random_mat(rng, 4, 6);
  const Mat g = random_mat(rng, 1, 6);
  const Mat b = random_mat(rng, 1, 6);
  check_gradient(
      [&](ad::Tape& t, ad::Var x) {
        return to_scalar(t, ad::layer_norm(x, ad::input(t, g, true), ad::input(t, b, true)));
      },
      a, 1e-5);
  check_gradient(
      [&](ad::Tape& t, ad::Var x) {
        return to_scalar(t, ad::layer_norm(ad::input(t, a, true), x, ad::input(t, b, true)));
      },
      g, 1e-5);
}

TEST(Autodiff, ConcatGatherScatterGradients) {
  Rng rng(6);
  const Mat a = random_mat(rng, 3, 2);
  const Mat b = random_mat(rng, 3, 4);
  check_gradient(
      [&](ad::Tape& t, ad::Var x) { return to_scalar(t, ad::concat_cols(x, ad::input(t, b))); },
      a);
  const std::vector<int> idx = {2, 0, 0, 1};
  check_gradient(
      [&](ad::Tape& t, ad::Var x) { return to_scalar(t, ad::gather_rows(x, idx)); }, a);
  const Mat c = random_mat(rng, 4, 3);
  check_gradient(
      [&](ad::Tape& t, ad::Var x) { return to_scalar(t, ad::scatter_sum_rows(x, idx, 3)); }, c);
}

TEST(Autodiff, CrossEntropyGradient) {
  Rng rng(7);
  const Mat logits = random_mat(rng, 4, 3);
  const std::vector<int> labels = {0, 2, 1, -1};  // last row masked
  check_gradient(
      [&](ad::Tape& t, ad::Var x) { return ad::cross_entropy_rows(x, labels); }, logits, 1e-5);
}

TEST(Autodiff, WeightedSseGradient) {
  Rng rng(8);
  const Mat pred = random_mat(rng, 5, 1);
  const Mat target = random_mat(rng, 5, 1);
  ad::Vec w(5);
  w << 1.0, 2.0, 0.5, 4.0, 1.25;
  check_gradient(
      [&](ad::Tape& t, ad::Var x) { return ad::weighted_sse(x, target, w); }, pred);
}

TEST(Autodiff, NoGradInputsRecordNoClosures) {
  ad::Tape tape;
  ad::Var a = ad::input(tape, Mat::Ones(2, 2), false);
  ad::Var b = ad::matmul(a, a);
  EXPECT_FALSE(tape.requires_grad(b));
}

TEST(Autodiff, ChainedExpressionGradient) {
  Rng rng(9);
  const Mat a = random_mat(rng, 3, 4);
  const Mat w = random_mat(rng, 4, 4);
  const Mat g = Mat::Ones(1, 4);
  const Mat be = Mat::Zero(1, 4);
  check_gradient(
      [&](ad::Tape& t, ad::Var x) {
        ad::Var h = ad::gelu(ad::matmul(x, ad::input(t, w, true)));
        h = ad::layer_norm(h, ad::input(t, g, true), ad::input(t, be, true));
        h = ad::sigmoid(h);
        return to_scalar(t, h);
      },
      a, 1e-5);
}
