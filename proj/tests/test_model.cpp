// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <set>

#include "fixtures.hpp"
#include "fmip/flow.hpp"
#include "fmip/model.hpp"
#include "fmip/train.hpp"

using namespace fmip;
using fmip::testing::toy_instance;

TEST(TimeEmbedding, ZeroTimeAlternates) {
  const Vec e = time_embedding(0.0, 8);
  ASSERT_EQ(e.size(), 8);
  for (int i = 0; i < 4; ++i) {
    EXPECT_DOUBLE_EQ(e[2 * i], 0.0);
    EXPECT_DOUBLE_EQ(e[2 * i + 1], 1.0);
  }
}

TEST(TimeEmbedding, DistinctOnCosineGrid) {
  const Schedule sched = cosine_schedule(30);
  std::vector<Vec> embs;
  for (double t : sched.times) embs.push_back(time_embedding(t, 64));
  for (std::size_t i = 0; i < embs.size(); ++i)
    for (std::size_t j = i + 1; j < embs.size(); ++j)
      EXPECT_GT((embs[i] - embs[j]).norm(), 1e-9) << i << " vs " << j;
}

TEST(TimeEmbedding, OddWidthRejected) {
  EXPECT_THROW(time_embedding(0.5, 7), std::invalid_argument);
}

TEST(TriConv, IsolatedNodeGateIsSigmoidOfBias) {
  const int h = 4;
  Rng rng(11);
  ConvT<Mat> p = detail::init_conv(rng, h, true);
  const Mat target = Mat::Random(3, h);
  const Mat src = Mat::Random(2, h);
  // no edges at all: a_1 = a_2 = 0, output = LN(o2(GELU(o1([LN(0); h]))))
  const Mat out = tri_conv(target, src, src, {}, {}, p, false);
  EXPECT_EQ(out.rows(), 3);
  EXPECT_EQ(out.cols(), h);
  EXPECT_TRUE(out.allFinite());
}

TEST(TriConv, ZeroOutputPathYieldsResidualIdentity) {
  const int h = 4;
  Rng rng(12);
  ConvT<Mat> p = detail::init_conv(rng, h, true);
  // zero the output path and make LN_out the identity on a zero input:
  // o2 weights/bias zero => o = 0; LN_out(0)*1 + 0 = 0; residual adds h_v.
  p.o2.w.setZero();
  p.o2.b.setZero();
  p.out.g.setZero();  // scale 0 kills the normalized zeros too
  p.out.b.setZero();
  const Mat target = Mat::Random(3, h);
  const Mat src = Mat::Random(2, h);
  std::vector<GraphEdge> edges = {{0, 0, 1.0}, {1, 1, -2.0}};
  const Mat out = tri_conv(target, src, src, edges, edges, p, true);
  EXPECT_TRUE(out.isApprox(target, 1e-12));
}

TEST(Forward, ToyShapes) {
  const MilpInstance inst = toy_instance();
  ModelConfig cfg;
  cfg.layers = 2;
  cfg.hidden = 8;
  cfg.int_categories = 2;  // shape check runs the binary head
  Model model{cfg, init_params(cfg, 7)};
  const TripartiteGraph g = encode(inst);
  SolutionState s;
  s.d = VecI::Zero(1);
  s.c = Vec::Zero(1);
  s.t = 0.3;
  const ModelOutput out = forward(model, attach_state(g, s));
  EXPECT_EQ(out.int_logits.rows(), 1);
  EXPECT_EQ(out.int_logits.cols(), 2);
  EXPECT_EQ(out.cont_values.size(), 1);
}

TEST(Forward, NoIntegerVariables) {
  MilpInstance inst = toy_instance();
  inst.num_int = 0;
  ModelConfig cfg;
  cfg.layers = 2;
  cfg.hidden = 8;
  Model model{cfg, init_params(cfg, 7)};
  const TripartiteGraph g = encode(inst);
  SolutionState s;
  s.d = VecI(0);
  s.c = Vec::Zero(2);
  s.t = 0.5;
  const ModelOutput out = forward(model, attach_state(g, s));
  EXPECT_EQ(out.int_logits.rows(), 0);
  EXPECT_EQ(out.cont_values.size(), 2);
  EXPECT_TRUE(out.cont_values.allFinite());
}

TEST(Forward, DeterministicGivenInputs) {
  const MilpInstance inst = fmip::testing::random_instance(3);
  ModelConfig cfg;
  cfg.layers = 3;
  cfg.hidden = 8;
  Model model{cfg, init_params(cfg, 5)};
  const TripartiteGraph g = encode(inst);
  SolutionState s;
  s.d = VecI::Zero(inst.num_int);
  s.c = Vec::Zero(inst.num_vars - inst.num_int);
  s.t = 0.4;
  const AugmentedGraph a = attach_state(g, s);
  const ModelOutput o1 = forward(model, a);
  const ModelOutput o2 = forward(model, a);
  EXPECT_EQ(o1.int_logits, o2.int_logits);
  EXPECT_EQ(o1.cont_values, o2.cont_values);
}

TEST(Forward, PermutationEquivariance) {
  // permuting integer variables permutes logits rows the same way
  MilpInstance inst;
  inst.name = "perm";
  inst.num_vars = 3;
  inst.num_cons = 2;
  inst.num_int = 3;
  inst.int_bound = 1;
  inst.obj = Vec(3);
  inst.obj << 1.0, -2.0, 0.5;
  inst.con_matrix = {{0, 0, 1.0}, {0, 1, 2.0}, {1, 1, -1.0}, {1, 2, 3.0}};
  inst.rhs = Vec(2);
  inst.rhs << 1.0, 2.0;
  inst.lower = Vec::Zero(3);
  inst.upper = Vec::Ones(3);
  validate(inst);

  MilpInstance permuted = inst;  // swap variables 0 and 2
  const auto pmap = [](int c) { return c == 0 ? 2 : (c == 2 ? 0 : c); };
  for (Coef& c : permuted.con_matrix) c.col = pmap(c.col);
  permuted.obj << 0.5, -2.0, 1.0;

  ModelConfig cfg;
  cfg.layers = 2;
  cfg.hidden = 8;
  Model model{cfg, init_params(cfg, 9)};

  SolutionState s;
  s.d = VecI(3);
  s.d << 1, 0, 1;
  s.c = Vec(0);
  s.t = 0.3;
  SolutionState sp = s;
  sp.d << 1, 0, 1;  // swapped endpoints happen to be equal values here
  const ModelOutput a = forward(model, attach_state(encode(inst), s));
  const ModelOutput b = forward(model, attach_state(encode(permuted), sp));
  EXPECT_TRUE(a.int_logits.row(0).isApprox(b.int_logits.row(2), 1e-9));
  EXPECT_TRUE(a.int_logits.row(2).isApprox(b.int_logits.row(0), 1e-9));
  EXPECT_TRUE(a.int_logits.row(1).isApprox(b.int_logits.row(1), 1e-9));
}

TEST(Forward, SoftmaxRowsSumToOne) {
  const MilpInstance inst = fmip::testing::random_instance(13);
  ModelConfig cfg;
  cfg.layers = 2;
  cfg.hidden = 8;
  Model model{cfg, init_params(cfg, 2)};
  const TripartiteGraph g = encode(inst);
  SolutionState s;
  s.d = VecI::Zero(inst.num_int);
  s.c = Vec::Zero(inst.num_vars - inst.num_int);
  s.t = 0.6;
  const ModelOutput out = forward(model, attach_state(g, s));
  for (Eigen::Index i = 0; i < out.int_logits.rows(); ++i)
    EXPECT_NEAR(softmax_row(out.int_logits.row(i)).sum(), 1.0, 1e-6);
}

TEST(InitParams, DeterministicAndSeedSensitive) {
  ModelConfig cfg;
  cfg.layers = 2;
  cfg.hidden = 8;
  ModelParams a = init_params(cfg, 42);
  ModelParams b = init_params(cfg, 42);
  ModelParams c = init_params(cfg, 43);
  bool all_equal = true, any_diff = false;
  visit_params(a, [&](const std::string& name, Mat& m) {
    Mat* mb = nullptr;
    visit_params(b, [&](const std::string& n2, Mat& m2) {
      if (n2 == name) mb = &m2;
    });
    if (m != *mb) all_equal = false;
  });
  visit_params(a, [&](const std::string& name, Mat& m) {
    visit_params(c, [&](const std::string& n2, Mat& m2) {
      if (n2 == name && m != m2) any_diff = true;
    });
  });
  EXPECT_TRUE(all_equal);
  EXPECT_TRUE(any_diff);
}

TEST(InitParams, FiniteAndWithinUniformRange) {
  ModelConfig cfg;
  cfg.layers = 1;
  cfg.hidden = 8;
  ModelParams p = init_params(cfg, 1);
  visit_params(p, [&](const std::string& name, Mat& m) {
    EXPECT_TRUE(m.allFinite()) << name;
    if (name.find(".w") != std::string::npos) {
      const double bound = 1.0 / std::sqrt(static_cast<double>(m.rows()));
      EXPECT_LE(m.cwiseAbs().maxCoeff(), bound + 1e-12) << name;
    }
  });
}

TEST(Checkpoint, SaveLoadBitExact) {
  ModelConfig cfg;
  cfg.layers = 2;
  cfg.hidden = 8;
  Checkpoint ckpt;
  ckpt.model.config = cfg;
  ckpt.model.params = init_params(cfg, 77);
  ckpt.seed = 77;
  const std::string once = save_checkpoint(ckpt);
  const Checkpoint loaded = load_checkpoint(once);
  const std::string twice = save_checkpoint(loaded);
  EXPECT_EQ(once, twice);
  EXPECT_EQ(loaded.model.config.layers, cfg.layers);
  EXPECT_EQ(loaded.seed, 77u);
}

TEST(Checkpoint, RejectsBadVersion) {
  nlohmann::json j = nlohmann::json::parse(save_checkpoint(
      {{ModelConfig{1, 4, 2, true}, init_params(ModelConfig{1, 4, 2, true}, 0)}, 0, {}}));
  j["version"] = "other";
  EXPECT_THROW(load_checkpoint(j.dump()), std::invalid_argument);
}

// Full training-loss gradients against central finite differences on the toy.
TEST(Gradients, TrainingLossMatchesFiniteDifferences) {
  const MilpInstance inst = toy_instance();  // 2 variables, q = 1
  ModelConfig cfg;
  cfg.layers = 2;
  cfg.hidden = 4;
  cfg.int_categories = inst.int_bound + 1;
  ModelParams params = init_params(cfg, 3);

  const TripartiteGraph g = encode(inst);
  SolutionState s;
  s.d = VecI::Zero(1);
  s.d[0] = 2;
  s.c = Vec::Constant(1, 0.8);
  s.t = 0.35;
  const AugmentedGraph aug = attach_state(g, s);
  const VecI d1 = (VecI(1) << 1).finished();
  const Vec c1 = Vec::Constant(1, 0.4);
  const double omega = 0.7;

  const auto loss_of = [&](const ModelParams& p) {
    ad::Tape tape;
    BoundParams bp = bind_params(tape, p, false);
    ForwardVars fv = forward_tape(tape, bp, cfg, GraphBatch::build({aug}));
    ModelOutput out;
    out.int_logits = tape.value(fv.int_logits);
    out.cont_values = tape.value(fv.cont_values).col(0);
    return training_loss(out, d1, c1, s.t, omega);
  };

  // analytic gradients through the tape
  ad::Tape tape;
  BoundParams bp = bind_params(tape, params, true);
  ForwardVars fv = forward_tape(tape, bp, cfg, GraphBatch::build({aug}));
  Mat target(1, 1);
  target(0, 0) = c1[0];
  Vec w(1);
  w << 1.0 / (1.0 - s.t);
  ad::Var sse = ad::weighted_sse(fv.cont_values, target, w);
  ad::Var ce = ad::cross_entropy_rows(fv.int_logits, {d1[0]});
  ad::Var loss = ad::add(sse, ad::scale(ce, omega));
  EXPECT_NEAR(tape.value(loss)(0, 0), loss_of(params), 1e-10);
  tape.backward(loss);

  std::vector<Mat> analytic;
  visit_params(bp, [&](const std::string&, ad::Var& v) {
    analytic.push_back(tape.has_grad(v) ? tape.grad(v)
                                        : Mat::Zero(tape.value(v).rows(), tape.value(v).cols()));
  });

  const double h = 1e-4;
  std::size_t pi = 0;
  int checked = 0, failed = 0;
  visit_params(params, [&](const std::string& name, Mat& m) {
    const Mat& ga = analytic[pi++];
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      for (Eigen::Index j = 0; j < m.cols(); ++j) {
        const double orig = m(i, j);
        m(i, j) = orig + h;
        const double fp = loss_of(params);
        m(i, j) = orig - h;
        const double fm = loss_of(params);
        m(i, j) = orig;
        const double fd = (fp - fm) / (2 * h);
        ++checked;
        const double diff = std::abs(ga(i, j) - fd);
        if (diff > 1e-4 * std::max({1.0, std::abs(ga(i, j)), std::abs(fd)}) && diff > 1e-7) {
          ++failed;
          ADD_FAILURE() << name << "(" << i << "," << j << "): analytic " << ga(i, j)
                        << " vs fd " << fd;
        }
      }
  });
  EXPECT_GT(checked, 1000);
  EXPECT_EQ(failed, 0);
}

TEST(Gradients, OmegaZeroKillsDiscreteHead) {
  const MilpInstance inst = toy_instance();
  ModelConfig cfg;
  cfg.layers = 1;
  cfg.hidden = 4;
  cfg.int_categories = inst.int_bound + 1;
  ModelParams params = init_params(cfg, 4);
  const TripartiteGraph g = encode(inst);
  SolutionState s;
  s.d = VecI::Zero(1);
  s.c = Vec::Zero(1);
  s.t = 0.2;

  ad::Tape tape;
  BoundParams bp = bind_params(tape, params, true);
  ForwardVars fv = forward_tape(tape, bp, cfg, GraphBatch::build({attach_state(g, s)}));
  Mat target = Mat::Zero(1, 1);
  Vec w = Vec::Ones(1);
  ad::Var loss = ad::add(ad::weighted_sse(fv.cont_values, target, w),
                         ad::scale(ad::cross_entropy_rows(fv.int_logits, {1}), 0.0));
  tape.backward(loss);
  // the integer head receives exactly zero gradient
  const Mat gh = tape.has_grad(bp.head_int.l2.w) ? tape.grad(bp.head_int.l2.w) : Mat();
  if (gh.size() != 0) EXPECT_EQ(gh, Mat::Zero(gh.rows(), gh.cols()));
}
