// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "fixtures.hpp"
#include "fmip/graph.hpp"

using namespace fmip;
using fmip::testing::toy_instance;

TEST(Encode, ToyPartitionAndEdges) {
  const TripartiteGraph g = encode(toy_instance(), /*normalize=*/false);
  EXPECT_EQ(g.ivar_feats.rows(), 1);
  EXPECT_EQ(g.cvar_feats.rows(), 1);
  EXPECT_EQ(g.con_feats.rows(), 2);
  EXPECT_EQ(g.edges_int.size() + g.edges_cont.size(), 4u);
  std::multiset<double> weights;
  for (const GraphEdge& e : g.edges_int) weights.insert(e.coef);
  for (const GraphEdge& e : g.edges_cont) weights.insert(e.coef);
  EXPECT_EQ(weights, (std::multiset<double>{1.0, 1.0, 1.0, 3.0}));
  // bound rows are features, not constraint nodes
  EXPECT_DOUBLE_EQ(g.ivar_feats(0, 2), 5.0);  // ub of x1
  EXPECT_DOUBLE_EQ(g.cvar_feats(0, 1), 0.0);  // lb of x2
  EXPECT_DOUBLE_EQ(g.cvar_feats(0, 2), 3.0);  // ub of x2
}

TEST(Encode, DegenerateNoConstraints) {
  MilpInstance inst;
  inst.name = "empty";
  inst.num_vars = 2;
  inst.num_cons = 0;
  inst.num_int = 1;
  inst.int_bound = 1;
  inst.obj = Vec::Ones(2);
  inst.rhs = Vec(0);
  inst.lower = Vec::Zero(2);
  inst.upper = Vec::Ones(2);
  const TripartiteGraph g = encode(inst);
  EXPECT_EQ(g.con_feats.rows(), 0);
  EXPECT_TRUE(g.edges_int.empty());
  EXPECT_TRUE(g.edges_cont.empty());
}

TEST(Encode, InfiniteBoundSentinel) {
  MilpInstance inst = toy_instance();
  inst.num_int = 0;
  inst.lower[0] = -kInf;
  const TripartiteGraph g = encode(inst, false);
  EXPECT_DOUBLE_EQ(g.cvar_feats(0, 1), 0.0);  // lb slot zeroed
  EXPECT_DOUBLE_EQ(g.cvar_feats(0, 3), 0.0);  // hlb = 0
  EXPECT_DOUBLE_EQ(g.cvar_feats(0, 4), 1.0);  // hub = 1
}

TEST(Encode, EdgeCountEqualsNonzeros) {
  const MilpInstance inst = fmip::testing::random_instance(9);
  const TripartiteGraph g = encode(inst);
  EXPECT_EQ(g.edges_int.size() + g.edges_cont.size(), inst.con_matrix.size());
}

TEST(Encode, InvariantToTripleOrder) {
  MilpInstance inst = toy_instance();
  MilpInstance shuffled = inst;
  std::reverse(shuffled.con_matrix.begin(), shuffled.con_matrix.end());
  const TripartiteGraph a = encode(inst);
  const TripartiteGraph b = encode(shuffled);
  EXPECT_EQ(a.ivar_feats, b.ivar_feats);
  EXPECT_EQ(a.con_feats, b.con_feats);
  ASSERT_EQ(a.edges_int.size(), b.edges_int.size());
  for (std::size_t i = 0; i < a.edges_int.size(); ++i) {
    EXPECT_EQ(a.edges_int[i].con, b.edges_int[i].con);
    EXPECT_EQ(a.edges_int[i].var, b.edges_int[i].var);
    EXPECT_EQ(a.edges_int[i].coef, b.edges_int[i].coef);
  }
}

TEST(Encode, NormalizationRecoversOriginal) {
  const MilpInstance inst = fmip::testing::random_instance(17);
  const TripartiteGraph g = encode(inst, /*normalize=*/true);
  // every row's max-abs edge weight is 1
  Vec row_max = Vec::Zero(inst.num_cons);
  const auto scan = [&](const std::vector<GraphEdge>& edges) {
    for (const GraphEdge& e : edges) row_max[e.con] = std::max(row_max[e.con], std::abs(e.coef));
  };
  scan(g.edges_int);
  scan(g.edges_cont);
  for (int r = 0; r < inst.num_cons; ++r)
    if (row_max[r] > 0.0) EXPECT_NEAR(row_max[r], 1.0, 1e-12);
  // un-scaling recovers A and b
  for (const GraphEdge& e : g.edges_int) {
    bool found = false;
    for (const Coef& c : inst.con_matrix)
      if (c.row == e.con && c.col == e.var) {
        EXPECT_NEAR(e.coef * g.scalers.row_scale[e.con], c.value, 1e-12);
        found = true;
      }
    EXPECT_TRUE(found);
  }
  for (int r = 0; r < inst.num_cons; ++r)
    EXPECT_NEAR(g.con_feats(r, 0) * g.scalers.row_scale[r], inst.rhs[r], 1e-12);
}

TEST(AttachState, WidthsAndIdentity) {
  const MilpInstance inst = toy_instance();
  const TripartiteGraph g = encode(inst);
  SolutionState s;
  s.d = VecI::Zero(1);
  s.d[0] = 3;
  s.c = Vec::Constant(1, 1.5);
  s.t = 0.25;
  const AugmentedGraph a = attach_state(g, s);
  EXPECT_EQ(a.ivar_feats.cols(), 6);
  EXPECT_EQ(a.cvar_feats.cols(), 6);
  EXPECT_EQ(g.con_feats.cols(), 1);  // constraint features unchanged
  EXPECT_DOUBLE_EQ(a.ivar_feats(0, 5), 3.0);
  EXPECT_DOUBLE_EQ(a.cvar_feats(0, 5), 1.5);
  EXPECT_DOUBLE_EQ(a.t, 0.25);
}

TEST(AttachState, ZeroStateZeroColumn) {
  const TripartiteGraph g = encode(toy_instance());
  SolutionState s;
  s.d = VecI::Zero(1);
  s.c = Vec::Zero(1);
  s.t = 0.0;
  const AugmentedGraph a = attach_state(g, s);
  EXPECT_DOUBLE_EQ(a.ivar_feats(0, 5), 0.0);
  EXPECT_DOUBLE_EQ(a.cvar_feats(0, 5), 0.0);
}

TEST(AttachState, DimensionMismatchThrows) {
  const TripartiteGraph g = encode(toy_instance());
  SolutionState s;
  s.d = VecI::Zero(2);  // wrong: toy has one integer variable
  s.c = Vec::Zero(1);
  EXPECT_THROW(attach_state(g, s), std::invalid_argument);
}

TEST(GraphBatch, OffsetsAndEdgeRebasing) {
  const MilpInstance inst = toy_instance();
  const TripartiteGraph g = encode(inst);
  SolutionState s;
  s.d = VecI::Zero(1);
  s.c = Vec::Zero(1);
  s.t = 0.5;
  const AugmentedGraph a = attach_state(g, s);
  const GraphBatch batch = GraphBatch::build({a, a, a});
  EXPECT_EQ(batch.ivar_x.rows(), 3);
  EXPECT_EQ(batch.cvar_x.rows(), 3);
  EXPECT_EQ(batch.con_x.rows(), 6);
  EXPECT_EQ(batch.edges_int.size(), 3 * g.edges_int.size());
  // second copy's edges point at the second copy's nodes
  EXPECT_EQ(batch.edges_int[g.edges_int.size()].con, g.edges_int[0].con + 2);
  EXPECT_EQ(batch.ivar_item[1], 1);
  EXPECT_EQ(batch.con_item[3], 1);
}
