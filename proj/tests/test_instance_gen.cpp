// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <set>

#include "fmip/backend.hpp"
#include "fmip/instance_gen.hpp"

using namespace fmip;

TEST(Generate, TwoNodeIndependentSet) {
  GenSpec spec;
  spec.family = Family::kIndepSet;
  spec.nodes = 2;
  spec.edge_prob = 0.999;  // force the single edge
  spec.seed = 1;
  const MilpInstance inst = generate(spec);
  ASSERT_EQ(inst.num_cons, 1);
  EXPECT_EQ(inst.num_vars, 2);
  EXPECT_EQ(inst.obj[0], -1.0);
  EXPECT_EQ(inst.obj[1], -1.0);
  ASSERT_EQ(inst.con_matrix.size(), 2u);
  EXPECT_DOUBLE_EQ(inst.rhs[0], 1.0);
}

TEST(Generate, DeterministicInSeed) {
  GenSpec spec;
  spec.family = Family::kSetCover;
  spec.rows = 12;
  spec.cols = 24;
  spec.density = 0.25;
  spec.seed = 99;
  EXPECT_EQ(serialize(generate(spec)), serialize(generate(spec)));
  spec.seed = 100;
  GenSpec other = spec;
  other.seed = 101;
  EXPECT_NE(serialize(generate(spec)), serialize(generate(other)));
}

TEST(Generate, SetCoverEveryRowCoverable) {
  GenSpec spec;
  spec.family = Family::kSetCover;
  spec.rows = 20;
  spec.cols = 40;
  spec.density = 0.2;
  spec.seed = 7;
  const MilpInstance inst = generate(spec);
  std::vector<int> nnz(inst.num_cons, 0);
  for (const Coef& c : inst.con_matrix) {
    EXPECT_DOUBLE_EQ(c.value, -1.0);  // coverage rows stored negated
    ++nnz[c.row];
  }
  for (int r = 0; r < inst.num_cons; ++r) EXPECT_GE(nnz[r], 1) << "row " << r;
  // the all-ones assignment covers everything
  EXPECT_TRUE(evaluate(inst, Vec::Ones(inst.num_vars)).feasible);
}

TEST(Generate, CombAuctionStructure) {
  GenSpec spec;
  spec.family = Family::kCombAuction;
  spec.items = 8;
  spec.bids = 14;
  spec.seed = 3;
  const MilpInstance inst = generate(spec);
  EXPECT_EQ(inst.num_vars, 14);
  EXPECT_EQ(inst.num_cons, 8);
  for (int j = 0; j < inst.num_vars; ++j) EXPECT_LT(inst.obj[j], 0.0);  // prices negated
  EXPECT_TRUE(evaluate(inst, Vec::Zero(inst.num_vars)).feasible);
}

TEST(Generate, RejectsBadSpecs) {
  GenSpec spec;
  spec.family = Family::kSetCover;
  spec.rows = 0;
  EXPECT_THROW(generate(spec), std::invalid_argument);
  spec.rows = 5;
  spec.density = 1.5;
  EXPECT_THROW(generate(spec), std::invalid_argument);
  spec.density = 0.05;
  spec.cols = 4;  // cols*density < 1: rows may be uncoverable by construction
  EXPECT_THROW(generate(spec), std::invalid_argument);
}

TEST(MakeMixed, ZeroFractionIsIdentity) {
  GenSpec spec;
  spec.family = Family::kIndepSet;
  spec.nodes = 10;
  spec.edge_prob = 0.3;
  spec.seed = 11;
  std::vector<int> perm;
  const MilpInstance mixed = make_mixed(spec, 0.0, &perm);
  EXPECT_EQ(serialize(mixed), serialize(generate(spec)));
  for (std::size_t i = 0; i < perm.size(); ++i) EXPECT_EQ(perm[i], static_cast<int>(i));
}

TEST(MakeMixed, IntegerCountMatchesCeil) {
  GenSpec spec;
  spec.family = Family::kIndepSet;
  spec.nodes = 10;
  spec.edge_prob = 0.3;
  spec.seed = 11;
  for (double frac : {0.1, 0.25, 0.5, 0.9}) {
    const MilpInstance mixed = make_mixed(spec, frac);
    const int expect = 10 - static_cast<int>(std::ceil(frac * 10));
    EXPECT_EQ(mixed.num_int, expect);
  }
}

TEST(MakeMixed, RelaxationPreservesLabelFeasibility) {
  GenSpec spec;
  spec.family = Family::kIndepSet;
  spec.nodes = 12;
  spec.edge_prob = 0.4;
  spec.seed = 5;
  const MilpInstance binary = generate(spec);
  const SolveResult solved = branch_and_bound(binary);
  ASSERT_TRUE(solved.assignment.has_value());

  std::vector<int> perm;
  const MilpInstance mixed = make_mixed(spec, 0.25, &perm);
  Vec permuted(binary.num_vars);
  for (int old = 0; old < binary.num_vars; ++old) permuted[perm[old]] = (*solved.assignment)[old];
  EXPECT_TRUE(evaluate(mixed, permuted).feasible);
}

TEST(LabelDataset, TwoNodeToyLabel) {
  GenSpec spec;
  spec.family = Family::kIndepSet;
  spec.nodes = 2;
  spec.edge_prob = 0.999;
  spec.seed = 1;
  const BnbBackend backend;
  const auto labeled = label_dataset({generate(spec)}, backend, 10.0);
  ASSERT_EQ(labeled.size(), 1u);
  EXPECT_NEAR(labeled[0].label_objective, -1.0, 1e-9);
  const Vec& x = labeled[0].label;
  EXPECT_NEAR(x[0] + x[1], 1.0, 1e-9);  // exactly one endpoint picked
}

TEST(LabelDataset, InfeasibleInstanceDropped) {
  MilpInstance bad;
  bad.name = "impossible";
  bad.num_vars = 1;
  bad.num_cons = 1;
  bad.num_int = 1;
  bad.int_bound = 1;
  bad.obj = Vec::Ones(1);
  bad.con_matrix = {{0, 0, -1.0}};
  bad.rhs = Vec::Constant(1, -2.0);
  bad.lower = Vec::Zero(1);
  bad.upper = Vec::Ones(1);
  const BnbBackend backend;
  GenSpec spec;
  spec.family = Family::kIndepSet;
  spec.nodes = 3;
  spec.edge_prob = 0.5;
  const auto labeled = label_dataset({bad, generate(spec)}, backend, 10.0);
  ASSERT_EQ(labeled.size(), 1u);
  EXPECT_NE(labeled[0].instance.name, "impossible");
}

TEST(LabelDataset, AllLabelsRecheckFeasible) {
  std::vector<MilpInstance> instances;
  for (std::uint64_t s = 1; s <= 6; ++s) {
    GenSpec spec;
    spec.family = s % 2 ? Family::kIndepSet : Family::kSetCover;
    spec.nodes = 8;
    spec.edge_prob = 0.35;
    spec.rows = 8;
    spec.cols = 16;
    spec.density = 0.3;
    spec.seed = s;
    instances.push_back(generate(spec));
  }
  const BnbBackend backend;
  const auto labeled = label_dataset(instances, backend, 30.0);
  EXPECT_EQ(labeled.size(), instances.size());
  for (const LabeledInstance& li : labeled) {
    EXPECT_TRUE(evaluate(li.instance, li.label).feasible);
    EXPECT_NEAR(evaluate(li.instance, li.label).objective, li.label_objective, 1e-9);
  }
}

TEST(DatasetIo, DirectoryRoundTrip) {
  GenSpec spec;
  spec.family = Family::kIndepSet;
  spec.nodes = 6;
  spec.edge_prob = 0.4;
  spec.seed = 2;
  const BnbBackend backend;
  const auto labeled = label_dataset({generate(spec)}, backend, 10.0);
  const auto dir = std::filesystem::temp_directory_path() / "fmip_test_dataset";
  std::filesystem::remove_all(dir);
  write_dataset(dir, labeled, {spec});
  const auto back = read_dataset(dir);
  ASSERT_EQ(back.size(), labeled.size());
  EXPECT_EQ(serialize(back[0].instance), serialize(labeled[0].instance));
  EXPECT_EQ(back[0].label, labeled[0].label);
  std::filesystem::remove_all(dir);
}
