// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "fmip/milp.hpp"
#include "fmip/rng.hpp"

using namespace fmip;
using fmip::testing::toy_instance;

TEST(Evaluate, ToyFeasiblePoint) {
  const MilpInstance inst = toy_instance();
  Vec x(2);
  x << 0.0, 1.0;
  const EvalReport rep = evaluate(inst, x);
  EXPECT_DOUBLE_EQ(rep.objective, 1.0);
  EXPECT_DOUBLE_EQ(rep.violations[0], 0.0);
  EXPECT_DOUBLE_EQ(rep.violations[1], 0.0);
  EXPECT_TRUE(rep.feasible);
}

TEST(Evaluate, ZeroVectorWithNonnegativeRhs) {
  const MilpInstance inst = toy_instance();
  const EvalReport rep = evaluate(inst, Vec::Zero(2));
  EXPECT_DOUBLE_EQ(rep.objective, 0.0);
  EXPECT_DOUBLE_EQ(rep.max_violation, 0.0);
  EXPECT_TRUE(rep.feasible);
}

TEST(Evaluate, ToyInfeasiblePoint) {
  const MilpInstance inst = toy_instance();
  Vec x(2);
  x << 1.0, 1.0;
  const EvalReport rep = evaluate(inst, x);
  EXPECT_DOUBLE_EQ(rep.objective, 5.0);
  EXPECT_DOUBLE_EQ(rep.violations[0], 3.0);
  EXPECT_DOUBLE_EQ(rep.violations[1], 0.0);
  EXPECT_FALSE(rep.feasible);
}

TEST(Evaluate, LengthMismatchThrows) {
  EXPECT_THROW(evaluate(toy_instance(), Vec::Zero(3)), std::invalid_argument);
}

TEST(TargetF, FeasiblePenaltyVanishes) {
  const MilpInstance inst = toy_instance();
  Vec x(2);
  x << 0.0, 1.0;
  EXPECT_DOUBLE_EQ(target_f(inst, x, 1.0), 1.0);
}

TEST(TargetF, ViolationSquaredPenalty) {
  const MilpInstance inst = toy_instance();
  Vec x(2);
  x << 1.0, 1.0;
  EXPECT_DOUBLE_EQ(target_f(inst, x, 1.0), 5.0 + 9.0);
}

TEST(TargetF, GammaZeroEqualsObjective) {
  const MilpInstance inst = toy_instance();
  Rng rng(7);
  for (int k = 0; k < 10; ++k) {
    Vec x(2);
    x << rng.uniform() * 6 - 1, rng.uniform() * 6 - 1;
    EXPECT_DOUBLE_EQ(target_f(inst, x, 0.0), evaluate(inst, x).objective);
  }
}

TEST(TargetF, MonotoneInGammaWhenInfeasible) {
  const MilpInstance inst = toy_instance();
  Vec x(2);
  x << 1.0, 1.0;  // violated
  double prev = target_f(inst, x, 0.0);
  for (double g : {0.5, 1.0, 2.0, 8.0}) {
    const double cur = target_f(inst, x, g);
    EXPECT_GT(cur, prev);
    prev = cur;
  }
  Vec feas(2);
  feas << 0.0, 1.0;
  EXPECT_DOUBLE_EQ(target_f(inst, feas, 0.0), target_f(inst, feas, 100.0));
}

TEST(TargetGrad, FeasibleInteriorEqualsObjCoef) {
  const MilpInstance inst = toy_instance();
  Vec x(2);
  x << 0.0, 0.5;  // strict interior
  const Vec g = target_grad_continuous(inst, x, 3.0);
  ASSERT_EQ(g.size(), 1);
  EXPECT_DOUBLE_EQ(g[0], 1.0);
}

TEST(TargetGrad, SingleViolatedConstraintClosedForm) {
  // one constraint a*c <= b with violation v, one continuous variable
  MilpInstance inst;
  inst.name = "single";
  inst.num_vars = 1;
  inst.num_cons = 1;
  inst.num_int = 0;
  inst.obj = Vec(1);
  inst.obj << 2.0;
  inst.con_matrix = {{0, 0, 3.0}};
  inst.rhs = Vec(1);
  inst.rhs << 1.0;
  inst.lower = Vec::Constant(1, -kInf);
  inst.upper = Vec::Constant(1, kInf);
  validate(inst);
  Vec x(1);
  x << 2.0;  // activity 6, violation 5
  const double gamma = 0.7;
  const Vec g = target_grad_continuous(inst, x, gamma);
  EXPECT_DOUBLE_EQ(g[0], 2.0 + 2.0 * gamma * 5.0 * 3.0);
}

TEST(TargetGrad, MatchesFiniteDifferences) {
  const MilpInstance inst = toy_instance();
  Rng rng(42);
  const double gamma = 2.5;
  const double h = 1e-6;
  for (int trial = 0; trial < 5; ++trial) {
    Vec x(2);
    x << rng.uniform() * 4 - 1, rng.uniform() * 4 - 1;
    const Vec g = target_grad_continuous(inst, x, gamma);
    for (int i = 0; i < 1; ++i) {
      Vec xp = x, xm = x;
      xp[1 + i] += h;
      xm[1 + i] -= h;
      const double fd = (target_f(inst, xp, gamma) - target_f(inst, xm, gamma)) / (2 * h);
      EXPECT_NEAR(g[i], fd, 1e-5 * std::max(1.0, std::abs(fd)));
    }
  }
}

TEST(ProjectBounds, IdentityWhenInside) {
  const MilpInstance inst = toy_instance();
  Vec x(2);
  x << 2.0, 1.5;
  EXPECT_EQ(project_bounds(inst, x, false), x);
}

TEST(ProjectBounds, RoundThenClamp) {
  const MilpInstance inst = toy_instance();
  Vec x(2);
  x << 7.3, -2.1;
  const Vec p = project_bounds(inst, x, true);
  EXPECT_DOUBLE_EQ(p[0], 5.0);  // round 7.3 -> 7, clamp to ub 5
  EXPECT_DOUBLE_EQ(p[1], 0.0);  // continuous clamp to lb
}

TEST(ProjectBounds, TiesToEven) {
  MilpInstance inst = toy_instance();
  Vec x(2);
  x << 2.5, 0.0;
  EXPECT_DOUBLE_EQ(project_bounds(inst, x, true)[0], 2.0);
  x << 3.5, 0.0;
  EXPECT_DOUBLE_EQ(project_bounds(inst, x, true)[0], 4.0);
}

TEST(ProjectBounds, Idempotent) {
  const MilpInstance inst = toy_instance();
  Rng rng(3);
  for (int k = 0; k < 20; ++k) {
    Vec x(2);
    x << rng.uniform() * 20 - 10, rng.uniform() * 20 - 10;
    const Vec once = project_bounds(inst, x, true);
    EXPECT_EQ(project_bounds(inst, once, true), once);
  }
}

TEST(Serialize, ToyRoundTrip) {
  const MilpInstance inst = toy_instance();
  const std::string text = serialize(inst);
  const MilpInstance back = parse(text);
  EXPECT_EQ(back.name, inst.name);
  EXPECT_EQ(back.num_vars, inst.num_vars);
  EXPECT_EQ(back.num_int, inst.num_int);
  EXPECT_EQ(back.int_bound, inst.int_bound);
  EXPECT_EQ(back.obj, inst.obj);
  EXPECT_EQ(back.rhs, inst.rhs);
  EXPECT_EQ(back.lower, inst.lower);
  EXPECT_EQ(back.upper, inst.upper);
  ASSERT_EQ(back.con_matrix.size(), inst.con_matrix.size());
  for (std::size_t i = 0; i < inst.con_matrix.size(); ++i) {
    EXPECT_EQ(back.con_matrix[i].row, inst.con_matrix[i].row);
    EXPECT_EQ(back.con_matrix[i].col, inst.con_matrix[i].col);
    EXPECT_EQ(back.con_matrix[i].value, inst.con_matrix[i].value);
  }
  EXPECT_EQ(serialize(back), text);
}

TEST(Serialize, InfiniteBoundsUseLiterals) {
  MilpInstance inst = toy_instance();
  inst.num_int = 0;  // integers must stay bounded, so drop integrality
  inst.lower[0] = -kInf;
  inst.upper[1] = kInf;
  const std::string text = serialize(inst);
  EXPECT_NE(text.find("\"-inf\""), std::string::npos);
  EXPECT_NE(text.find("\"inf\""), std::string::npos);
  const MilpInstance back = parse(text);
  EXPECT_EQ(back.lower[0], -kInf);
  EXPECT_EQ(back.upper[1], kInf);
}

TEST(Serialize, EmptyConstraintInstanceRoundTrips) {
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
  const MilpInstance back = parse(serialize(inst));
  EXPECT_EQ(back.num_cons, 0);
  EXPECT_EQ(back.obj, inst.obj);
}

TEST(Parse, RejectsBoundInversion) {
  MilpInstance inst = toy_instance();
  std::string text = serialize(inst);
  // lower[1] > upper[1]
  nlohmann::json j = nlohmann::json::parse(text);
  j["lower"][1] = 9.0;
  EXPECT_THROW(parse(j.dump()), ParseError);
  try {
    parse(j.dump());
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("bounds"), std::string::npos);
  }
}

TEST(Parse, RejectsDuplicateCoordinates) {
  nlohmann::json j = nlohmann::json::parse(serialize(toy_instance()));
  j["A"].push_back({0, 0, 1.0});
  EXPECT_THROW(parse(j.dump()), ParseError);
}

TEST(Parse, NamesMissingField) {
  nlohmann::json j = nlohmann::json::parse(serialize(toy_instance()));
  j.erase("obj");
  try {
    parse(j.dump());
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("obj"), std::string::npos);
  }
}

TEST(AssignmentFile, RoundTrip) {
  Vec x(3);
  x << 1.0, 0.25, -3.5;
  double obj = 0.0;
  const Vec back = parse_assignment(serialize_assignment(x, 7.5), &obj);
  EXPECT_EQ(back, x);
  EXPECT_DOUBLE_EQ(obj, 7.5);
}
