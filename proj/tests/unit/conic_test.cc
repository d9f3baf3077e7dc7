// Copyright 2026 The dpcc Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "dpcc/conic.h"

#include <cmath>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "dpcc/error.h"
#include "lp_oracle.h"

namespace dpcc {
namespace {

TEST(ConicSolveTest, SingleLowerBound) {
  ConicProgram prog(1);
  prog.set_cost(0, 1.0);
  prog.add_inequality({{0, -1.0}}, -1.0);  // x >= 1
  const Solution sol = solve(prog);
  ASSERT_EQ(sol.status, SolveStatus::kOptimal);
  EXPECT_NEAR(sol.x(0), 1.0, 1e-7);
  EXPECT_NEAR(sol.objective, 1.0, 1e-7);
}

TEST(ConicSolveTest, ConeNormOfConstantVector) {
  ConicProgram prog(1);
  prog.set_cost(0, 1.0);
  SocConstraint cone;
  cone.lhs = {{}, {}};
  cone.lhs_const = {1.0, 1.0};
  cone.rhs = {{0, 1.0}};
  prog.add_soc(cone);
  const Solution sol = solve(prog);
  ASSERT_EQ(sol.status, SolveStatus::kOptimal);
  EXPECT_NEAR(sol.x(0), std::sqrt(2.0), 1e-7);
}

TEST(ConicSolveTest, LiftedParabolaVertex) {
  ConicProgram base(1);
  const ConicProgram lifted =
      lift_quadratic(Eigen::VectorXd::Constant(1, -2.0),
                     Eigen::VectorXd::Constant(1, 1.0), base);
  const Solution sol = solve(lifted);
  ASSERT_EQ(sol.status, SolveStatus::kOptimal);
  EXPECT_NEAR(sol.objective, -1.0, 1e-7);
  // A cone violation v allows an argmin error of order sqrt(v).
  EXPECT_NEAR(sol.x(0), 1.0, 1e-3);

  SolverOptions tight;
  tight.tol.feas = 1e-13;
  tight.tol.gap = 1e-13;
  const Solution precise = solve(lifted, tight);
  ASSERT_EQ(precise.status, SolveStatus::kOptimal);
  EXPECT_NEAR(precise.x(0), 1.0, 1e-5);
}

TEST(ConicSolveTest, DetectsInfeasibility) {
  ConicProgram prog(1);
  prog.set_cost(0, 1.0);
  prog.add_inequality({{0, -1.0}}, -1.0);  // x >= 1
  prog.add_inequality({{0, 1.0}}, 0.0);    // x <= 0
  EXPECT_EQ(solve(prog).status, SolveStatus::kInfeasible);
}

TEST(ConicSolveTest, DetectsInfeasibleEqualities) {
  ConicProgram prog(2);
  prog.add_equality({{0, 1.0}, {1, 1.0}}, 1.0);
  prog.add_equality({{0, 1.0}, {1, 1.0}}, 2.0);
  prog.add_inequality({{0, -1.0}}, 0.0);
  EXPECT_EQ(solve(prog).status, SolveStatus::kInfeasible);
}

TEST(ConicSolveTest, DetectsUnboundedness) {
  ConicProgram prog(1);
  prog.set_cost(0, 1.0);
  prog.add_inequality({{0, 1.0}}, 1.0);
  EXPECT_EQ(solve(prog).status, SolveStatus::kUnbounded);
}

TEST(ConicSolveTest, InfeasibleConeAgainstBound) {
  // ||x|| <= 1 and x0 >= 2.
  ConicProgram prog(2);
  SocConstraint cone;
  cone.lhs = {{{0, 1.0}}, {{1, 1.0}}};
  cone.rhs_const = 1.0;
  prog.add_soc(cone);
  prog.add_inequality({{0, -1.0}}, -2.0);
  EXPECT_EQ(solve(prog).status, SolveStatus::kInfeasible);
}

TEST(ConicSolveTest, RedundantEqualityRowsStillSolve) {
  ConicProgram prog(2);
  prog.set_cost(0, 1.0);
  prog.set_cost(1, 2.0);
  prog.add_equality({{0, 1.0}, {1, 1.0}}, 1.0);
  prog.add_equality({{0, 2.0}, {1, 2.0}}, 2.0);
  prog.add_inequality({{0, -1.0}}, 0.0);
  prog.add_inequality({{1, -1.0}}, 0.0);
  const Solution sol = solve(prog);
  ASSERT_EQ(sol.status, SolveStatus::kOptimal);
  EXPECT_NEAR(sol.x(0), 1.0, 1e-7);
  EXPECT_NEAR(sol.x(1), 0.0, 1e-7);
}

TEST(ConicSolveTest, PureFeasibilityProblem) {
  ConicProgram prog(3);
  prog.add_equality({{0, 1.0}, {1, 1.0}, {2, 1.0}}, 0.0);
  prog.add_equality({{0, 1.0}}, 1.0);
  const Solution sol = solve(prog);
  ASSERT_EQ(sol.status, SolveStatus::kOptimal);
  EXPECT_NEAR(sol.x(0), 1.0, 1e-8);
  EXPECT_NEAR(sol.x.sum(), 0.0, 1e-8);
}

TEST(ConicSolveTest, ConeActiveAtOrigin) {
  // min x0 + x1 s.t. ||(x0, x1)|| <= x2, x2 <= 0: only the origin is
  // feasible.
  ConicProgram prog(3);
  prog.set_cost(0, 1.0);
  prog.set_cost(1, 1.0);
  SocConstraint cone;
  cone.lhs = {{{0, 1.0}}, {{1, 1.0}}};
  cone.rhs = {{2, 1.0}};
  prog.add_soc(cone);
  prog.add_inequality({{2, 1.0}}, 0.0);
  const Solution sol = solve(prog);
  ASSERT_EQ(sol.status, SolveStatus::kOptimal);
  EXPECT_NEAR(sol.x.norm(), 0.0, 1e-6);
}

TEST(ConicSolveTest, InvalidVariableReferenceThrows) {
  ConicProgram prog(1);
  prog.add_inequality({{3, 1.0}}, 0.0);
  try {
    solve(prog);
    FAIL() << "expected an exception";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInvalidProgram);
  }
}

struct RandomLp {
  Eigen::VectorXd c;
  Eigen::MatrixXd A;
  Eigen::VectorXd b;
  Eigen::MatrixXd E;
  Eigen::VectorXd f;
};

// Bounded random LP: box [-2, 2]^n plus random cuts through a known interior
// point, plus at most one equality through that point.
RandomLp random_lp(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> nd(1, 4);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const int n = nd(rng);
  const int cuts = std::uniform_int_distribution<int>(0, 6 - std::min(6, 0))(rng) % 3;
  const int eqs = n > 1 ? std::uniform_int_distribution<int>(0, 1)(rng) : 0;
  RandomLp lp;
  Eigen::VectorXd center(n);
  for (int i = 0; i < n; ++i) center(i) = 0.5 * u(rng);
  lp.c.resize(n);
  for (int i = 0; i < n; ++i) lp.c(i) = u(rng);
  lp.A.resize(2 * n + cuts, n);
  lp.b.resize(2 * n + cuts);
  lp.A.setZero();
  for (int i = 0; i < n; ++i) {
    lp.A(2 * i, i) = 1.0;
    lp.b(2 * i) = 2.0;
    lp.A(2 * i + 1, i) = -1.0;
    lp.b(2 * i + 1) = 2.0;
  }
  for (int k = 0; k < cuts; ++k) {
    for (int i = 0; i < n; ++i) lp.A(2 * n + k, i) = u(rng);
    lp.b(2 * n + k) = lp.A.row(2 * n + k).dot(center) + 0.5 + 0.5 * (u(rng) + 1.0);
  }
  lp.E.resize(eqs, n);
  lp.f.resize(eqs);
  for (int k = 0; k < eqs; ++k) {
    for (int i = 0; i < n; ++i) lp.E(k, i) = u(rng);
    lp.f(k) = lp.E.row(k).dot(center);
  }
  return lp;
}

ConicProgram to_conic(const RandomLp& lp, double cost_scale = 1.0) {
  const int n = static_cast<int>(lp.c.size());
  ConicProgram prog(n);
  for (int i = 0; i < n; ++i) prog.set_cost(i, cost_scale * lp.c(i));
  for (int r = 0; r < lp.A.rows(); ++r) {
    LinearExpr e;
    for (int i = 0; i < n; ++i) {
      if (lp.A(r, i) != 0.0) e.push_back({i, lp.A(r, i)});
    }
    prog.add_inequality(e, lp.b(r));
  }
  for (int r = 0; r < lp.E.rows(); ++r) {
    LinearExpr e;
    for (int i = 0; i < n; ++i) e.push_back({i, lp.E(r, i)});
    prog.add_equality(e, lp.f(r));
  }
  return prog;
}

TEST(ConicSolveTest, RandomLpsMatchVertexEnumeration) {
  std::mt19937_64 rng(20260101);
  for (int trial = 0; trial < 200; ++trial) {
    const RandomLp lp = random_lp(rng);
    const testing::OracleResult oracle =
        testing::enumerate_vertices(lp.c, lp.A, lp.b, lp.E, lp.f);
    ASSERT_TRUE(oracle.feasible);
    const Solution sol = solve(to_conic(lp));
    ASSERT_EQ(sol.status, SolveStatus::kOptimal) << "trial " << trial;
    EXPECT_NEAR(sol.objective, oracle.objective, 1e-6) << "trial " << trial;
  }
}

TEST(ConicSolveTest, ArgminInvariantUnderCostScaling) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    const RandomLp lp = random_lp(rng);
    const Solution a = solve(to_conic(lp, 1.0));
    const Solution b = solve(to_conic(lp, 37.5));
    ASSERT_TRUE(a.optimal());
    ASSERT_TRUE(b.optimal());
    // Random costs give unique vertices almost surely.
    EXPECT_LE((a.x - b.x).lpNorm<Eigen::Infinity>(), 1e-6) << "trial " << trial;
  }
}

TEST(ConicSolveTest, WeakDualityGapWithinTolerance) {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 50; ++trial) {
    ConicProgram prog = to_conic(random_lp(rng));
    // Add a cone so the check covers SOC duals too.
    SocConstraint cone;
    cone.lhs = {{{0, 1.0}}};
    cone.rhs_const = 1.5;
    prog.add_soc(cone);
    const Solution sol = solve(prog);
    ASSERT_TRUE(sol.optimal()) << "trial " << trial << " "
                               << status_name(sol.status);
    EXPECT_LE(std::abs(sol.objective - sol.dual_objective),
              1e-8 * std::max(1.0, std::abs(sol.objective)));
    EXPECT_LE(sol.residuals.equality, 1e-8);
    EXPECT_LE(sol.residuals.inequality, 1e-8);
    EXPECT_LE(sol.residuals.cone, 1e-8);
  }
}

TEST(LiftQuadraticTest, ZeroQuadraticLeavesProgramLinear) {
  ConicProgram base(2);
  base.add_inequality({{0, -1.0}}, 0.0);
  const Eigen::Vector2d c1(1.0, 2.0);
  const ConicProgram lifted = lift_quadratic(c1, Eigen::Vector2d::Zero(), base);
  EXPECT_EQ(lifted.num_vars(), 2);
  EXPECT_TRUE(lifted.socs().empty());
  EXPECT_EQ(lifted.inequalities().size(), 1u);
  EXPECT_EQ(lifted.objective(), Eigen::VectorXd(c1));
}

TEST(LiftQuadraticTest, ZeroEntryGetsNoCone) {
  ConicProgram base(3);
  const ConicProgram lifted = lift_quadratic(
      Eigen::Vector3d(1, 1, 1), Eigen::Vector3d(0.5, 0.0, 2.0), base);
  ASSERT_EQ(lifted.socs().size(), 2u);
  for (const SocConstraint& cone : lifted.socs()) {
    for (const LinearExpr& row : cone.lhs) {
      for (const Term& t : row) EXPECT_NE(t.var, 1);
    }
  }
}

TEST(LiftQuadraticTest, MatchesOneDimensionalGrid) {
  for (double c1 : {-3.0, -0.5, 0.0, 1.25, 4.0}) {
    ConicProgram base(1);
    base.add_inequality({{0, 1.0}}, 1.0);   // x <= 1
    base.add_inequality({{0, -1.0}}, 3.0);  // x >= -3
    const ConicProgram lifted = lift_quadratic(Eigen::VectorXd::Constant(1, c1),
                                               Eigen::VectorXd::Constant(1, 1.0), base);
    const Solution sol = solve(lifted);
    ASSERT_TRUE(sol.optimal());
    double grid_best = std::numeric_limits<double>::infinity();
    for (int k = 0; k <= 400000; ++k) {
      const double x = -3.0 + 4.0 * k / 400000.0;
      grid_best = std::min(grid_best, x * x + c1 * x);
    }
    EXPECT_NEAR(sol.objective, grid_best, 1e-6) << "c1=" << c1;
  }
}

TEST(ConicDumpTest, WritesDocumentedRecords) {
  ConicProgram prog(2);
  prog.set_cost(1, 3.0);
  prog.add_equality({{0, 1.0}}, 2.0);
  prog.add_inequality({{1, -1.0}}, 0.5);
  SocConstraint cone;
  cone.lhs = {{{0, 1.0}}};
  cone.rhs = {{1, 1.0}};
  cone.rhs_const = 0.25;
  prog.add_soc(cone);
  std::ostringstream out;
  dump(prog, out);
  EXPECT_EQ(out.str(),
            "dpcc-conic 1\n"
            "vars 2\n"
            "offset 0\n"
            "cost 1 3\n"
            "eq 2 1 0 1\n"
            "le 0.5 1 1 -1\n"
            "soc 2 0.25 1 1 1\n"
            "socrow 0 1 0 1\n"
            "end\n");
}

}  // namespace
}  // namespace dpcc
