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


#include "dpcc/bench.h"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <string>

#include <gtest/gtest.h>

#include "dpcc/error.h"

namespace dpcc {
namespace {

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::kUsageError;
}

std::string fixture(const std::string& name) {
  return std::string(DPCC_FIXTURE_DIR) + "/" + name;
}

ConvexProgram load_program(const std::string& name) {
  return build_program(load_case(fixture(name))).program;
}

// z0 + z1 = 1, |z0| <= 1, |z1| <= 5; maximizing z0 binds the first row.
ConvexProgram two_var_toy() {
  ConvexProgram p;
  p.c1 = Eigen::Vector2d(-1.0, 0.0);
  p.c2 = Eigen::Vector2d::Zero();
  p.A = Eigen::MatrixXd(4, 2);
  p.A << 1, 0, -1, 0, 0, 1, 0, -1;
  p.b = Eigen::Vector4d(1, 1, 5, 5);
  p.G = Eigen::RowVector2d(1, 1);
  p.d = Eigen::VectorXd::Constant(1, 1.0);
  return p;
}

TEST(EmpiricalViolationTest, ZeroRecourseStrictlyFeasible) {
  const ConvexProgram p = two_var_toy();
  Recourse r;
  r.z_tilde = Eigen::Vector2d(0.5, 0.5);
  r.Z = Eigen::MatrixXd::Zero(2, 2);
  r.noise = make_noise(NoiseKind::kLaplace, 1.0, 2);
  EXPECT_EQ(empirical_violation(r, p, 1000, 3), 0.0);
}

TEST(EmpiricalViolationTest, ReproduciblePerSeed) {
  const ConvexProgram p = two_var_toy();
  FeasibilitySpec feas;
  feas.eta = 0.1;
  const Recourse r = solve_recourse(p, QuerySpec::identity({0}),
                                    make_noise(NoiseKind::kLaplace, 0.1, 2), feas, {});
  const double a = empirical_violation(r, p, 5000, 8);
  const double b = empirical_violation(r, p, 5000, 8);
  EXPECT_EQ(a, b);
  EXPECT_NE(a, empirical_violation(r, p, 5000, 9));
}

TEST(EmpiricalViolationTest, MatchesLaplaceCdf) {
  const ConvexProgram p = two_var_toy();
  const double lambda = 0.1;
  FeasibilitySpec feas;
  feas.eta_bar = {0.1, 0.1, 0.1, 0.1};
  const Recourse r = solve_recourse(p, QuerySpec::identity({0}),
                                    make_noise(NoiseKind::kLaplace, lambda, 2), feas, {});
  // Only the first row can fail: its slack is f * sqrt(2) * lambda.
  const double slack = p.b(0) - r.z_tilde(0);
  const double exact = 0.5 * std::exp(-slack / lambda);
  EXPECT_NEAR(slack, std::sqrt(2.0 / 0.9) * std::sqrt(2.0) * lambda, 1e-7);
  const int n = 10000;
  const double rate = empirical_violation(r, p, n, 21);
  EXPECT_LT(std::abs(rate - exact), 3.0 * std::sqrt(0.1 * 0.9 / n));
}

TEST(OptimalityLossTest, BaseSolutionHasZeroLoss) {
  ConvexProgram p = load_program("case3.m");
  p.c2.setZero();
  const BaseSolution base = solve_base(p);
  Recourse r;
  r.z_tilde = base.z;
  r.Z = Eigen::MatrixXd::Zero(p.n(), p.n());
  r.noise = make_noise(NoiseKind::kLaplace, 0.1, p.n());
  EXPECT_NEAR(optimality_loss(r, p), 0.0, 1e-9);
}

TEST(OptimalityLossTest, DegenerateBase) {
  ConvexProgram p = two_var_toy();
  p.c1.setZero();
  Recourse r;
  r.z_tilde = Eigen::Vector2d(0.5, 0.5);
  r.Z = Eigen::MatrixXd::Zero(2, 2);
  r.noise = make_noise(NoiseKind::kLaplace, 0.1, 2);
  EXPECT_EQ(code_of([&] { optimality_loss(r, p); }), ErrorCode::kDegenerateBase);
}

TEST(OptimalityLossTest, NonNegativeAndScenarioAboveAnalyticOnFixtures) {
  for (const char* name : {"case3.m", "case5.m"}) {
    const ConvexProgram p = load_program(name);
    const NoiseSpec noise = make_noise(NoiseKind::kLaplace, 0.1, p.n());
    FeasibilitySpec a;
    FeasibilitySpec s;
    s.mode = ReformMode::kScenario;
    s.seed = 5;
    const QuerySpec q = QuerySpec::identity({0});
    const double la = optimality_loss(solve_recourse(p, q, noise, a, {}), p);
    const double ls = optimality_loss(solve_recourse(p, q, noise, s, {}), p);
    EXPECT_GE(la, -1e-9) << name;
    EXPECT_GE(ls, la - 1e-9) << name;
  }
}

TEST(OpViolationTest, NegligibleNoiseNeverFails) {
  const ConvexProgram p = load_program("case5.m");
  const BaseSolution base = solve_base(p);
  const QuerySpec q = QuerySpec::identity({0, 1});
  EXPECT_EQ(op_violation(p, q, base.z, make_noise(NoiseKind::kLaplace, 1e-14, 2), 50, 1), 0.0);
}

TEST(ParseTest, Queries) {
  const QuerySpec id = parse_query("identity:0,2");
  EXPECT_EQ(id.kind, QueryKind::kIdentity);
  EXPECT_EQ(id.released, (std::vector<int>{0, 2}));
  const QuerySpec s = parse_query("sum:0,1|2,3");
  EXPECT_EQ(s.kind, QueryKind::kSum);
  ASSERT_EQ(s.groups.size(), 2u);
  EXPECT_EQ(s.groups[1], (std::vector<int>{2, 3}));
  for (const char* bad : {"", "identity", "identity:", "ident:1", "sum:1||2", "identity:a"}) {
    EXPECT_EQ(code_of([&] { parse_query(bad); }), ErrorCode::kUsageError) << bad;
  }
}

TEST(ParseTest, Grids) {
  const auto g = parse_grid("0:1:0.1");
  ASSERT_EQ(g.size(), 11u);
  EXPECT_DOUBLE_EQ(g.front(), 0.0);
  EXPECT_NEAR(g.back(), 1.0, 1e-12);
  EXPECT_EQ(parse_grid("0.5"), (std::vector<double>{0.5}));
  EXPECT_EQ(code_of([] { parse_grid("0:1:0"); }), ErrorCode::kUsageError);
  EXPECT_EQ(code_of([] { parse_grid("x"); }), ErrorCode::kUsageError);
}

TEST(SubsetTest, SizeSortedAndDeterministic) {
  std::vector<int> pool(20);
  std::iota(pool.begin(), pool.end(), 0);
  const auto a = sample_subset(pool, 0.3, 4);
  EXPECT_EQ(a.size(), 6u);
  EXPECT_TRUE(std::is_sorted(a.begin(), a.end()));
  EXPECT_EQ(std::adjacent_find(a.begin(), a.end()), a.end());
  EXPECT_EQ(a, sample_subset(pool, 0.3, 4));
  EXPECT_EQ(sample_subset({7, 8, 9}, 0.1, 1).size(), 1u);
}

TEST(SubsetTest, UniformInclusion) {
  std::vector<int> pool(10);
  std::iota(pool.begin(), pool.end(), 0);
  std::vector<int> hits(10, 0);
  const int trials = 20000;
  for (int t = 0; t < trials; ++t) {
    for (int i : sample_subset(pool, 0.3, static_cast<std::uint64_t>(t))) ++hits[i];
  }
  // Each index is included with probability 0.3.
  const double se = std::sqrt(0.3 * 0.7 / trials);
  for (int h : hits) EXPECT_LT(std::abs(double(h) / trials - 0.3), 4.0 * se);
}

TEST(PartitionTest, NearEqualContiguousGroups) {
  const auto g = partition({1, 4, 5, 8, 9, 12, 13}, 3);
  ASSERT_EQ(g.size(), 3u);
  std::vector<int> flat;
  for (const auto& grp : g) {
    EXPECT_GE(grp.size(), 2u);
    EXPECT_LE(grp.size(), 3u);
    flat.insert(flat.end(), grp.begin(), grp.end());
  }
  EXPECT_EQ(flat, (std::vector<int>{1, 4, 5, 8, 9, 12, 13}));
  EXPECT_EQ(code_of([] { partition({1, 2}, 3); }), ErrorCode::kInvalidQuery);
  EXPECT_EQ(code_of([] { partition({1, 2}, 0); }), ErrorCode::kInvalidQuery);
}

TEST(BenchConfigTest, ParsesAndRejectsUnknownKeys) {
  const BenchConfig c = parse_bench_config(R"({"case": "x.m", "runs": 3, "kind": "sum",
      "groups": 2, "mechanisms": ["op", "analytic"], "phi": "0:1:0.5", "seed": 9})");
  EXPECT_EQ(c.case_path, "x.m");
  EXPECT_EQ(c.runs, 3);
  EXPECT_EQ(c.query_kind, QueryKind::kSum);
  EXPECT_EQ(c.groups, 2);
  EXPECT_TRUE(c.run_op);
  EXPECT_TRUE(c.run_analytic);
  EXPECT_FALSE(c.run_scenario);
  EXPECT_EQ(c.phi_grid.size(), 3u);
  EXPECT_EQ(c.seed, 9u);
  EXPECT_EQ(code_of([] { parse_bench_config(R"({"case": "x.m", "colour": 1})"); }),
            ErrorCode::kParseError);
  EXPECT_EQ(code_of([] { parse_bench_config("{"); }), ErrorCode::kParseError);
}

TEST(BenchConfigTest, ValidationRanges) {
  BenchConfig c;
  c.case_path = "x.m";
  EXPECT_NO_THROW(validate_bench(c));
  c.fraction = 1.0;
  EXPECT_THROW(validate_bench(c), Error);
  c.fraction = 0.3;
  c.runs = 0;
  EXPECT_THROW(validate_bench(c), Error);
  c.runs = 1;
  c.oos_samples = 0;
  EXPECT_THROW(validate_bench(c), Error);
}

BenchConfig small_bench(const std::string& name) {
  BenchConfig c;
  c.case_path = fixture(name);
  c.privacy.epsilon = 1.0;
  c.privacy.alpha = 0.1;
  c.runs = 3;
  c.oos_samples = 200;
  c.seed = 12;
  return c;
}

TEST(RunBenchTest, CsvIsByteReproducible) {
  BenchConfig c = small_bench("case3.m");
  c.runs = 2;
  const BenchResult a = run_bench(c);
  const BenchResult b = run_bench(c);
  EXPECT_EQ(bench_csv(a), bench_csv(b));
  EXPECT_EQ(runs_csv(a), runs_csv(b));
  EXPECT_EQ(bench_csv(a).substr(0, bench_csv(a).find('\n')),
            "mechanism,runs,failed,violation_mean,violation_std,violation_within_std,"
            "loss_mean,loss_std");
  EXPECT_EQ(runs_csv(a).substr(0, runs_csv(a).find('\n')), "run,mechanism,ok,violation,loss,error");
  ASSERT_EQ(a.rows.size(), 3u);
  EXPECT_EQ(a.rows[0].mechanism, "OP");
  EXPECT_EQ(a.rows[1].mechanism, "PIQ-a");
  EXPECT_EQ(a.rows[2].mechanism, "PIQ-s");
}

TEST(RunBenchTest, AggregatesEqualPerRunMeans) {
  const BenchResult res = run_bench(small_bench("case5.m"));
  for (const BenchRow& row : res.rows) {
    std::vector<double> v, l;
    for (const RunRecord& r : res.records) {
      if (r.mechanism != row.mechanism || !r.ok) continue;
      v.push_back(r.violation);
      if (!std::isnan(r.loss)) l.push_back(r.loss);
    }
    ASSERT_EQ(static_cast<int>(v.size()), row.completed);
    const double vm = std::accumulate(v.begin(), v.end(), 0.0) / v.size();
    EXPECT_NEAR(row.violation_mean, vm, 1e-12);
    EXPECT_NEAR(row.violation_std, sample_std(v), 1e-12);
    EXPECT_GE(row.violation_std, 0.0);
    EXPECT_GE(row.violation_mean, 0.0);
    EXPECT_LE(row.violation_mean, 100.0);
    if (!l.empty()) {
      EXPECT_NEAR(row.loss_mean, std::accumulate(l.begin(), l.end(), 0.0) / l.size(), 1e-12);
    }
  }
}

// One aggregated statistic on the largest fixture at the sum-query alpha:
// every mechanism completes every run and stays inside the budget.
TEST(RunBenchTest, SingleSumGroupIsAccommodated) {
  BenchConfig c = small_bench("case30.json");
  c.query_kind = QueryKind::kSum;
  c.groups = 1;
  c.privacy.alpha = 0.5;
  const BenchResult res = run_bench(c);
  ASSERT_EQ(res.rows.size(), 3u);
  EXPECT_EQ(res.rows[1].mechanism, "PSQ-a");
  EXPECT_EQ(res.rows[2].mechanism, "PSQ-s");
  for (const BenchRow& row : res.rows) {
    EXPECT_EQ(row.failed, 0) << row.mechanism;
    EXPECT_EQ(row.completed, c.runs) << row.mechanism;
    EXPECT_LE(row.violation_mean, 100.0 * c.eta) << row.mechanism;
  }
}

TEST(SampleStdTest, Values) {
  EXPECT_DOUBLE_EQ(sample_std({1.0, 3.0}), std::sqrt(2.0));
  EXPECT_EQ(sample_std({4.0}), 0.0);
}

}  // namespace
}  // namespace dpcc
