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


#include "dpcc/network.h"

#include <cmath>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "dpcc/error.h"
#include "lp_oracle.h"

namespace dpcc {
namespace {

std::string fixture(const std::string& name) {
  return std::string(DPCC_FIXTURE_DIR) + "/" + name;
}

std::string read_text(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::kUsageError;
}

NetworkCase triangle(Eigen::Vector3d c1 = Eigen::Vector3d(3, 1, 2)) {
  NetworkCase net;
  net.name = "triangle";
  net.nodes = 3;
  net.edges = {{0, 1, 1.0}, {1, 2, 1.0}, {0, 2, 1.0}};
  net.p_min = Eigen::Vector3d::Zero();
  net.p_max = Eigen::Vector3d::Constant(10.0);
  net.c1 = c1;
  net.c2 = Eigen::Vector3d::Zero();
  net.demand = Eigen::Vector3d(0.5, 0.6, 0.7);
  return net;
}

TEST(ParseCaseTest, MatpowerThreeBus) {
  const NetworkCase net = load_case(fixture("case3.m"));
  EXPECT_EQ(net.nodes, 3);
  ASSERT_EQ(net.edges.size(), 3u);
  // Per unit on a 100 MVA base.
  EXPECT_NEAR(net.demand(1), 0.6, 1e-12);
  EXPECT_NEAR(net.p_max(0), 2.0, 1e-12);
  EXPECT_NEAR(net.edges[0].beta, 10.0, 1e-12);
  EXPECT_NEAR(net.edges[2].beta, 4.0, 1e-12);
  EXPECT_NEAR(net.edges[0].f_max, 2.5, 1e-12);
  EXPECT_NEAR(net.c1(0), 1.5, 1e-12);
  EXPECT_NEAR(net.c2(0), 0.2, 1e-12);
  EXPECT_EQ(net.supply_nodes(), (std::vector<int>{0, 1, 2}));
}

TEST(ParseCaseTest, JsonRoundTrip) {
  for (const char* name : {"case3.m", "case5.m", "case14.m", "case30.json"}) {
    const NetworkCase net = load_case(fixture(name));
    const std::string once = to_json(net);
    const NetworkCase back = parse_case(once, CaseFormat::kJson);
    EXPECT_EQ(to_json(back), once) << name;
    EXPECT_EQ(back.nodes, net.nodes);
    EXPECT_EQ(back.demand, net.demand);
    EXPECT_EQ(back.edges.size(), net.edges.size());
  }
}

TEST(ParseCaseTest, ZeroReactanceIsParseError) {
  std::string text = read_text(fixture("case3.m"));
  const std::string from = "1\t2\t0\t0.1\t";
  const auto pos = text.find(from);
  ASSERT_NE(pos, std::string::npos);
  text.replace(pos, from.size(), "1\t2\t0\t0\t");
  EXPECT_EQ(code_of([&] { parse_case(text, CaseFormat::kMatpower); }),
            ErrorCode::kParseError);
}

TEST(ParseCaseTest, MalformedInputs) {
  EXPECT_EQ(code_of([] { parse_case("{\"nodes\": 2", CaseFormat::kJson); }),
            ErrorCode::kParseError);
  EXPECT_EQ(code_of([] { parse_case("[1, 2]", CaseFormat::kJson); }), ErrorCode::kParseError);
  EXPECT_EQ(code_of([] { load_case(fixture("missing.m")); }), ErrorCode::kParseError);
}

TEST(ParseCaseTest, DisconnectedGraph) {
  NetworkCase net = triangle();
  net.edges = {{0, 1, 1.0}};
  EXPECT_EQ(code_of([&] { validate_case(net); }), ErrorCode::kConnectivityError);
  EXPECT_EQ(code_of([&] { parse_case(to_json(net), CaseFormat::kJson); }),
            ErrorCode::kConnectivityError);
}

TEST(ParseCaseTest, FormatNames) {
  EXPECT_EQ(guess_case_format("a/b/case.json"), CaseFormat::kJson);
  EXPECT_EQ(guess_case_format("case.m"), CaseFormat::kMatpower);
  EXPECT_EQ(parse_case_format("json"), CaseFormat::kJson);
}

TEST(LaplacianTest, Triangle) {
  Eigen::Matrix3d expected;
  expected << 2, -1, -1, -1, 2, -1, -1, -1, 2;
  EXPECT_EQ(laplacian(triangle()), Eigen::MatrixXd(expected));
}

TEST(LaplacianTest, RowSumsVanishAndRankIsNMinusOne) {
  for (const char* name : {"case3.m", "case5.m", "case14.m", "case30.json"}) {
    const NetworkCase net = load_case(fixture(name));
    const Eigen::MatrixXd B = laplacian(net);
    EXPECT_LT((B * Eigen::VectorXd::Ones(net.nodes)).lpNorm<Eigen::Infinity>(), 1e-12) << name;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(B);
    lu.setThreshold(1e-10);
    EXPECT_EQ(lu.rank(), net.nodes - 1) << name;
  }
}

TEST(LaplacianTest, FlowReconstruction) {
  const NetworkCase net = load_case(fixture("case14.m"));
  const Eigen::MatrixXd B = laplacian(net);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::VectorXd theta(net.nodes);
    for (int i = 0; i < net.nodes; ++i) theta(i) = g(rng);
    Eigen::VectorXd outflow = Eigen::VectorXd::Zero(net.nodes);
    for (const Edge& e : net.edges) {
      const double f = e.beta * (theta(e.from) - theta(e.to));
      outflow(e.from) += f;
      outflow(e.to) -= f;
    }
    EXPECT_LT((B * theta - outflow).lpNorm<Eigen::Infinity>(), 1e-10);
  }
}

TEST(BuildProgramTest, ProgramsAreValidAndBalanced) {
  for (const char* name : {"case3.m", "case5.m", "case14.m", "case30.json"}) {
    const NetworkCase net = load_case(fixture(name));
    const AllocationProgram ap = build_program(net);
    EXPECT_TRUE(validate_program(ap.program).valid()) << name;
    EXPECT_EQ(ap.program.n(), 2 * net.nodes);
    // Summing the balance rows leaves exactly the supply total.
    Eigen::RowVectorXd sum = ap.program.G.topRows(net.nodes).colwise().sum();
    for (int i = 0; i < net.nodes; ++i) EXPECT_NEAR(sum(ap.p_index(i)), 1.0, 1e-12);
    for (int i = 0; i < net.nodes; ++i) EXPECT_NEAR(sum(ap.theta_index(i)), 0.0, 1e-10);
    const BaseSolution s = solve_base(ap.program);
    ASSERT_EQ(s.status, SolveStatus::kOptimal) << name;
    EXPECT_NEAR(s.z.head(net.nodes).sum(), net.demand.sum(), 1e-7) << name;
    EXPECT_NEAR(s.z(ap.theta_index(ap.reference)), 0.0, 1e-8) << name;
  }
}

TEST(BuildProgramTest, CheapestNodeTakesAllSupply) {
  const NetworkCase net = triangle();
  const AllocationProgram ap = build_program(net);
  const ConvexProgram& p = ap.program;
  const auto oracle = testing::enumerate_vertices(p.c1, p.A, p.b, p.G, p.d, 1e-9);
  ASSERT_TRUE(oracle.feasible);
  const BaseSolution s = solve_base(p);
  ASSERT_EQ(s.status, SolveStatus::kOptimal);
  EXPECT_NEAR(s.objective, oracle.objective, 1e-7);
  EXPECT_NEAR(s.z(1), 1.8, 1e-7);
  EXPECT_NEAR(s.z(0), 0.0, 1e-7);
  EXPECT_NEAR(s.z(2), 0.0, 1e-7);
  EXPECT_LT((s.z.head(3) - oracle.x.head(3)).lpNorm<Eigen::Infinity>(), 1e-6);
}

TEST(BuildProgramTest, FlowLimitsMatchOracle) {
  NetworkCase net = triangle();
  for (Edge& e : net.edges) {
    e.f_min = -0.5;
    e.f_max = 0.5;
  }
  const ConvexProgram p = build_program(net).program;
  const auto oracle = testing::enumerate_vertices(p.c1, p.A, p.b, p.G, p.d, 1e-9);
  ASSERT_TRUE(oracle.feasible);
  const BaseSolution s = solve_base(p);
  ASSERT_EQ(s.status, SolveStatus::kOptimal);
  EXPECT_NEAR(s.objective, oracle.objective, 1e-7);
  EXPECT_LT(s.z(1), 1.8 - 1e-3);  // congestion forces other supplies on
}

TEST(BuildProgramTest, ExcessDemandIsInfeasible) {
  NetworkCase net = triangle();
  net.p_max = Eigen::Vector3d::Constant(0.5);
  EXPECT_EQ(solve_base(build_program(net).program).status, SolveStatus::kInfeasible);
}

TEST(RandomInstanceTest, RangesAndDeterminism) {
  const NetworkCase topo = load_case(fixture("case14.m"));
  const NetworkCase a = random_instance(topo, 5);
  const NetworkCase b = random_instance(topo, 5);
  const NetworkCase c = random_instance(topo, 6);
  EXPECT_EQ(to_json(a), to_json(b));
  EXPECT_NE(to_json(a), to_json(c));
  for (int i = 0; i < topo.nodes; ++i) {
    EXPECT_GE(a.c1(i), 1.0);
    EXPECT_LE(a.c1(i), 3.0);
    EXPECT_GE(a.c2(i), 0.1);
    EXPECT_LE(a.c2(i), 0.3);
    EXPECT_GE(a.demand(i), 0.5);
    EXPECT_LE(a.demand(i), 1.0);
  }
  EXPECT_EQ(a.p_max, topo.p_max);
  EXPECT_EQ(a.edges.size(), topo.edges.size());
}

TEST(RandomInstanceTest, DemandMean) {
  const NetworkCase topo = load_case(fixture("case14.m"));
  double sum = 0.0;
  int count = 0;
  for (std::uint64_t seed = 0; count < 10000; ++seed) {
    const NetworkCase inst = random_instance(topo, seed);
    for (int i = 0; i < inst.nodes && count < 10000; ++i, ++count) sum += inst.demand(i);
  }
  const double se = (0.5 / std::sqrt(12.0)) / std::sqrt(10000.0);
  EXPECT_LT(std::abs(sum / count - 0.75), 3.0 * se);
}

TEST(SensitivityProbeTest, ZeroAlpha) {
  const SensitivityReport r = sensitivity_probe(load_case(fixture("case3.m")), 0.0, 10, 1);
  EXPECT_LT(r.max_observed, 1e-6);
  EXPECT_EQ(r.exceedances, 0);
}

TEST(SensitivityProbeTest, InteriorOptimumStaysWithinAlpha) {
  const NetworkCase net = load_case(fixture("case3.m"));
  const SensitivityReport r = sensitivity_probe(net, 0.1, 100, 7);
  EXPECT_EQ(static_cast<int>(r.observed.size()) + r.skipped, 100);
  EXPECT_EQ(r.exceedances, 0);
  EXPECT_LE(r.max_observed, 0.1 + 1e-6);
  EXPECT_TRUE(r.warnings.empty());
  int total = 0;
  for (int h : r.histogram) total += h;
  EXPECT_EQ(total, static_cast<int>(r.observed.size()));
}

TEST(SensitivityProbeTest, NegativeAlphaRejected) {
  EXPECT_EQ(code_of([] { sensitivity_probe(load_case(fixture("case3.m")), -0.1, 1, 1); }),
            ErrorCode::kInvalidSpec);
}

}  // namespace
}  // namespace dpcc
