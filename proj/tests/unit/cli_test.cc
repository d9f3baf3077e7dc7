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


#include "cli.h"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>
#include <json.hpp>

namespace dpcc::cli {
namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome invoke(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string fixture(const std::string& name) {
  return std::string(DPCC_FIXTURE_DIR) + "/" + name;
}

int count_lines(const std::string& text) {
  int n = 0;
  for (char c : text) n += c == '\n';
  return n;
}

TEST(CliTest, CheckReportsImplementable) {
  const Outcome o = invoke({"check", "--case", fixture("case3.m"), "--query", "identity:0"});
  EXPECT_EQ(o.code, kExitOk) << o.err;
  EXPECT_NE(o.out.find("valid: true"), std::string::npos);
  EXPECT_NE(o.out.find("implementable: true"), std::string::npos);
}

TEST(CliTest, CheckReportsNotImplementable) {
  const Outcome o =
      invoke({"check", "--case", fixture("case3.m"), "--query", "identity:0,1,2"});
  EXPECT_EQ(o.code, kExitOk);
  EXPECT_NE(o.out.find("implementable: false"), std::string::npos);
}

TEST(CliTest, MissingCaseIsUsageError) {
  for (const char* sub : {"solve", "check", "release", "bench", "pareto"}) {
    const Outcome o = invoke({sub});
    EXPECT_EQ(o.code, kExitUsage) << sub;
    EXPECT_NE(o.err.find("error[UsageError]"), std::string::npos) << sub;
  }
  EXPECT_EQ(invoke({}).code, kExitUsage);
  EXPECT_EQ(invoke({"frobnicate"}).code, kExitUsage);
  EXPECT_EQ(invoke({"solve", "--case", fixture("case3.m"), "--bogus"}).code, kExitUsage);
}

TEST(CliTest, ComputationErrorsExitOne) {
  const Outcome o = invoke({"solve", "--case", fixture("no_such_case.m")});
  EXPECT_EQ(o.code, kExitFailure);
  EXPECT_NE(o.err.find("error[ParseError]"), std::string::npos);
}

TEST(CliTest, SolvePrintsJson) {
  const Outcome o = invoke({"solve", "--case", fixture("case3.m")});
  ASSERT_EQ(o.code, kExitOk) << o.err;
  const auto doc = nlohmann::json::parse(o.out);
  EXPECT_EQ(doc["status"], "optimal");
  ASSERT_EQ(doc["p"].size(), 3u);
  double total = 0.0;
  for (const auto& v : doc["p"]) total += v.get<double>();
  EXPECT_NEAR(total, 1.8, 1e-7);
}

TEST(CliTest, ReleaseIsDeterministicAndRedacted) {
  const std::vector<std::string> args = {"release", "--case", fixture("case3.m"), "--query",
                                         "sum:0,1", "--seed", "5"};
  const Outcome a = invoke(args);
  const Outcome b = invoke(args);
  ASSERT_EQ(a.code, kExitOk) << a.err;
  EXPECT_EQ(a.out, b.out);
  const auto doc = nlohmann::json::parse(a.out);
  EXPECT_EQ(doc["mechanism"], "psq");
  EXPECT_EQ(doc["values"].size(), 1u);
  EXPECT_FALSE(doc.contains("xi"));
  EXPECT_FALSE(doc.contains("z_hat"));
  EXPECT_EQ(doc["provenance"]["noise"], "laplace");
  std::vector<std::string> more = args;
  more.push_back("--reveal-internal");
  const auto full = nlohmann::json::parse(invoke(more).out);
  EXPECT_TRUE(full.contains("z_hat"));
  EXPECT_EQ(full["values"], doc["values"]);
}

TEST(CliTest, ReleaseMechanismMismatchIsUsageError) {
  const Outcome o = invoke({"release", "--case", fixture("case3.m"), "--query", "identity:0",
                            "--mechanism", "psq"});
  EXPECT_EQ(o.code, kExitUsage);
}

TEST(CliTest, ParetoGridEmitsElevenRows) {
  const Outcome o = invoke({"pareto", "--case", fixture("case3.m"), "--query", "identity:0",
                            "--phi", "0:1:0.1"});
  ASSERT_EQ(o.code, kExitOk) << o.err;
  EXPECT_EQ(count_lines(o.out), 12);  // header plus 11 rows
  EXPECT_EQ(o.out.rfind("phi,expected_cost,expected_loss,solution_variance\n", 0), 0u);
}

TEST(CliTest, BenchWritesFiles) {
  const std::string out_path = ::testing::TempDir() + "dpcc_bench.csv";
  const std::string runs_path = ::testing::TempDir() + "dpcc_runs.csv";
  const Outcome o = invoke({"bench", "--case", fixture("case3.m"), "--runs", "2", "--oos",
                            "100", "--mechanism", "op,analytic", "--out", out_path,
                            "--runs-out", runs_path});
  ASSERT_EQ(o.code, kExitOk) << o.err;
  std::ifstream f(out_path);
  std::stringstream ss;
  ss << f.rdbuf();
  EXPECT_EQ(count_lines(ss.str()), 3);
  std::ifstream g(runs_path);
  std::stringstream rs;
  rs << g.rdbuf();
  EXPECT_EQ(count_lines(rs.str()), 5);
  std::remove(out_path.c_str());
  std::remove(runs_path.c_str());
}

}  // namespace
}  // namespace dpcc::cli
