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

// Multi-run benchmark harness: random instances, random released subsets,
// out-of-sample violation rates and optimality losses, CSV output.

#ifndef DPCC_BENCH_H_
#define DPCC_BENCH_H_

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dpcc/mechanisms.h"
#include "dpcc/network.h"
#include "dpcc/noise.h"
#include "dpcc/problem.h"
#include "dpcc/reform.h"

namespace dpcc {

// Fraction of draws with some row of A z <= b violated by more than 1e-6.
double empirical_violation(const Recourse& recourse, const ConvexProgram& prog,
                           int n_samples, std::uint64_t seed);

// 100 (E[c(z_tilde + Z xi)] - c(z*)) / |c(z*)|. Throws Error(kDegenerateBase)
// when |c(z*)| < 1e-12.
double optimality_loss(const Recourse& recourse, const ConvexProgram& prog,
                       const SolverOptions& options = {});
double optimality_loss(const Recourse& recourse, const ConvexProgram& prog,
                       double base_cost);

// Output perturbation around a fixed base optimum: fraction of draws whose
// perturbed answer admits no feasible completion.
double op_violation(const ConvexProgram& prog, const QuerySpec& query,
                    const Eigen::VectorXd& z_star, const NoiseSpec& compact_noise,
                    int n_samples, std::uint64_t seed, const SolverOptions& options = {});

// "identity:0,2,5" or "sum:0,1|2,3". Indices are 0-based.
QuerySpec parse_query(std::string_view text);
// "a:b:step" (inclusive of b up to rounding) or a single value.
std::vector<double> parse_grid(std::string_view text);

// Uniform sample without replacement of floor(fraction * |pool|) entries,
// returned sorted. At least one entry is taken from a nonempty pool.
std::vector<int> sample_subset(const std::vector<int>& pool, double fraction,
                               std::uint64_t seed);
// Splits a sorted index set into `groups` contiguous groups of near-equal
// size.
std::vector<std::vector<int>> partition(const std::vector<int>& indices, int groups);

struct BenchConfig {
  std::string case_path;
  std::optional<CaseFormat> format;
  QueryKind query_kind = QueryKind::kIdentity;
  double fraction = 0.3;
  // Explicit query; when set it replaces the sampled subset.
  std::optional<QuerySpec> query;
  int groups = 1;  // sum queries over a sampled subset
  PrivacyParams privacy;
  NoiseKind noise = NoiseKind::kLaplace;
  double eta = 0.025;
  double beta = 0.01;
  bool run_op = true;
  bool run_analytic = true;
  bool run_scenario = true;
  // Redraw c1, c2 and d per run; otherwise the case is used as loaded.
  bool random_instances = true;
  VarianceMode variance = VarianceMode::kNone;
  std::vector<double> phi_grid;
  int runs = 20;
  int oos_samples = 1000;
  std::uint64_t seed = 1;
  SolverOptions solver;
};

// Throws Error(kInvalidSpec).
void validate_bench(const BenchConfig& config);

// JSON object whose keys mirror BenchConfig ("case", "format", "query",
// "kind", "fraction", "groups", "epsilon", "delta", "alpha", "noise", "eta",
// "beta", "mechanisms", "random_instances", "variance", "phi", "runs", "oos",
// "seed"). Unknown keys are a parse error.
BenchConfig parse_bench_config(std::string_view text);
BenchConfig load_bench_config(const std::string& path);

struct RunRecord {
  int run = 0;
  std::string mechanism;
  bool ok = false;
  double violation = 0.0;  // percent
  double loss = 0.0;       // percent; NaN for OP
  std::string error;       // category and message when !ok
};

struct BenchRow {
  std::string mechanism;
  int completed = 0;
  int failed = 0;
  double violation_mean = 0.0;
  double violation_std = 0.0;         // across runs
  double violation_within_std = 0.0;  // mean binomial std within a run
  double loss_mean = 0.0;
  double loss_std = 0.0;
  double wall_seconds = 0.0;  // not written to CSV
};

struct BenchResult {
  std::vector<BenchRow> rows;
  std::vector<RunRecord> records;
};

// Mechanism names: "OP", then "PIQ-a"/"PIQ-s" or "PSQ-a"/"PSQ-s". Per-run
// seeds are derive_seed(seed, run); errors in a run are recorded, not thrown.
BenchResult run_bench(const BenchConfig& config, const NetworkCase& network);
BenchResult run_bench(const BenchConfig& config);

// mechanism,runs,failed,violation_mean,violation_std,violation_within_std,
// loss_mean,loss_std
std::string bench_csv(const BenchResult& result);
// run,mechanism,ok,violation,loss,error
std::string runs_csv(const BenchResult& result);
// phi,expected_cost,expected_loss,<metric> where the metric is
// loss_variance or solution_variance.
std::string pareto_csv(const std::vector<ParetoRow>& rows, VarianceMode mode);

// Sample standard deviation (n - 1); zero for fewer than two values.
double sample_std(const std::vector<double>& values);

}  // namespace dpcc

#endif  // DPCC_BENCH_H_
