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

// Private identity and sum queries over solutions of the base problem, their
// iterative variants, and the output-perturbation baseline.

#ifndef DPCC_MECHANISMS_H_
#define DPCC_MECHANISMS_H_

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dpcc/conic.h"
#include "dpcc/noise.h"
#include "dpcc/problem.h"
#include "dpcc/reform.h"

namespace dpcc {

struct MechanismConfig {
  PrivacyParams privacy;
  NoiseKind noise = NoiseKind::kLaplace;
  FeasibilitySpec feas;
  VarianceSpec var;
  SolverOptions solver;
};

struct Provenance {
  std::string mechanism;
  std::uint64_t seed = 0;
  std::uint64_t scenario_seed = 0;
  double epsilon = 0.0;
  double delta = 0.0;
  double alpha = 0.0;
  double eta = 0.0;
  double mu = 0.0;  // zero unless iterative
  double phi = 0.0;
  ReformMode reform = ReformMode::kAnalytic;
  NoiseKind noise = NoiseKind::kLaplace;
  double noise_scale = 0.0;
};

struct Release {
  QueryKind kind = QueryKind::kIdentity;
  Eigen::VectorXd values;  // released answer, one entry per index or group
  Eigen::VectorXd xi;      // noise draw (external layout)
  // Sampled solution. Empty for output perturbation when the pinned problem
  // has no feasible completion.
  Eigen::VectorXd z_hat;
  bool feasible = false;   // A z_hat <= b + 1e-6 (or, for OP, completion exists)
  double max_violation = 0.0;
  int iterations = 1;
  Provenance provenance;
};

constexpr double kCertificateTolerance = 1e-6;

// Largest violation of A z <= b (zero when satisfied).
double max_violation(const ConvexProgram& prog, const Eigen::VectorXd& z);

// ceil(ln mu / ln eta), at least 1.
int composition_rounds(double eta, double mu);

// Released coordinates, or group sums, of z.
Eigen::VectorXd query_answer(const QuerySpec& query, const Eigen::VectorXd& z);

// Noise in the external layout of the query: dimension n with non-released
// coordinates masked for identity queries, group count for sums.
NoiseSpec query_noise(const PrivacyParams& privacy, NoiseKind kind,
                      const QuerySpec& query, int n);

// Samples xi, forms z_hat = z_tilde + Z xi and certifies it. Reads nothing of
// the program beyond A and b.
Release sample_release(const Recourse& recourse, const ConvexProgram& prog,
                       std::uint64_t seed);

Release piq(const ConvexProgram& prog, const std::vector<int>& released,
            const MechanismConfig& config, std::uint64_t seed);

Release psq(const ConvexProgram& prog, const std::vector<std::vector<int>>& groups,
            const MechanismConfig& config, std::uint64_t seed);

// piq or psq, chosen by the query kind.
Release private_query(const ConvexProgram& prog, const QuerySpec& query,
                      const MechanismConfig& config, std::uint64_t seed);

// Noise calibrated at epsilon / T (and delta / T for Gaussian); one solve,
// then up to T draws, releasing the first feasible sample or the last one.
Release iterative(const ConvexProgram& prog, const QuerySpec& query,
                  const MechanismConfig& config, double mu, std::uint64_t seed);

// Solves the base problem, perturbs the query answer with calibrated noise
// and certifies by checking that the base constraints admit a solution with
// the released coordinates (or group sums) fixed.
Release output_perturbation(const ConvexProgram& prog, const QuerySpec& query,
                            const MechanismConfig& config, std::uint64_t seed);

// True iff some z satisfies A z <= b, G z = d and E z = e.
bool pinned_feasible(const ConvexProgram& prog, const Eigen::MatrixXd& E,
                     const Eigen::VectorXd& e, const SolverOptions& options = {},
                     Eigen::VectorXd* witness = nullptr);

struct ParetoRow {
  double phi = 0.0;
  double objective = 0.0;
  double expected_cost = 0.0;
  double expected_loss = 0.0;   // percent of the base optimum
  double cost_variance = 0.0;   // Var[c1'(z_tilde + Z xi)]
  double solution_variance = 0.0;  // Tr[Z Sigma Z'] over `variance_rows`
};

// One chance-constrained solve per phi (sorted ascending). `variance_rows`
// restricts the solution-variance metric; empty means all coordinates.
std::vector<ParetoRow> pareto_sweep(const ConvexProgram& prog, const QuerySpec& query,
                                    const MechanismConfig& config, VarianceMode mode,
                                    std::vector<double> phi_grid,
                                    const std::vector<int>& variance_rows = {});

}  // namespace dpcc

#endif  // DPCC_MECHANISMS_H_
