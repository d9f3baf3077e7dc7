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

// Deterministic reformulation of the chance-constrained program over the
// affine recourse z(xi) = z_tilde + Z xi.
//
// Internally the noise has one coordinate per released index (identity) or
// per group (sum); Z is n x k in that compact space. Recourse exposes Z in
// the external layout: n x n with zero columns at masked coordinates for
// identity queries, n x groups for sum queries.

#ifndef DPCC_REFORM_H_
#define DPCC_REFORM_H_

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "dpcc/conic.h"
#include "dpcc/noise.h"
#include "dpcc/problem.h"

namespace dpcc {

enum class ReformMode { kAnalytic, kScenario };
enum class DistributionClass { kSymmetricUnimodal, kGaussian };
enum class VarianceMode { kNone, kCostVariance, kSolutionVariance };

std::string_view reform_mode_name(ReformMode mode);
ReformMode parse_reform_mode(std::string_view name);
std::string_view variance_mode_name(VarianceMode mode);
VarianceMode parse_variance_mode(std::string_view name);

struct FeasibilitySpec {
  double eta = 0.025;
  ReformMode mode = ReformMode::kAnalytic;
  // Optional per-row budgets for analytic mode; empty means eta on every row.
  std::vector<double> eta_bar;
  double beta = 0.01;
  std::uint64_t seed = 0;
};

struct VarianceSpec {
  VarianceMode mode = VarianceMode::kNone;
  double phi = 0.0;
};

// Throws Error(kInvalidSpec) on out-of-range parameters.
void validate_feasibility(const FeasibilitySpec& feas, int m);
void validate_variance(const VarianceSpec& var, const ConvexProgram& prog);

DistributionClass distribution_class(NoiseKind kind);

// Symmetric unimodal: sqrt(2 / (9 eta_bar)) for eta_bar in (0, 1/6].
// Gaussian: standard normal quantile at 1 - eta_bar.
// Throws Error(kOutOfRange) outside the admissible range.
double safety_factor(DistributionClass cls, double eta_bar);

// ceil((1/eta) * e/(e-1) * (2p - 1 + ln(1/beta))).
int scenario_count(double eta, double beta, int p);

struct AffineExpr {
  LinearExpr terms;
  double constant = 0.0;

  bool is_constant() const { return terms.empty(); }
  double evaluate(const Eigen::VectorXd& x) const;
};

// Solver variables for (z_tilde, Z). Entries of Z fixed by the query are
// constants or affine in the free entries, so the query identities hold
// exactly in every extracted solution.
struct RecourseLayout {
  int n = 0;
  int k = 0;
  std::vector<int> z_tilde;        // variable per coordinate
  std::vector<AffineExpr> Z;       // row-major n x k
  std::vector<int> external_col;   // external noise index of compact column

  const AffineExpr& z(int i, int j) const { return Z[i * k + j]; }
  // (A_row Z)_j as an affine expression.
  AffineExpr row_times_column(const Eigen::Ref<const Eigen::RowVectorXd>& row,
                              int j) const;

  Eigen::VectorXd extract_z_tilde(const Eigen::VectorXd& x) const;
  Eigen::MatrixXd extract_compact_Z(const Eigen::VectorXd& x) const;
};

// Adds z_tilde and Z variables for the query, plus G z_tilde = d and G Z = 0.
// Throws Error(kNotImplementable) when G Z = 0 contradicts the fixed entries.
RecourseLayout add_recourse_variables(ConicProgram& program,
                                      const ConvexProgram& prog,
                                      const QuerySpec& query);

// Adds weight * (c1'z_tilde + z_tilde' diag(c2) z_tilde + Tr[Z' diag(c2) Z Sigma])
// to the objective. `sigma` is the compact covariance diagonal.
void add_expected_objective(ConicProgram& program, const RecourseLayout& layout,
                            const Eigen::VectorXd& c1, const Eigen::VectorXd& c2,
                            const Eigen::VectorXd& sigma, double weight = 1.0);

// One cone per row: f_i ||Sigma^{1/2} Z' A_i'|| <= b_i - A_i z_tilde. Rows whose
// recourse term is constant become linear rows.
void add_analytic_constraints(ConicProgram& program, const RecourseLayout& layout,
                              const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                              const Eigen::VectorXd& sigma_sqrt,
                              const std::vector<double>& eta_bar,
                              DistributionClass cls);

struct ScenarioBox {
  int samples = 0;
  Eigen::VectorXd lo;
  Eigen::VectorXd hi;
};

// Draws scenario_count(eta, beta, k) samples of the compact noise and returns
// the per-coordinate range.
ScenarioBox scenario_box(const NoiseSpec& compact_noise, double eta, double beta,
                         std::uint64_t seed);

// A_i z_tilde + sum_k max(lo_k (A_i Z)_k, hi_k (A_i Z)_k) <= b_i, with one
// auxiliary variable per non-constant (row, column) pair.
void add_box_constraints(ConicProgram& program, const RecourseLayout& layout,
                         const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                         const ScenarioBox& box);

struct Assembly {
  ConicProgram program;
  RecourseLayout layout;
  NoiseSpec compact_noise;
  std::optional<ScenarioBox> box;
};

// `noise` is in the external layout (dimension n with a zero mask for
// identity queries, group count for sum queries).
Assembly assemble(const ConvexProgram& prog, const QuerySpec& query,
                  const NoiseSpec& noise, const FeasibilitySpec& feas,
                  const VarianceSpec& var);

struct Recourse {
  Eigen::VectorXd z_tilde;
  Eigen::MatrixXd Z;  // external layout
  QuerySpec query;
  NoiseSpec noise;
  FeasibilitySpec feas;
  VarianceSpec var;
  double objective = 0.0;

  Eigen::VectorXd realize(const Eigen::VectorXd& xi) const { return z_tilde + Z * xi; }
};

// Solves the assembled program. Throws Error(kNotImplementable) when no Z
// satisfies the query and G Z = 0, Error(kPrivacyTooStrong) when the chance
// constraints cannot be met, and Error(kSolverFailure) otherwise.
Recourse solve_recourse(const ConvexProgram& prog, const QuerySpec& query,
                        const NoiseSpec& noise, const FeasibilitySpec& feas,
                        const VarianceSpec& var, const SolverOptions& options = {});

// E[c(z_tilde + Z xi)] for zero-mean xi with covariance diag(sigma).
double expected_cost(const ConvexProgram& prog, const Eigen::VectorXd& z_tilde,
                     const Eigen::MatrixXd& Z, const Eigen::VectorXd& sigma);

// ||Sigma^{1/2} Z' c1||, the standard deviation of the linear cost.
double cost_std(const Eigen::VectorXd& c1, const Eigen::MatrixXd& Z,
                const Eigen::VectorXd& sigma);

// Tr[Z Sigma Z'] over the given rows (all rows when empty).
double solution_variance(const Eigen::MatrixXd& Z, const Eigen::VectorXd& sigma,
                         const std::vector<int>& rows = {});

}  // namespace dpcc

#endif  // DPCC_REFORM_H_
