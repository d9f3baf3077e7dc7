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

// Base problem data, query specifications and their validity checks.
//
//   min  c1'z + z' diag(c2) z   s.t.  A z <= b,  G z = d.
//
// d is the sensitive right-hand side. Indices are 0-based throughout.

#ifndef DPCC_PROBLEM_H_
#define DPCC_PROBLEM_H_

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dpcc/conic.h"

namespace dpcc {

struct ConvexProgram {
  Eigen::VectorXd c1;
  Eigen::VectorXd c2;
  Eigen::MatrixXd A;
  Eigen::VectorXd b;
  Eigen::MatrixXd G;
  Eigen::VectorXd d;  // sensitive

  int n() const { return static_cast<int>(c1.size()); }
  int m() const { return static_cast<int>(A.rows()); }
  int l() const { return static_cast<int>(G.rows()); }

  double cost(const Eigen::VectorXd& z) const;
};

enum class IssueKind { kDimensionMismatch, kNonConvex, kEmptyBlock, kNonFinite };

struct ValidationIssue {
  IssueKind kind;
  std::string message;
};

struct ValidationReport {
  std::vector<ValidationIssue> issues;
  // Accepted but suspicious input, e.g. a rank-deficient equality block.
  std::vector<std::string> warnings;

  bool valid() const { return issues.empty(); }
};

ValidationReport validate_program(const ConvexProgram& prog);

// Throws Error(kInvalidProgram) listing every issue.
void require_valid(const ConvexProgram& prog);

// Dimensions and norms, with d redacted unless explicitly requested.
std::string describe(const ConvexProgram& prog, bool reveal_sensitive = false);

enum class QueryKind { kIdentity, kSum };

struct QuerySpec {
  QueryKind kind = QueryKind::kIdentity;
  std::vector<int> released;             // identity
  std::vector<std::vector<int>> groups;  // sum

  static QuerySpec identity(std::vector<int> released);
  static QuerySpec sum(std::vector<std::vector<int>> groups);

  // Number of independent perturbations: released count or group count.
  int noise_dim() const;

  // 0/1 matrix S (groups x n) for sums, or the k x n row selector for
  // identity queries.
  Eigen::MatrixXd selector(int n) const;
};

// Throws Error(kInvalidQuery) for empty, out-of-range, duplicated or
// intersecting index sets.
void validate_query(const QuerySpec& query, int n);

struct PrivacyParams {
  double epsilon = 1.0;
  double delta = 0.0;
  double alpha = 0.1;
  // Sensitivity bound used for calibration; zero means "use alpha".
  double sensitivity = 0.0;

  double effective_sensitivity() const {
    return sensitivity > 0.0 ? sensitivity : alpha;
  }
};

// Entry (row, col) of the recourse matrix Z.
struct ZTerm {
  int row;
  int col;
  double coef;
};

struct ZEquality {
  std::vector<ZTerm> terms;
  double rhs = 0.0;
};

struct RecourseConstraintSet {
  int n = 0;
  int p = 0;
  std::vector<ZEquality> rows;

  // Max absolute violation by an n x p matrix.
  double violation(const Eigen::MatrixXd& Z) const;
};

// Identity queries take p == n (masked noise coordinates are structurally
// zero); sum queries take p == group count.
RecourseConstraintSet build_query_constraints(const QuerySpec& query, int n, int p);

// True iff some Z satisfies the query constraints and G Z = 0, decided by an
// LP feasibility solve.
bool check_implementable(const ConvexProgram& prog, const QuerySpec& query,
                         const SolverOptions& options = {});

struct BaseSolution {
  SolveStatus status = SolveStatus::kNumericalFailure;
  Eigen::VectorXd z;
  double objective = 0.0;
  // Inequality multipliers (nonnegative), one per row of A.
  Eigen::VectorXd multipliers;
};

// Solves the deterministic base problem. Optimal solutions are refined on the
// identified active set so that z is accurate well beyond the conic
// tolerances.
BaseSolution solve_base(const ConvexProgram& prog, const SolverOptions& options = {});

// Same program with extra equality rows appended (used to pin coordinates).
BaseSolution solve_base_with(const ConvexProgram& prog, const Eigen::MatrixXd& E,
                             const Eigen::VectorXd& e,
                             const SolverOptions& options = {});

}  // namespace dpcc

#endif  // DPCC_PROBLEM_H_
