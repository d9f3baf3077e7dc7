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

// Conic programs with linear objective, linear equalities, linear
// inequalities and second-order cone constraints, plus the solver interface
// used by every higher-level module.

#ifndef DPCC_CONIC_H_
#define DPCC_CONIC_H_

#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace dpcc {

struct Term {
  int var;
  double coef;
};

// Sparse linear form sum(coef * x[var]). Repeated variables are summed.
using LinearExpr = std::vector<Term>;

struct LinearRow {
  LinearExpr expr;
  double rhs = 0.0;
};

// ||lhs(x) + lhs_const||_2 <= rhs(x) + rhs_const.
struct SocConstraint {
  std::vector<LinearExpr> lhs;
  std::vector<double> lhs_const;
  LinearExpr rhs;
  double rhs_const = 0.0;

  int dim() const { return static_cast<int>(lhs.size()) + 1; }
};

class ConicProgram {
 public:
  explicit ConicProgram(int num_vars = 0);

  int num_vars() const { return static_cast<int>(objective_.size()); }

  // Appends `count` fresh variables with zero cost; returns the first index.
  int add_variables(int count);

  void set_cost(int var, double coef);
  void add_cost(int var, double coef);
  void set_objective_offset(double offset) { offset_ = offset; }

  const Eigen::VectorXd& objective() const { return objective_; }
  double objective_offset() const { return offset_; }

  void add_equality(LinearExpr expr, double rhs);
  // expr <= rhs.
  void add_inequality(LinearExpr expr, double rhs);
  void add_soc(SocConstraint cone);

  const std::vector<LinearRow>& equalities() const { return equalities_; }
  const std::vector<LinearRow>& inequalities() const { return inequalities_; }
  const std::vector<SocConstraint>& socs() const { return socs_; }

  double evaluate_objective(const Eigen::VectorXd& x) const;

  // Throws Error(kInvalidProgram) on out-of-range variable references,
  // non-finite data, or an empty variable set.
  void validate() const;

 private:
  Eigen::VectorXd objective_;
  double offset_ = 0.0;
  std::vector<LinearRow> equalities_;
  std::vector<LinearRow> inequalities_;
  std::vector<SocConstraint> socs_;
};

double evaluate(const LinearExpr& expr, const Eigen::VectorXd& x);

struct ToleranceSpec {
  double feas = 1e-8;
  double gap = 1e-8;
  int max_iterations = 200;
  // Per-iteration log on stderr.
  bool verbose = false;
};

enum class SolveStatus { kOptimal, kInfeasible, kUnbounded, kNumericalFailure };

std::string_view status_name(SolveStatus status);

struct Residuals {
  double equality = 0.0;    // ||A x - b||_inf
  double inequality = 0.0;  // max linear row violation
  double cone = 0.0;        // max SOC violation
  double dual = 0.0;        // ||A'y + G'z + c||_inf
  double gap = 0.0;         // |primal - dual| objective
  double relative_gap = 0.0;
};

struct Solution {
  SolveStatus status = SolveStatus::kNumericalFailure;
  Eigen::VectorXd x;
  double objective = 0.0;
  double dual_objective = 0.0;
  // Multipliers: one per equality row, one per conic row (linear rows first,
  // then each SOC block in order).
  Eigen::VectorXd equality_duals;
  Eigen::VectorXd cone_duals;
  Residuals residuals;
  int iterations = 0;
  // Set when the iteration stalled and the status was decided at relaxed
  // tolerances (1e-6).
  bool reduced_accuracy = false;

  bool optimal() const { return status == SolveStatus::kOptimal; }
};

class ConicBackend {
 public:
  virtual ~ConicBackend() = default;
  virtual std::string_view name() const = 0;
  virtual Solution solve(const ConicProgram& program,
                         const ToleranceSpec& tol) const = 0;
};

// Homogeneous self-dual primal-dual interior-point method with
// Nesterov-Todd scaling and Mehrotra correction. Infeasibility and
// unboundedness are reported from the embedding's certificates.
class InteriorPointBackend final : public ConicBackend {
 public:
  std::string_view name() const override { return "interior-point"; }
  Solution solve(const ConicProgram& program,
                 const ToleranceSpec& tol) const override;
};

struct SolverOptions {
  ToleranceSpec tol;
  // nullptr selects the built-in interior-point backend.
  const ConicBackend* backend = nullptr;
};

Solution solve(const ConicProgram& program, const SolverOptions& options = {});

// Adds t >= sum_k weight_k * x[var_k]^2 as a rotated cone and returns t.
// Terms with zero weight are dropped; weights must be nonnegative.
int add_quadratic_epigraph(ConicProgram& program, std::span<const Term> terms);

// Returns `base` with objective c1'x + x'diag(c2)x over its first c1.size()
// variables; one epigraph variable and cone per positive c2 entry.
ConicProgram lift_quadratic(const Eigen::VectorXd& c1, const Eigen::VectorXd& c2,
                            const ConicProgram& base);

// Plain-text dump, one record per line:
//   dpcc-conic 1
//   vars <n>
//   offset <value>
//   cost <var> <coef>                       (nonzero costs only)
//   eq <rhs> <k> <var> <coef> ...
//   le <rhs> <k> <var> <coef> ...
//   soc <dim> <rhs_const> <k> <var> <coef> ...
//   socrow <const> <k> <var> <coef> ...     (dim-1 lines follow each soc)
//   end
void dump(const ConicProgram& program, std::ostream& out);

}  // namespace dpcc

#endif  // DPCC_CONIC_H_
