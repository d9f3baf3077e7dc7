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
#include <iomanip>
#include <ostream>
#include <string>

#include "dpcc/error.h"

namespace dpcc {

ConicProgram::ConicProgram(int num_vars)
    : objective_(Eigen::VectorXd::Zero(num_vars)) {}

int ConicProgram::add_variables(int count) {
  const int first = num_vars();
  objective_.conservativeResize(first + count);
  objective_.tail(count).setZero();
  return first;
}

void ConicProgram::set_cost(int var, double coef) { objective_(var) = coef; }

void ConicProgram::add_cost(int var, double coef) { objective_(var) += coef; }

void ConicProgram::add_equality(LinearExpr expr, double rhs) {
  equalities_.push_back({std::move(expr), rhs});
}

void ConicProgram::add_inequality(LinearExpr expr, double rhs) {
  inequalities_.push_back({std::move(expr), rhs});
}

void ConicProgram::add_soc(SocConstraint cone) {
  if (cone.lhs_const.empty()) cone.lhs_const.assign(cone.lhs.size(), 0.0);
  socs_.push_back(std::move(cone));
}

double ConicProgram::evaluate_objective(const Eigen::VectorXd& x) const {
  return objective_.dot(x) + offset_;
}

namespace {

void check_expr(const LinearExpr& expr, int n, const char* where) {
  for (const Term& t : expr) {
    if (t.var < 0 || t.var >= n) {
      throw Error(ErrorCode::kInvalidProgram,
                  std::string(where) + " references variable " +
                      std::to_string(t.var) + " of " + std::to_string(n));
    }
    if (!std::isfinite(t.coef)) {
      throw Error(ErrorCode::kInvalidProgram,
                  std::string(where) + " has a non-finite coefficient");
    }
  }
}

void check_finite(double v, const char* where) {
  if (!std::isfinite(v)) {
    throw Error(ErrorCode::kInvalidProgram,
                std::string(where) + " has a non-finite constant");
  }
}

}  // namespace

void ConicProgram::validate() const {
  const int n = num_vars();
  if (n < 1) throw Error(ErrorCode::kInvalidProgram, "no variables");
  if (!objective_.allFinite()) {
    throw Error(ErrorCode::kInvalidProgram, "non-finite objective");
  }
  for (const LinearRow& row : equalities_) {
    check_expr(row.expr, n, "equality");
    check_finite(row.rhs, "equality");
  }
  for (const LinearRow& row : inequalities_) {
    check_expr(row.expr, n, "inequality");
    check_finite(row.rhs, "inequality");
  }
  for (const SocConstraint& cone : socs_) {
    if (cone.lhs.size() != cone.lhs_const.size()) {
      throw Error(ErrorCode::kInvalidProgram, "cone constant length mismatch");
    }
    check_expr(cone.rhs, n, "cone");
    check_finite(cone.rhs_const, "cone");
    for (size_t k = 0; k < cone.lhs.size(); ++k) {
      check_expr(cone.lhs[k], n, "cone");
      check_finite(cone.lhs_const[k], "cone");
    }
  }
}

double evaluate(const LinearExpr& expr, const Eigen::VectorXd& x) {
  double sum = 0.0;
  for (const Term& t : expr) sum += t.coef * x(t.var);
  return sum;
}

std::string_view status_name(SolveStatus status) {
  switch (status) {
    case SolveStatus::kOptimal:
      return "optimal";
    case SolveStatus::kInfeasible:
      return "infeasible";
    case SolveStatus::kUnbounded:
      return "unbounded";
    case SolveStatus::kNumericalFailure:
      return "numerical_failure";
  }
  return "unknown";
}

Solution solve(const ConicProgram& program, const SolverOptions& options) {
  static const InteriorPointBackend kDefault;
  const ConicBackend& backend =
      options.backend != nullptr ? *options.backend : kDefault;
  return backend.solve(program, options.tol);
}

int add_quadratic_epigraph(ConicProgram& program, std::span<const Term> terms) {
  const int t = program.add_variables(1);
  SocConstraint cone;
  // 4t >= 4 sum w x^2  <=>  ||(2 sqrt(w) x, t - 1)|| <= t + 1.
  for (const Term& term : terms) {
    if (term.coef < 0.0) {
      throw Error(ErrorCode::kInvalidProgram, "negative quadratic weight");
    }
    if (term.coef == 0.0) continue;
    cone.lhs.push_back({{term.var, 2.0 * std::sqrt(term.coef)}});
    cone.lhs_const.push_back(0.0);
  }
  cone.lhs.push_back({{t, 1.0}});
  cone.lhs_const.push_back(-1.0);
  cone.rhs = {{t, 1.0}};
  cone.rhs_const = 1.0;
  program.add_soc(std::move(cone));
  return t;
}

ConicProgram lift_quadratic(const Eigen::VectorXd& c1, const Eigen::VectorXd& c2,
                            const ConicProgram& base) {
  if (c1.size() != c2.size() || c1.size() > base.num_vars()) {
    throw Error(ErrorCode::kInvalidProgram, "cost vector size mismatch");
  }
  ConicProgram lifted = base;
  for (int i = 0; i < c1.size(); ++i) lifted.set_cost(i, c1(i));
  for (int i = 0; i < c2.size(); ++i) {
    if (c2(i) < 0.0) {
      throw Error(ErrorCode::kInvalidProgram, "c2 must be nonnegative");
    }
    if (c2(i) == 0.0) continue;
    const Term term{i, c2(i)};
    const int t = add_quadratic_epigraph(lifted, std::span<const Term>(&term, 1));
    lifted.set_cost(t, 1.0);
  }
  return lifted;
}

namespace {

void write_expr(std::ostream& out, const LinearExpr& expr) {
  out << ' ' << expr.size();
  for (const Term& t : expr) out << ' ' << t.var << ' ' << t.coef;
}

}  // namespace

void dump(const ConicProgram& program, std::ostream& out) {
  const auto old_precision = out.precision();
  out << std::setprecision(17);
  out << "dpcc-conic 1\n";
  out << "vars " << program.num_vars() << '\n';
  out << "offset " << program.objective_offset() << '\n';
  for (int i = 0; i < program.num_vars(); ++i) {
    if (program.objective()(i) != 0.0) {
      out << "cost " << i << ' ' << program.objective()(i) << '\n';
    }
  }
  for (const LinearRow& row : program.equalities()) {
    out << "eq " << row.rhs;
    write_expr(out, row.expr);
    out << '\n';
  }
  for (const LinearRow& row : program.inequalities()) {
    out << "le " << row.rhs;
    write_expr(out, row.expr);
    out << '\n';
  }
  for (const SocConstraint& cone : program.socs()) {
    out << "soc " << cone.dim() << ' ' << cone.rhs_const;
    write_expr(out, cone.rhs);
    out << '\n';
    for (size_t k = 0; k < cone.lhs.size(); ++k) {
      out << "socrow " << cone.lhs_const[k];
      write_expr(out, cone.lhs[k]);
      out << '\n';
    }
  }
  out << "end\n";
  out.precision(old_precision);
}

}  // namespace dpcc
