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

#include "dpcc/problem.h"

#include <algorithm>
#include <cmath>
#include <set>

#include <fmt/format.h>

#include "dpcc/error.h"

namespace dpcc {

double ConvexProgram::cost(const Eigen::VectorXd& z) const {
  return c1.dot(z) + z.dot(c2.cwiseProduct(z));
}

ValidationReport validate_program(const ConvexProgram& prog) {
  ValidationReport report;
  auto issue = [&](IssueKind kind, std::string msg) {
    report.issues.push_back({kind, std::move(msg)});
  };
  const int n = prog.n();
  if (n < 1) issue(IssueKind::kEmptyBlock, "no variables");
  if (prog.c2.size() != n) {
    issue(IssueKind::kDimensionMismatch,
          fmt::format("c2 has length {}, expected {}", prog.c2.size(), n));
  }
  if (prog.A.rows() < 1) issue(IssueKind::kEmptyBlock, "no inequality rows");
  if (prog.G.rows() < 1) issue(IssueKind::kEmptyBlock, "no equality rows");
  if (prog.A.rows() > 0 && prog.A.cols() != n) {
    issue(IssueKind::kDimensionMismatch,
          fmt::format("A has {} columns, expected {}", prog.A.cols(), n));
  }
  if (prog.G.rows() > 0 && prog.G.cols() != n) {
    issue(IssueKind::kDimensionMismatch,
          fmt::format("G has {} columns, expected {}", prog.G.cols(), n));
  }
  if (prog.b.size() != prog.A.rows()) {
    issue(IssueKind::kDimensionMismatch,
          fmt::format("b has length {}, A has {} rows", prog.b.size(), prog.A.rows()));
  }
  if (prog.d.size() != prog.G.rows()) {
    issue(IssueKind::kDimensionMismatch,
          fmt::format("d has length {}, G has {} rows", prog.d.size(), prog.G.rows()));
  }
  for (int i = 0; i < prog.c2.size(); ++i) {
    if (prog.c2(i) < 0.0) {
      issue(IssueKind::kNonConvex, fmt::format("c2[{}] = {} is negative", i, prog.c2(i)));
    }
  }
  if (!prog.c1.allFinite() || !prog.c2.allFinite() || !prog.A.allFinite() ||
      !prog.b.allFinite() || !prog.G.allFinite() || !prog.d.allFinite()) {
    issue(IssueKind::kNonFinite, "non-finite entry in program data");
  }
  if (report.valid()) {
    Eigen::FullPivLU<Eigen::MatrixXd> lu(prog.G);
    if (lu.rank() < prog.l()) {
      report.warnings.push_back(fmt::format(
          "equality block has rank {} < {} rows; optimum may be degenerate",
          lu.rank(), prog.l()));
    }
  }
  return report;
}

void require_valid(const ConvexProgram& prog) {
  const ValidationReport report = validate_program(prog);
  if (report.valid()) return;
  std::string msg;
  for (const ValidationIssue& issue : report.issues) {
    if (!msg.empty()) msg += "; ";
    msg += issue.message;
  }
  throw Error(ErrorCode::kInvalidProgram, msg);
}

std::string describe(const ConvexProgram& prog, bool reveal_sensitive) {
  std::string out = fmt::format("program n={} m={} l={} |c1|={:.6g} |c2|={:.6g}",
                                prog.n(), prog.m(), prog.l(), prog.c1.norm(),
                                prog.c2.norm());
  if (reveal_sensitive) {
    out += " d=[";
    for (int i = 0; i < prog.d.size(); ++i) {
      out += fmt::format("{}{:.6g}", i ? " " : "", prog.d(i));
    }
    out += "]";
  } else {
    out += " d=<redacted>";
  }
  return out;
}

QuerySpec QuerySpec::identity(std::vector<int> released) {
  QuerySpec q;
  q.kind = QueryKind::kIdentity;
  q.released = std::move(released);
  return q;
}

QuerySpec QuerySpec::sum(std::vector<std::vector<int>> groups) {
  QuerySpec q;
  q.kind = QueryKind::kSum;
  q.groups = std::move(groups);
  return q;
}

int QuerySpec::noise_dim() const {
  return static_cast<int>(kind == QueryKind::kIdentity ? released.size()
                                                       : groups.size());
}

Eigen::MatrixXd QuerySpec::selector(int n) const {
  const int k = noise_dim();
  Eigen::MatrixXd S = Eigen::MatrixXd::Zero(k, n);
  if (kind == QueryKind::kIdentity) {
    for (int a = 0; a < k; ++a) S(a, released[a]) = 1.0;
  } else {
    for (int g = 0; g < k; ++g) {
      for (int i : groups[g]) S(g, i) = 1.0;
    }
  }
  return S;
}

void validate_query(const QuerySpec& query, int n) {
  auto check_index = [&](int i) {
    if (i < 0 || i >= n) {
      throw Error(ErrorCode::kInvalidQuery,
                  fmt::format("index {} outside [0, {})", i, n));
    }
  };
  std::set<int> seen;
  if (query.kind == QueryKind::kIdentity) {
    if (query.released.empty()) {
      throw Error(ErrorCode::kInvalidQuery, "identity query releases nothing");
    }
    for (int i : query.released) {
      check_index(i);
      if (!seen.insert(i).second) {
        throw Error(ErrorCode::kInvalidQuery, fmt::format("index {} repeated", i));
      }
    }
    return;
  }
  if (query.groups.empty()) {
    throw Error(ErrorCode::kInvalidQuery, "sum query has no groups");
  }
  for (size_t g = 0; g < query.groups.size(); ++g) {
    if (query.groups[g].empty()) {
      throw Error(ErrorCode::kInvalidQuery, fmt::format("group {} is empty", g));
    }
    for (int i : query.groups[g]) {
      check_index(i);
      if (!seen.insert(i).second) {
        throw Error(ErrorCode::kInvalidQuery,
                    fmt::format("groups intersect at index {}", i));
      }
    }
  }
}

double RecourseConstraintSet::violation(const Eigen::MatrixXd& Z) const {
  double worst = 0.0;
  for (const ZEquality& row : rows) {
    double v = -row.rhs;
    for (const ZTerm& t : row.terms) v += t.coef * Z(t.row, t.col);
    worst = std::max(worst, std::abs(v));
  }
  return worst;
}

RecourseConstraintSet build_query_constraints(const QuerySpec& query, int n, int p) {
  validate_query(query, n);
  RecourseConstraintSet set;
  set.n = n;
  set.p = p;
  if (query.kind == QueryKind::kIdentity) {
    if (p != n) {
      throw Error(ErrorCode::kInvalidQuery,
                  fmt::format("identity query needs p = n = {}, got {}", n, p));
    }
    for (int i : query.released) {
      for (int j = 0; j < n; ++j) {
        set.rows.push_back({{{i, j, 1.0}}, i == j ? 1.0 : 0.0});
      }
    }
    return set;
  }
  const int k = query.noise_dim();
  if (p != k) {
    throw Error(ErrorCode::kInvalidQuery,
                fmt::format("sum query needs p = {} groups, got {}", k, p));
  }
  for (int g = 0; g < k; ++g) {
    for (int j = 0; j < k; ++j) {
      ZEquality row;
      for (int i : query.groups[g]) row.terms.push_back({i, j, 1.0});
      row.rhs = g == j ? 1.0 : 0.0;
      set.rows.push_back(std::move(row));
    }
  }
  return set;
}

namespace {

LinearExpr dense_row(const Eigen::MatrixXd& M, int r, int offset = 0) {
  LinearExpr expr;
  for (int j = 0; j < M.cols(); ++j) {
    if (M(r, j) != 0.0) expr.push_back({offset + j, M(r, j)});
  }
  return expr;
}

}  // namespace

bool check_implementable(const ConvexProgram& prog, const QuerySpec& query,
                         const SolverOptions& options) {
  require_valid(prog);
  validate_query(query, prog.n());
  const int n = prog.n();
  const int k = query.noise_dim();
  // Columns of Z are independent; with the identity mask collapsed, column a
  // belongs to the a-th released coordinate.
  for (int a = 0; a < k; ++a) {
    ConicProgram lp(n);
    for (int r = 0; r < prog.l(); ++r) {
      LinearExpr row = dense_row(prog.G, r);
      if (!row.empty()) lp.add_equality(std::move(row), 0.0);
    }
    if (query.kind == QueryKind::kIdentity) {
      for (int c = 0; c < k; ++c) {
        lp.add_equality({{query.released[c], 1.0}}, c == a ? 1.0 : 0.0);
      }
    } else {
      for (int g = 0; g < k; ++g) {
        LinearExpr row;
        for (int i : query.groups[g]) row.push_back({i, 1.0});
        lp.add_equality(std::move(row), g == a ? 1.0 : 0.0);
      }
    }
    const Solution sol = solve(lp, options);
    if (sol.status == SolveStatus::kInfeasible) return false;
    if (sol.status != SolveStatus::kOptimal) {
      throw Error(ErrorCode::kSolverFailure,
                  fmt::format("implementability solve ended {}",
                              status_name(sol.status)));
    }
  }
  return true;
}

namespace {

// Re-solves the KKT system of the equality-constrained QP on the active set
// reported by the interior-point solve. Accepts the result only when it is
// primal and dual feasible.
bool polish(const ConvexProgram& prog, const Eigen::MatrixXd& E,
            const Eigen::VectorXd& e, BaseSolution& base) {
  const int n = prog.n();
  const Eigen::VectorXd slack = prog.b - prog.A * base.z;
  std::vector<int> active;
  for (int i = 0; i < prog.m(); ++i) {
    if (base.multipliers(i) > slack(i)) active.push_back(i);
  }
  const int na = static_cast<int>(active.size());
  const int ne = static_cast<int>(E.rows());
  const int dim = n + na + ne;
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(dim, dim);
  Eigen::VectorXd rhs(dim);
  K.topLeftCorner(n, n) = (2.0 * prog.c2).asDiagonal();
  rhs.head(n) = -prog.c1;
  for (int a = 0; a < na; ++a) {
    K.block(n + a, 0, 1, n) = prog.A.row(active[a]);
    K.block(0, n + a, n, 1) = prog.A.row(active[a]).transpose();
    rhs(n + a) = prog.b(active[a]);
  }
  K.block(n + na, 0, ne, n) = E;
  K.block(0, n + na, n, ne) = E.transpose();
  rhs.tail(ne) = e;
  const Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(K);
  const Eigen::VectorXd sol = cod.solve(rhs);
  if (!sol.allFinite()) return false;
  const double scale = 1.0 + rhs.lpNorm<Eigen::Infinity>();
  if ((K * sol - rhs).lpNorm<Eigen::Infinity>() > 1e-10 * scale) return false;
  const Eigen::VectorXd z = sol.head(n);
  const double tol = 1e-10 * scale;
  if (prog.m() > 0 && (prog.A * z - prog.b).maxCoeff() > tol) return false;
  // Stationarity reads 2 C z + c1 + A' mu + E' nu = 0 with mu >= 0.
  for (int a = 0; a < na; ++a) {
    if (sol(n + a) < -tol) return false;
  }
  const double obj = prog.cost(z);
  if (obj > base.objective + 1e-7 * (1.0 + std::abs(base.objective))) return false;
  base.z = z;
  base.objective = obj;
  base.multipliers.setZero();
  for (int a = 0; a < na; ++a) base.multipliers(active[a]) = std::max(0.0, sol(n + a));
  return true;
}

}  // namespace

BaseSolution solve_base_with(const ConvexProgram& prog, const Eigen::MatrixXd& E,
                             const Eigen::VectorXd& e, const SolverOptions& options) {
  require_valid(prog);
  const int n = prog.n();
  Eigen::MatrixXd Eall(prog.l() + E.rows(), n);
  Eigen::VectorXd eall(prog.l() + E.rows());
  Eall << prog.G, E;
  eall << prog.d, e;

  ConicProgram base(n);
  for (int r = 0; r < Eall.rows(); ++r) {
    LinearExpr row = dense_row(Eall, r);
    if (row.empty()) {
      if (eall(r) != 0.0) {
        BaseSolution out;
        out.status = SolveStatus::kInfeasible;
        return out;
      }
      continue;
    }
    base.add_equality(std::move(row), eall(r));
  }
  for (int r = 0; r < prog.m(); ++r) base.add_inequality(dense_row(prog.A, r), prog.b(r));
  const ConicProgram lifted = lift_quadratic(prog.c1, prog.c2, base);
  const Solution sol = solve(lifted, options);

  BaseSolution out;
  out.status = sol.status;
  if (sol.status != SolveStatus::kOptimal) return out;
  out.z = sol.x.head(n);
  out.objective = prog.cost(out.z);
  out.multipliers = sol.cone_duals.head(prog.m());
  polish(prog, Eall, eall, out);
  return out;
}

BaseSolution solve_base(const ConvexProgram& prog, const SolverOptions& options) {
  return solve_base_with(prog, Eigen::MatrixXd(0, prog.n()), Eigen::VectorXd(0),
                         options);
}

}  // namespace dpcc
