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

#include "dpcc/reform.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <utility>

#include <boost/math/special_functions/erf.hpp>
#include <fmt/format.h>

#include "dpcc/error.h"

namespace dpcc {

std::string_view reform_mode_name(ReformMode mode) {
  return mode == ReformMode::kAnalytic ? "analytic" : "scenario";
}

ReformMode parse_reform_mode(std::string_view name) {
  if (name == "analytic") return ReformMode::kAnalytic;
  if (name == "scenario") return ReformMode::kScenario;
  throw Error(ErrorCode::kInvalidSpec, fmt::format("unknown reformulation '{}'", name));
}

std::string_view variance_mode_name(VarianceMode mode) {
  switch (mode) {
    case VarianceMode::kNone:
      return "none";
    case VarianceMode::kCostVariance:
      return "cost";
    case VarianceMode::kSolutionVariance:
      return "solution";
  }
  return "none";
}

VarianceMode parse_variance_mode(std::string_view name) {
  if (name == "none") return VarianceMode::kNone;
  if (name == "cost") return VarianceMode::kCostVariance;
  if (name == "solution") return VarianceMode::kSolutionVariance;
  throw Error(ErrorCode::kInvalidSpec, fmt::format("unknown variance mode '{}'", name));
}

void validate_feasibility(const FeasibilitySpec& feas, int m) {
  if (!(feas.eta > 0.0 && feas.eta < 1.0)) {
    throw Error(ErrorCode::kInvalidSpec,
                fmt::format("eta must lie in (0, 1), got {}", feas.eta));
  }
  if (!feas.eta_bar.empty()) {
    if (static_cast<int>(feas.eta_bar.size()) != m) {
      throw Error(ErrorCode::kInvalidSpec,
                  fmt::format("eta_bar has {} entries for {} rows", feas.eta_bar.size(), m));
    }
    for (double e : feas.eta_bar) {
      if (!(e > 0.0 && e < 1.0)) {
        throw Error(ErrorCode::kInvalidSpec,
                    fmt::format("eta_bar entry {} outside (0, 1)", e));
      }
    }
  }
  if (feas.mode == ReformMode::kScenario && !(feas.beta > 0.0 && feas.beta < 1.0)) {
    throw Error(ErrorCode::kInvalidSpec,
                fmt::format("beta must lie in (0, 1), got {}", feas.beta));
  }
}

void validate_variance(const VarianceSpec& var, const ConvexProgram& prog) {
  if (!(var.phi >= 0.0 && var.phi <= 1.0)) {
    throw Error(ErrorCode::kInvalidSpec,
                fmt::format("phi must lie in [0, 1], got {}", var.phi));
  }
  if (var.mode == VarianceMode::kCostVariance && prog.c2.size() > 0 &&
      prog.c2.cwiseAbs().maxCoeff() > 0.0) {
    throw Error(ErrorCode::kInvalidSpec,
                "cost-variance objective requires a linear cost (c2 = 0)");
  }
}

DistributionClass distribution_class(NoiseKind kind) {
  return kind == NoiseKind::kLaplace ? DistributionClass::kSymmetricUnimodal
                                     : DistributionClass::kGaussian;
}

double safety_factor(DistributionClass cls, double eta_bar) {
  if (cls == DistributionClass::kSymmetricUnimodal) {
    if (!(eta_bar > 0.0 && eta_bar <= 1.0 / 6.0)) {
      throw Error(ErrorCode::kOutOfRange,
                  fmt::format("unimodal safety factor needs eta_bar in (0, 1/6], got {}",
                              eta_bar));
    }
    return std::sqrt(2.0 / (9.0 * eta_bar));
  }
  if (!(eta_bar > 0.0 && eta_bar < 1.0)) {
    throw Error(ErrorCode::kOutOfRange,
                fmt::format("Gaussian safety factor needs eta_bar in (0, 1), got {}",
                            eta_bar));
  }
  return std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * eta_bar);
}

int scenario_count(double eta, double beta, int p) {
  if (!(eta > 0.0 && eta < 1.0) || !(beta > 0.0 && beta < 1.0) || p < 1) {
    throw Error(ErrorCode::kOutOfRange,
                fmt::format("scenario count needs eta, beta in (0, 1) and p >= 1"));
  }
  const double e = std::numbers::e;
  const double n = (1.0 / eta) * (e / (e - 1.0)) * (2.0 * p - 1.0 + std::log(1.0 / beta));
  return static_cast<int>(std::ceil(n));
}

double AffineExpr::evaluate(const Eigen::VectorXd& x) const {
  return constant + dpcc::evaluate(terms, x);
}

namespace {

void accumulate(AffineExpr& out, const AffineExpr& in, double scale) {
  out.constant += scale * in.constant;
  for (const Term& t : in.terms) out.terms.push_back({t.var, scale * t.coef});
}

// Merges repeated variables and drops zero coefficients.
void compress(LinearExpr& expr) {
  std::sort(expr.begin(), expr.end(),
            [](const Term& a, const Term& b) { return a.var < b.var; });
  LinearExpr out;
  for (const Term& t : expr) {
    if (!out.empty() && out.back().var == t.var) {
      out.back().coef += t.coef;
    } else {
      out.push_back(t);
    }
  }
  std::erase_if(out, [](const Term& t) { return t.coef == 0.0; });
  expr = std::move(out);
}

LinearExpr z_tilde_row(const RecourseLayout& layout,
                       const Eigen::Ref<const Eigen::RowVectorXd>& row) {
  LinearExpr expr;
  for (int i = 0; i < layout.n; ++i) {
    if (row(i) != 0.0) expr.push_back({layout.z_tilde[i], row(i)});
  }
  return expr;
}

// t >= sum_k w_k e_k(x)^2 as a rotated cone; returns t.
int add_affine_epigraph(ConicProgram& program,
                        const std::vector<std::pair<double, AffineExpr>>& terms) {
  const int t = program.add_variables(1);
  SocConstraint cone;
  for (const auto& [w, e] : terms) {
    if (w <= 0.0) continue;
    const double s = 2.0 * std::sqrt(w);
    LinearExpr row;
    for (const Term& term : e.terms) row.push_back({term.var, s * term.coef});
    cone.lhs.push_back(std::move(row));
    cone.lhs_const.push_back(s * e.constant);
  }
  cone.lhs.push_back({{t, 1.0}});
  cone.lhs_const.push_back(-1.0);
  cone.rhs = {{t, 1.0}};
  cone.rhs_const = 1.0;
  program.add_soc(std::move(cone));
  return t;
}

// s >= ||(e_k(x))_k||; returns s.
int add_norm_epigraph(ConicProgram& program, const std::vector<AffineExpr>& entries) {
  const int s = program.add_variables(1);
  SocConstraint cone;
  for (const AffineExpr& e : entries) {
    cone.lhs.push_back(e.terms);
    cone.lhs_const.push_back(e.constant);
  }
  cone.rhs = {{s, 1.0}};
  program.add_soc(std::move(cone));
  return s;
}

}  // namespace

AffineExpr RecourseLayout::row_times_column(
    const Eigen::Ref<const Eigen::RowVectorXd>& row, int j) const {
  AffineExpr out;
  for (int i = 0; i < n; ++i) {
    if (row(i) != 0.0) accumulate(out, z(i, j), row(i));
  }
  compress(out.terms);
  return out;
}

Eigen::VectorXd RecourseLayout::extract_z_tilde(const Eigen::VectorXd& x) const {
  Eigen::VectorXd out(n);
  for (int i = 0; i < n; ++i) out(i) = x(z_tilde[i]);
  return out;
}

Eigen::MatrixXd RecourseLayout::extract_compact_Z(const Eigen::VectorXd& x) const {
  Eigen::MatrixXd out(n, k);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < k; ++j) out(i, j) = z(i, j).evaluate(x);
  }
  return out;
}

RecourseLayout add_recourse_variables(ConicProgram& program,
                                      const ConvexProgram& prog,
                                      const QuerySpec& query) {
  const int n = prog.n();
  validate_query(query, n);
  const int k = query.noise_dim();
  RecourseLayout layout;
  layout.n = n;
  layout.k = k;
  const int zt = program.add_variables(n);
  for (int i = 0; i < n; ++i) layout.z_tilde.push_back(zt + i);

  // Rows of Z that are pinned (identity) or dependent (first member of a
  // group); all other entries are free variables.
  std::vector<int> role(n, -1);
  if (query.kind == QueryKind::kIdentity) {
    for (int a = 0; a < k; ++a) role[query.released[a]] = a;
    layout.external_col = query.released;
  } else {
    for (int g = 0; g < k; ++g) role[query.groups[g].front()] = g;
    for (int g = 0; g < k; ++g) layout.external_col.push_back(g);
  }
  layout.Z.assign(static_cast<size_t>(n) * k, AffineExpr{});
  for (int i = 0; i < n; ++i) {
    if (role[i] >= 0) continue;
    const int first = program.add_variables(k);
    for (int j = 0; j < k; ++j) layout.Z[i * k + j].terms = {{first + j, 1.0}};
  }
  for (int i = 0; i < n; ++i) {
    if (role[i] < 0) continue;
    const int g = role[i];
    for (int j = 0; j < k; ++j) {
      AffineExpr& e = layout.Z[i * k + j];
      e.constant = g == j ? 1.0 : 0.0;
      if (query.kind == QueryKind::kSum) {
        for (int other : query.groups[g]) {
          if (other != i) accumulate(e, layout.z(other, j), -1.0);
        }
      }
    }
  }

  for (int r = 0; r < prog.l(); ++r) {
    program.add_equality(z_tilde_row(layout, prog.G.row(r)), prog.d(r));
    for (int j = 0; j < k; ++j) {
      AffineExpr e = layout.row_times_column(prog.G.row(r), j);
      if (e.is_constant()) {
        if (std::abs(e.constant) > 1e-12) {
          throw Error(ErrorCode::kNotImplementable,
                      fmt::format("equality row {} fixes a released recourse entry", r));
        }
        continue;
      }
      program.add_equality(std::move(e.terms), -e.constant);
    }
  }
  return layout;
}

void add_expected_objective(ConicProgram& program, const RecourseLayout& layout,
                            const Eigen::VectorXd& c1, const Eigen::VectorXd& c2,
                            const Eigen::VectorXd& sigma, double weight) {
  if (weight == 0.0) return;
  for (int i = 0; i < layout.n; ++i) {
    program.add_cost(layout.z_tilde[i], weight * c1(i));
  }
  for (int i = 0; i < layout.n; ++i) {
    if (c2(i) <= 0.0) continue;
    std::vector<std::pair<double, AffineExpr>> terms;
    terms.push_back({weight * c2(i), AffineExpr{{{layout.z_tilde[i], 1.0}}, 0.0}});
    for (int j = 0; j < layout.k; ++j) {
      if (sigma(j) > 0.0) terms.push_back({weight * c2(i) * sigma(j), layout.z(i, j)});
    }
    const int t = add_affine_epigraph(program, terms);
    program.set_cost(t, 1.0);
  }
}

void add_analytic_constraints(ConicProgram& program, const RecourseLayout& layout,
                              const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                              const Eigen::VectorXd& sigma_sqrt,
                              const std::vector<double>& eta_bar,
                              DistributionClass cls) {
  for (int r = 0; r < A.rows(); ++r) {
    const double f = safety_factor(cls, eta_bar[r]);
    std::vector<AffineExpr> entries;
    bool constant = true;
    double const_norm2 = 0.0;
    for (int j = 0; j < layout.k; ++j) {
      if (sigma_sqrt(j) == 0.0) continue;
      AffineExpr e = layout.row_times_column(A.row(r), j);
      const double s = f * sigma_sqrt(j);
      e.constant *= s;
      for (Term& t : e.terms) t.coef *= s;
      constant = constant && e.is_constant();
      const_norm2 += e.constant * e.constant;
      if (!e.is_constant() || e.constant != 0.0) entries.push_back(std::move(e));
    }
    LinearExpr lhs = z_tilde_row(layout, A.row(r));
    if (constant) {
      program.add_inequality(std::move(lhs), b(r) - std::sqrt(const_norm2));
      continue;
    }
    SocConstraint cone;
    for (AffineExpr& e : entries) {
      cone.lhs.push_back(std::move(e.terms));
      cone.lhs_const.push_back(e.constant);
    }
    for (Term& t : lhs) t.coef = -t.coef;
    cone.rhs = std::move(lhs);
    cone.rhs_const = b(r);
    program.add_soc(std::move(cone));
  }
}

ScenarioBox scenario_box(const NoiseSpec& compact_noise, double eta, double beta,
                         std::uint64_t seed) {
  ScenarioBox box;
  const int k = compact_noise.dim;
  box.samples = scenario_count(eta, beta, k);
  box.lo = Eigen::VectorXd::Zero(k);
  box.hi = Eigen::VectorXd::Zero(k);
  NoiseSampler sampler(compact_noise, seed);
  for (int s = 0; s < box.samples; ++s) {
    const Eigen::VectorXd xi = sampler.next();
    if (s == 0) {
      box.lo = xi;
      box.hi = xi;
    } else {
      box.lo = box.lo.cwiseMin(xi);
      box.hi = box.hi.cwiseMax(xi);
    }
  }
  return box;
}

void add_box_constraints(ConicProgram& program, const RecourseLayout& layout,
                         const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                         const ScenarioBox& box) {
  for (int r = 0; r < A.rows(); ++r) {
    LinearExpr row = z_tilde_row(layout, A.row(r));
    double rhs = b(r);
    for (int j = 0; j < layout.k; ++j) {
      const AffineExpr v = layout.row_times_column(A.row(r), j);
      if (v.is_constant()) {
        rhs -= std::max(box.lo(j) * v.constant, box.hi(j) * v.constant);
        continue;
      }
      const int u = program.add_variables(1);
      row.push_back({u, 1.0});
      for (double end : {box.lo(j), box.hi(j)}) {
        // end * v <= u
        LinearExpr cut;
        for (const Term& t : v.terms) cut.push_back({t.var, end * t.coef});
        cut.push_back({u, -1.0});
        program.add_inequality(std::move(cut), -end * v.constant);
      }
    }
    program.add_inequality(std::move(row), rhs);
  }
}

namespace {

// Compact noise: one coordinate per compact column of the layout.
NoiseSpec compact_noise_for(const NoiseSpec& noise, const QuerySpec& query, int n) {
  const int k = query.noise_dim();
  const int expected = query.kind == QueryKind::kIdentity ? n : k;
  if (noise.dim != expected) {
    throw Error(ErrorCode::kInvalidSpec,
                fmt::format("noise dimension {} does not match query ({})", noise.dim,
                            expected));
  }
  NoiseSpec out;
  out.kind = noise.kind;
  out.scale = noise.scale;
  out.dim = k;
  out.covariance.resize(k);
  for (int j = 0; j < k; ++j) {
    const int ext = query.kind == QueryKind::kIdentity ? query.released[j] : j;
    if (noise.masked(ext)) {
      throw Error(ErrorCode::kInvalidSpec,
                  fmt::format("released coordinate {} is masked in the noise", ext));
    }
    out.covariance(j) = noise.covariance(ext);
  }
  return out;
}

}  // namespace

Assembly assemble(const ConvexProgram& prog, const QuerySpec& query,
                  const NoiseSpec& noise, const FeasibilitySpec& feas,
                  const VarianceSpec& var) {
  require_valid(prog);
  validate_query(query, prog.n());
  validate_feasibility(feas, prog.m());
  validate_variance(var, prog);

  Assembly out;
  out.compact_noise = compact_noise_for(noise, query, prog.n());
  const Eigen::VectorXd& sigma = out.compact_noise.covariance;
  const Eigen::VectorXd sigma_sqrt = sigma.cwiseSqrt();
  ConicProgram& program = out.program;
  out.layout = add_recourse_variables(program, prog, query);
  const RecourseLayout& layout = out.layout;

  switch (var.mode) {
    case VarianceMode::kNone:
      add_expected_objective(program, layout, prog.c1, prog.c2, sigma);
      break;
    case VarianceMode::kCostVariance: {
      add_expected_objective(program, layout, prog.c1, prog.c2, sigma, 1.0 - var.phi);
      std::vector<AffineExpr> entries;
      for (int j = 0; j < layout.k; ++j) {
        AffineExpr e = layout.row_times_column(prog.c1.transpose(), j);
        e.constant *= sigma_sqrt(j);
        for (Term& t : e.terms) t.coef *= sigma_sqrt(j);
        entries.push_back(std::move(e));
      }
      if (var.phi > 0.0) program.add_cost(add_norm_epigraph(program, entries), var.phi);
      break;
    }
    case VarianceMode::kSolutionVariance: {
      add_expected_objective(program, layout, prog.c1, prog.c2, sigma, 1.0 - var.phi);
      std::vector<AffineExpr> entries;
      for (int i = 0; i < layout.n; ++i) {
        AffineExpr e;
        for (int j = 0; j < layout.k; ++j) accumulate(e, layout.z(i, j), sigma_sqrt(j));
        compress(e.terms);
        entries.push_back(std::move(e));
      }
      if (var.phi > 0.0) program.add_cost(add_norm_epigraph(program, entries), var.phi);
      break;
    }
  }

  if (feas.mode == ReformMode::kAnalytic) {
    std::vector<double> eta_bar = feas.eta_bar;
    if (eta_bar.empty()) eta_bar.assign(prog.m(), feas.eta);
    add_analytic_constraints(program, layout, prog.A, prog.b, sigma_sqrt, eta_bar,
                             distribution_class(noise.kind));
  } else {
    out.box = scenario_box(out.compact_noise, feas.eta, feas.beta, feas.seed);
    add_box_constraints(program, layout, prog.A, prog.b, *out.box);
  }
  return out;
}

Recourse solve_recourse(const ConvexProgram& prog, const QuerySpec& query,
                        const NoiseSpec& noise, const FeasibilitySpec& feas,
                        const VarianceSpec& var, const SolverOptions& options) {
  const Assembly assembly = assemble(prog, query, noise, feas, var);
  const Solution sol = solve(assembly.program, options);
  if (sol.status == SolveStatus::kInfeasible) {
    if (!check_implementable(prog, query, options)) {
      throw Error(ErrorCode::kNotImplementable,
                  "no recourse satisfies the query constraints and G Z = 0");
    }
    throw Error(ErrorCode::kPrivacyTooStrong,
                "privacy parameters are too strong for the feasibility requirement");
  }
  if (sol.status != SolveStatus::kOptimal) {
    throw Error(ErrorCode::kSolverFailure,
                fmt::format("chance-constrained solve ended {}", status_name(sol.status)));
  }
  const RecourseLayout& layout = assembly.layout;
  Recourse out;
  out.z_tilde = layout.extract_z_tilde(sol.x);
  const Eigen::MatrixXd compact = layout.extract_compact_Z(sol.x);
  out.Z = Eigen::MatrixXd::Zero(prog.n(), noise.dim);
  for (int j = 0; j < layout.k; ++j) out.Z.col(layout.external_col[j]) = compact.col(j);
  out.query = query;
  out.noise = noise;
  out.feas = feas;
  out.var = var;
  out.objective = sol.objective;
  return out;
}

double expected_cost(const ConvexProgram& prog, const Eigen::VectorXd& z_tilde,
                     const Eigen::MatrixXd& Z, const Eigen::VectorXd& sigma) {
  double trace = 0.0;
  for (int i = 0; i < Z.rows(); ++i) {
    if (prog.c2(i) == 0.0) continue;
    trace += prog.c2(i) * Z.row(i).cwiseAbs2().dot(sigma);
  }
  return prog.cost(z_tilde) + trace;
}

double cost_std(const Eigen::VectorXd& c1, const Eigen::MatrixXd& Z,
                const Eigen::VectorXd& sigma) {
  return (Z.transpose() * c1).cwiseProduct(sigma.cwiseSqrt()).norm();
}

double solution_variance(const Eigen::MatrixXd& Z, const Eigen::VectorXd& sigma,
                         const std::vector<int>& rows) {
  if (rows.empty()) return (Z.cwiseAbs2() * sigma).sum();
  double total = 0.0;
  for (int i : rows) total += Z.row(i).cwiseAbs2().dot(sigma);
  return total;
}

}  // namespace dpcc
