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

#include "dpcc/mechanisms.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "dpcc/error.h"

namespace dpcc {

double max_violation(const ConvexProgram& prog, const Eigen::VectorXd& z) {
  if (prog.m() == 0) return 0.0;
  return std::max(0.0, (prog.A * z - prog.b).maxCoeff());
}

int composition_rounds(double eta, double mu) {
  if (!(eta > 0.0 && eta < 1.0) || !(mu > 0.0 && mu < 1.0)) {
    throw Error(ErrorCode::kInvalidSpec, "eta and mu must lie in (0, 1)");
  }
  return std::max(1, static_cast<int>(std::ceil(std::log(mu) / std::log(eta))));
}

NoiseSpec query_noise(const PrivacyParams& privacy, NoiseKind kind,
                      const QuerySpec& query, int n) {
  validate_query(query, n);
  if (query.kind == QueryKind::kSum) return calibrate(privacy, kind, query.noise_dim());
  std::vector<bool> released(n, false);
  for (int i : query.released) released[i] = true;
  std::vector<int> masked;
  for (int i = 0; i < n; ++i) {
    if (!released[i]) masked.push_back(i);
  }
  return calibrate(privacy, kind, n, masked);
}

namespace {

Provenance provenance_for(const char* name, const MechanismConfig& config,
                          const NoiseSpec& noise, std::uint64_t seed) {
  Provenance p;
  p.mechanism = name;
  p.seed = seed;
  p.scenario_seed = config.feas.seed;
  p.epsilon = config.privacy.epsilon;
  p.delta = config.privacy.delta;
  p.alpha = config.privacy.alpha;
  p.eta = config.feas.eta;
  p.phi = config.var.phi;
  p.reform = config.feas.mode;
  p.noise = noise.kind;
  p.noise_scale = noise.scale;
  return p;
}

}  // namespace

Eigen::VectorXd query_answer(const QuerySpec& query, const Eigen::VectorXd& z) {
  const int k = query.noise_dim();
  Eigen::VectorXd out(k);
  if (query.kind == QueryKind::kIdentity) {
    for (int a = 0; a < k; ++a) out(a) = z(query.released[a]);
  } else {
    for (int g = 0; g < k; ++g) {
      double s = 0.0;
      for (int i : query.groups[g]) s += z(i);
      out(g) = s;
    }
  }
  return out;
}

Release sample_release(const Recourse& recourse, const ConvexProgram& prog,
                       std::uint64_t seed) {
  Release r;
  r.kind = recourse.query.kind;
  r.xi = sample(recourse.noise, seed);
  r.z_hat = recourse.realize(r.xi);
  r.values = query_answer(recourse.query, r.z_hat);
  r.max_violation = max_violation(prog, r.z_hat);
  r.feasible = r.max_violation <= kCertificateTolerance;
  return r;
}

Release private_query(const ConvexProgram& prog, const QuerySpec& query,
                      const MechanismConfig& config, std::uint64_t seed) {
  const NoiseSpec noise = query_noise(config.privacy, config.noise, query, prog.n());
  const Recourse recourse =
      solve_recourse(prog, query, noise, config.feas, config.var, config.solver);
  Release r = sample_release(recourse, prog, seed);
  r.provenance = provenance_for(query.kind == QueryKind::kIdentity ? "piq" : "psq",
                                config, noise, seed);
  return r;
}

Release piq(const ConvexProgram& prog, const std::vector<int>& released,
            const MechanismConfig& config, std::uint64_t seed) {
  return private_query(prog, QuerySpec::identity(released), config, seed);
}

Release psq(const ConvexProgram& prog, const std::vector<std::vector<int>>& groups,
            const MechanismConfig& config, std::uint64_t seed) {
  return private_query(prog, QuerySpec::sum(groups), config, seed);
}

Release iterative(const ConvexProgram& prog, const QuerySpec& query,
                  const MechanismConfig& config, double mu, std::uint64_t seed) {
  const int T = composition_rounds(config.feas.eta, mu);
  PrivacyParams split = config.privacy;
  split.epsilon /= T;
  if (config.noise == NoiseKind::kGaussian) split.delta /= T;
  const NoiseSpec noise = query_noise(split, config.noise, query, prog.n());
  const Recourse recourse =
      solve_recourse(prog, query, noise, config.feas, config.var, config.solver);
  Release r;
  for (int t = 0; t < T; ++t) {
    r = sample_release(recourse, prog, derive_seed(seed, t));
    r.iterations = t + 1;
    if (r.feasible) break;
  }
  const char* name = query.kind == QueryKind::kIdentity ? "iterative-piq" : "iterative-psq";
  r.provenance = provenance_for(name, config, noise, seed);
  r.provenance.mu = mu;
  r.provenance.epsilon = config.privacy.epsilon;
  r.provenance.delta = config.privacy.delta;
  return r;
}

bool pinned_feasible(const ConvexProgram& prog, const Eigen::MatrixXd& E,
                     const Eigen::VectorXd& e, const SolverOptions& options,
                     Eigen::VectorXd* witness) {
  const int n = prog.n();
  ConicProgram lp(n);
  auto row_expr = [&](const Eigen::MatrixXd& M, int r) {
    LinearExpr expr;
    for (int j = 0; j < n; ++j) {
      if (M(r, j) != 0.0) expr.push_back({j, M(r, j)});
    }
    return expr;
  };
  for (int r = 0; r < prog.l(); ++r) lp.add_equality(row_expr(prog.G, r), prog.d(r));
  for (int r = 0; r < E.rows(); ++r) lp.add_equality(row_expr(E, r), e(r));
  for (int r = 0; r < prog.m(); ++r) lp.add_inequality(row_expr(prog.A, r), prog.b(r));
  const Solution sol = solve(lp, options);
  if (sol.status == SolveStatus::kInfeasible) return false;
  if (sol.status != SolveStatus::kOptimal) {
    throw Error(ErrorCode::kSolverFailure,
                fmt::format("feasibility solve ended {}", status_name(sol.status)));
  }
  if (witness != nullptr) *witness = sol.x;
  return true;
}

Release output_perturbation(const ConvexProgram& prog, const QuerySpec& query,
                            const MechanismConfig& config, std::uint64_t seed) {
  validate_query(query, prog.n());
  const BaseSolution base = solve_base(prog, config.solver);
  if (base.status != SolveStatus::kOptimal) {
    throw Error(ErrorCode::kSolverFailure,
                fmt::format("base solve ended {}", status_name(base.status)));
  }
  const NoiseSpec noise = calibrate(config.privacy, config.noise, query.noise_dim());
  Release r;
  r.kind = query.kind;
  const Eigen::VectorXd compact = sample(noise, seed);
  r.values = query_answer(query, base.z) + compact;
  if (query.kind == QueryKind::kIdentity) {
    r.xi = Eigen::VectorXd::Zero(prog.n());
    for (int a = 0; a < query.noise_dim(); ++a) r.xi(query.released[a]) = compact(a);
  } else {
    r.xi = compact;
  }
  Eigen::VectorXd witness;
  r.feasible = pinned_feasible(prog, query.selector(prog.n()), r.values, config.solver,
                               &witness);
  if (r.feasible) {
    r.z_hat = witness;
    r.max_violation = max_violation(prog, witness);
  } else {
    r.max_violation = std::numeric_limits<double>::infinity();
  }
  r.provenance = provenance_for("op", config, noise, seed);
  return r;
}

std::vector<ParetoRow> pareto_sweep(const ConvexProgram& prog, const QuerySpec& query,
                                    const MechanismConfig& config, VarianceMode mode,
                                    std::vector<double> phi_grid,
                                    const std::vector<int>& variance_rows) {
  if (mode == VarianceMode::kNone) {
    throw Error(ErrorCode::kInvalidSpec, "pareto sweep needs a variance mode");
  }
  std::sort(phi_grid.begin(), phi_grid.end());
  const BaseSolution base = solve_base(prog, config.solver);
  if (base.status != SolveStatus::kOptimal) {
    throw Error(ErrorCode::kSolverFailure,
                fmt::format("base solve ended {}", status_name(base.status)));
  }
  const double base_cost = prog.cost(base.z);
  if (std::abs(base_cost) < 1e-12) {
    throw Error(ErrorCode::kDegenerateBase, "base optimum has zero cost");
  }
  const NoiseSpec noise = query_noise(config.privacy, config.noise, query, prog.n());
  std::vector<ParetoRow> rows;
  for (double phi : phi_grid) {
    VarianceSpec var{mode, phi};
    const Recourse rec = solve_recourse(prog, query, noise, config.feas, var, config.solver);
    ParetoRow row;
    row.phi = phi;
    row.objective = rec.objective;
    row.expected_cost = expected_cost(prog, rec.z_tilde, rec.Z, noise.covariance);
    row.expected_loss = 100.0 * (row.expected_cost - base_cost) / std::abs(base_cost);
    const double sd = cost_std(prog.c1, rec.Z, noise.covariance);
    row.cost_variance = sd * sd;
    row.solution_variance = solution_variance(rec.Z, noise.covariance, variance_rows);
    rows.push_back(row);
  }
  return rows;
}

}  // namespace dpcc
