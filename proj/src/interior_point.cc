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

// Primal-dual interior-point method on the homogeneous self-dual embedding
//
//   min c'x  s.t.  A x = b,  G x + s = h,  s in K,
//
// where K is a product of a nonnegative orthant and second-order cones.
// Each iteration solves the regularized quasi-definite KKT system
//
//   [ dI   A'   G'      ] [dx]
//   [ A   -dI   0       ] [dy]
//   [ G    0   -W'W - dI] [dz]
//
// twice (once for the tau column, once for the right-hand side) with a sparse
// LDL' factorization (with signed dynamic regularization) and iterative refinement against the unregularized
// matrix.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <vector>

#include <Eigen/Sparse>
#include <Eigen/SparseQR>

#include "dpcc/conic.h"
#include "dpcc/error.h"
#include "ldl.h"

namespace dpcc {
namespace {

using SpMat = Eigen::SparseMatrix<double>;
using Vec = Eigen::VectorXd;

constexpr double kStaticReg = 1e-9;
constexpr double kPivotThreshold = 1e-13;
constexpr double kDynamicReg = 1e-7;
constexpr int kRefinementSteps = 12;
constexpr double kStepFraction = 0.99;
constexpr int kRuizPasses = 15;
constexpr double kInf = std::numeric_limits<double>::infinity();
// Tolerances accepted when the iteration breaks down before full accuracy.
constexpr double kReducedFeas = 1e-6;
constexpr double kReducedGap = 5e-5;

struct Cones {
  int orthant = 0;
  std::vector<int> soc_start;
  std::vector<int> soc_dim;
  int size = 0;

  int degree() const { return orthant + static_cast<int>(soc_dim.size()); }
};

struct StandardForm {
  int n = 0;
  int p = 0;
  int m = 0;
  SpMat A;
  SpMat G;
  Vec c;
  Vec b;
  Vec h;
  Cones cones;
};

void append_expr(std::vector<Eigen::Triplet<double>>& out, int row,
                 const LinearExpr& expr, double sign) {
  for (const Term& t : expr) {
    if (t.coef != 0.0) out.emplace_back(row, t.var, sign * t.coef);
  }
}

StandardForm to_standard_form(const ConicProgram& program) {
  StandardForm f;
  f.n = program.num_vars();
  f.p = static_cast<int>(program.equalities().size());
  f.c = program.objective();

  std::vector<Eigen::Triplet<double>> a_trip;
  f.b.resize(f.p);
  for (int i = 0; i < f.p; ++i) {
    const LinearRow& row = program.equalities()[i];
    append_expr(a_trip, i, row.expr, 1.0);
    f.b(i) = row.rhs;
  }
  f.A.resize(f.p, f.n);
  f.A.setFromTriplets(a_trip.begin(), a_trip.end());

  int m = static_cast<int>(program.inequalities().size());
  for (const SocConstraint& cone : program.socs()) m += cone.dim();
  f.m = m;
  f.h.resize(m);
  std::vector<Eigen::Triplet<double>> g_trip;
  int row = 0;
  for (const LinearRow& ineq : program.inequalities()) {
    append_expr(g_trip, row, ineq.expr, 1.0);
    f.h(row) = ineq.rhs;
    ++row;
  }
  f.cones.orthant = row;
  for (const SocConstraint& cone : program.socs()) {
    f.cones.soc_start.push_back(row);
    f.cones.soc_dim.push_back(cone.dim());
    // s = h - G x = (rhs(x) + rhs_const, lhs(x) + lhs_const).
    append_expr(g_trip, row, cone.rhs, -1.0);
    f.h(row) = cone.rhs_const;
    ++row;
    for (size_t k = 0; k < cone.lhs.size(); ++k) {
      append_expr(g_trip, row, cone.lhs[k], -1.0);
      f.h(row) = cone.lhs_const[k];
      ++row;
    }
  }
  f.cones.size = m;
  f.G.resize(m, f.n);
  f.G.setFromTriplets(g_trip.begin(), g_trip.end());
  return f;
}

// Ruiz equilibration of [A; G]; rows of one SOC share a scale factor.
struct Equilibration {
  Vec col;
  Vec eq_row;
  Vec cone_row;
};

Equilibration equilibrate(StandardForm& f) {
  Equilibration e{Vec::Ones(f.n), Vec::Ones(f.p), Vec::Ones(f.m)};
  for (int pass = 0; pass < kRuizPasses; ++pass) {
    Vec col_max = Vec::Zero(f.n);
    Vec eq_max = Vec::Zero(f.p);
    Vec cone_max = Vec::Zero(f.m);
    for (int j = 0; j < f.n; ++j) {
      for (SpMat::InnerIterator it(f.A, j); it; ++it) {
        const double v = std::abs(it.value());
        col_max(j) = std::max(col_max(j), v);
        eq_max(it.row()) = std::max(eq_max(it.row()), v);
      }
      for (SpMat::InnerIterator it(f.G, j); it; ++it) {
        const double v = std::abs(it.value());
        col_max(j) = std::max(col_max(j), v);
        cone_max(it.row()) = std::max(cone_max(it.row()), v);
      }
    }
    for (size_t k = 0; k < f.cones.soc_dim.size(); ++k) {
      const int start = f.cones.soc_start[k];
      const int dim = f.cones.soc_dim[k];
      const double block = cone_max.segment(start, dim).maxCoeff();
      cone_max.segment(start, dim).setConstant(block);
    }
    auto factor = [](double v) {
      return v > 0.0 ? std::clamp(1.0 / std::sqrt(v), 1e-3, 1e3) : 1.0;
    };
    Vec dc = col_max.unaryExpr(factor);
    Vec de = eq_max.unaryExpr(factor);
    Vec dg = cone_max.unaryExpr(factor);
    f.A = de.asDiagonal() * f.A * dc.asDiagonal();
    f.G = dg.asDiagonal() * f.G * dc.asDiagonal();
    e.col = e.col.cwiseProduct(dc);
    e.eq_row = e.eq_row.cwiseProduct(de);
    e.cone_row = e.cone_row.cwiseProduct(dg);
  }
  f.c = e.col.cwiseProduct(f.c);
  f.b = e.eq_row.cwiseProduct(f.b);
  f.h = e.cone_row.cwiseProduct(f.h);
  return e;
}

// ---------------------------------------------------------------------------
// Cone arithmetic. Vectors span the whole cone product; the orthant occupies
// the leading entries.

struct SocScale {
  double beta = 1.0;
  Vec w;  // normalized: w0^2 - |w1|^2 = 1
};

struct Scaling {
  Vec orthant_w;
  std::vector<SocScale> soc;
  Vec lambda;
};

double soc_residual(const Eigen::Ref<const Vec>& u) {
  return u(0) * u(0) - u.tail(u.size() - 1).squaredNorm();
}

// H(w) v with H(w) = [w0 w1'; w1 I + w1 w1'/(1+w0)].
Vec hyperbolic_apply(const Vec& w, const Eigen::Ref<const Vec>& v, double sign) {
  const int d = static_cast<int>(v.size());
  const double w0 = w(0);
  const auto w1 = w.tail(d - 1);
  const auto v1 = v.tail(d - 1);
  const double dot = sign * w1.dot(v1);
  Vec out(d);
  out(0) = w0 * v(0) + dot;
  out.tail(d - 1) = v1 + sign * (v(0) + dot / (1.0 + w0)) * w1;
  return out;
}

Eigen::MatrixXd hyperbolic_matrix(const Vec& w) {
  const int d = static_cast<int>(w.size());
  Eigen::MatrixXd H = Eigen::MatrixXd::Identity(d, d);
  const auto w1 = w.tail(d - 1);
  H(0, 0) = w(0);
  H.block(0, 1, 1, d - 1) = w1.transpose();
  H.block(1, 0, d - 1, 1) = w1;
  H.block(1, 1, d - 1, d - 1) += w1 * w1.transpose() / (1.0 + w(0));
  return H;
}

bool compute_scaling(const Cones& cones, const Vec& s, const Vec& z,
                     Scaling& out) {
  const int l = cones.orthant;
  out.orthant_w.resize(l);
  out.lambda.resize(cones.size);
  for (int i = 0; i < l; ++i) {
    if (!(s(i) > 0.0) || !(z(i) > 0.0)) return false;
    out.orthant_w(i) = std::sqrt(s(i) / z(i));
    out.lambda(i) = std::sqrt(s(i) * z(i));
  }
  out.soc.resize(cones.soc_dim.size());
  for (size_t k = 0; k < cones.soc_dim.size(); ++k) {
    const int start = cones.soc_start[k];
    const int d = cones.soc_dim[k];
    const auto sk = s.segment(start, d);
    const auto zk = z.segment(start, d);
    const double sres = soc_residual(sk);
    const double zres = soc_residual(zk);
    if (!(sres > 0.0) || !(zres > 0.0) || sk(0) <= 0.0 || zk(0) <= 0.0) {
      return false;
    }
    const Vec sbar = sk / std::sqrt(sres);
    const Vec zbar = zk / std::sqrt(zres);
    const double gamma = std::sqrt(0.5 * (1.0 + sbar.dot(zbar)));
    SocScale& sc = out.soc[k];
    sc.w.resize(d);
    sc.w(0) = (sbar(0) + zbar(0)) / (2.0 * gamma);
    sc.w.tail(d - 1) = (sbar.tail(d - 1) - zbar.tail(d - 1)) / (2.0 * gamma);
    // Renormalize against rounding drift.
    sc.w(0) = std::sqrt(1.0 + sc.w.tail(d - 1).squaredNorm());
    sc.beta = std::pow(sres / zres, 0.25);
    out.lambda.segment(start, d) = sc.beta * hyperbolic_apply(sc.w, zk, 1.0);
  }
  return true;
}

Vec apply_w(const Cones& cones, const Scaling& sc, const Vec& v) {
  Vec out(cones.size);
  out.head(cones.orthant) = sc.orthant_w.cwiseProduct(v.head(cones.orthant));
  for (size_t k = 0; k < cones.soc_dim.size(); ++k) {
    const int start = cones.soc_start[k];
    const int d = cones.soc_dim[k];
    out.segment(start, d) =
        sc.soc[k].beta * hyperbolic_apply(sc.soc[k].w, v.segment(start, d), 1.0);
  }
  return out;
}

Vec apply_w_inverse(const Cones& cones, const Scaling& sc, const Vec& v) {
  Vec out(cones.size);
  out.head(cones.orthant) = v.head(cones.orthant).cwiseQuotient(sc.orthant_w);
  for (size_t k = 0; k < cones.soc_dim.size(); ++k) {
    const int start = cones.soc_start[k];
    const int d = cones.soc_dim[k];
    out.segment(start, d) = hyperbolic_apply(sc.soc[k].w, v.segment(start, d),
                                             -1.0) /
                            sc.soc[k].beta;
  }
  return out;
}

// Jordan product u o v.
Vec jordan_product(const Cones& cones, const Vec& u, const Vec& v) {
  Vec out(cones.size);
  out.head(cones.orthant) = u.head(cones.orthant).cwiseProduct(v.head(cones.orthant));
  for (size_t k = 0; k < cones.soc_dim.size(); ++k) {
    const int start = cones.soc_start[k];
    const int d = cones.soc_dim[k];
    const auto uk = u.segment(start, d);
    const auto vk = v.segment(start, d);
    out(start) = uk.dot(vk);
    out.segment(start + 1, d - 1) =
        uk(0) * vk.tail(d - 1) + vk(0) * uk.tail(d - 1);
  }
  return out;
}

// Solves lambda o x = v.
Vec jordan_divide(const Cones& cones, const Vec& lambda, const Vec& v) {
  Vec out(cones.size);
  out.head(cones.orthant) =
      v.head(cones.orthant).cwiseQuotient(lambda.head(cones.orthant));
  for (size_t k = 0; k < cones.soc_dim.size(); ++k) {
    const int start = cones.soc_start[k];
    const int d = cones.soc_dim[k];
    const auto lk = lambda.segment(start, d);
    const auto vk = v.segment(start, d);
    const double rho = soc_residual(lk);
    const double x0 = (lk(0) * vk(0) - lk.tail(d - 1).dot(vk.tail(d - 1))) / rho;
    out(start) = x0;
    out.segment(start + 1, d - 1) = (vk.tail(d - 1) - x0 * lk.tail(d - 1)) / lk(0);
  }
  return out;
}

Vec cone_identity(const Cones& cones) {
  Vec e = Vec::Zero(cones.size);
  e.head(cones.orthant).setOnes();
  for (int start : cones.soc_start) e(start) = 1.0;
  return e;
}

// Largest step alpha with u + alpha du in the cone (infinity if unbounded).
double max_step(const Cones& cones, const Vec& u, const Vec& du) {
  double alpha = std::numeric_limits<double>::infinity();
  for (int i = 0; i < cones.orthant; ++i) {
    if (du(i) < 0.0) alpha = std::min(alpha, -u(i) / du(i));
  }
  for (size_t k = 0; k < cones.soc_dim.size(); ++k) {
    const int start = cones.soc_start[k];
    const int d = cones.soc_dim[k];
    const auto uk = u.segment(start, d);
    const auto dk = du.segment(start, d);
    // f(a) = qa a^2 + 2 qb a + qc is the J-norm of u + a du.
    const double qa = dk(0) * dk(0) - dk.tail(d - 1).squaredNorm();
    const double qb = uk(0) * dk(0) - uk.tail(d - 1).dot(dk.tail(d - 1));
    const double qc = std::max(soc_residual(uk), 0.0);
    double root = std::numeric_limits<double>::infinity();
    if (std::abs(qa) < 1e-300) {
      if (qb < 0.0) root = -qc / (2.0 * qb);
    } else {
      const double disc = qb * qb - qa * qc;
      if (disc >= 0.0) {
        const double sq = std::sqrt(disc);
        const double q = -(qb + std::copysign(sq, qb));
        const double r1 = q / qa;
        const double r2 = q != 0.0 ? qc / q : std::numeric_limits<double>::infinity();
        if (r1 > 0.0) root = std::min(root, r1);
        if (r2 > 0.0) root = std::min(root, r2);
      }
    }
    // The first coordinate must stay positive along the way.
    if (dk(0) < 0.0) root = std::min(root, -uk(0) / dk(0));
    alpha = std::min(alpha, root);
  }
  return alpha;
}

double cone_shift(const Cones& cones, const Vec& u) {
  double shift = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < cones.orthant; ++i) shift = std::max(shift, -u(i));
  for (size_t k = 0; k < cones.soc_dim.size(); ++k) {
    const int start = cones.soc_start[k];
    const int d = cones.soc_dim[k];
    shift = std::max(shift, u.segment(start + 1, d - 1).norm() - u(start));
  }
  return shift;
}

// Pushes u into the interior along the identity element.
void make_interior(const Cones& cones, Vec& u) {
  if (cones.size == 0) return;
  const double shift = cone_shift(cones, u);
  if (shift >= 0.0) u += (1.0 + shift) * cone_identity(cones);
}

// ---------------------------------------------------------------------------

std::vector<int> pivot_signs(const StandardForm& f) {
  std::vector<int> signs(f.n + f.p + f.m, -1);
  for (int j = 0; j < f.n; ++j) signs[j] = 1;
  return signs;
}

class KktSystem {
 public:
  explicit KktSystem(const StandardForm& f)
      : f_(f), dim_(f.n + f.p + f.m), ldl_(pivot_signs(f), kPivotThreshold, kDynamicReg) {}

  bool factor(const Scaling* sc) {
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(f_.A.nonZeros() + f_.G.nonZeros() + dim_ * 2);
    for (int j = 0; j < f_.n; ++j) trip.emplace_back(j, j, kStaticReg);
    for (int j = 0; j < f_.n; ++j) {
      for (SpMat::InnerIterator it(f_.A, j); it; ++it) {
        trip.emplace_back(f_.n + it.row(), j, it.value());
      }
      for (SpMat::InnerIterator it(f_.G, j); it; ++it) {
        trip.emplace_back(f_.n + f_.p + it.row(), j, it.value());
      }
    }
    for (int i = 0; i < f_.p; ++i) trip.emplace_back(f_.n + i, f_.n + i, -kStaticReg);
    const int off = f_.n + f_.p;
    const Cones& cones = f_.cones;
    orthant_w2_.resize(cones.orthant);
    for (int i = 0; i < cones.orthant; ++i) {
      orthant_w2_(i) = sc ? sc->orthant_w(i) * sc->orthant_w(i) : 1.0;
      trip.emplace_back(off + i, off + i, -orthant_w2_(i) - kStaticReg);
    }
    soc_w2_.resize(cones.soc_dim.size());
    for (size_t k = 0; k < cones.soc_dim.size(); ++k) {
      const int start = cones.soc_start[k];
      const int d = cones.soc_dim[k];
      if (sc) {
        const Eigen::MatrixXd H = hyperbolic_matrix(sc->soc[k].w);
        soc_w2_[k] = sc->soc[k].beta * sc->soc[k].beta * (H * H);
      } else {
        soc_w2_[k] = Eigen::MatrixXd::Identity(d, d);
      }
      for (int c = 0; c < d; ++c) {
        for (int r = c; r < d; ++r) {
          double v = -soc_w2_[k](r, c);
          if (r == c) v -= kStaticReg;
          trip.emplace_back(off + start + r, off + start + c, v);
        }
      }
    }
    SpMat K(dim_, dim_);
    K.setFromTriplets(trip.begin(), trip.end());
    return ldl_.factor(K);
  }

  Vec solve(const Vec& rhs) const {
    Vec sol = ldl_.solve(rhs);
    const double scale = 1.0 + rhs.lpNorm<Eigen::Infinity>();
    Vec residual = rhs - multiply(sol);
    double norm = residual.allFinite() ? residual.lpNorm<Eigen::Infinity>() : kInf;
    for (int step = 0; step < kRefinementSteps; ++step) {
      if (norm <= 1e-14 * scale) break;
      // Near-singular systems can make refinement diverge; keep the best iterate.
      Vec trial = sol + ldl_.solve(residual);
      Vec trial_res = rhs - multiply(trial);
      if (!trial.allFinite() || !trial_res.allFinite()) break;
      const double trial_norm = trial_res.lpNorm<Eigen::Infinity>();
      if (trial_norm >= norm) break;
      sol = std::move(trial);
      residual = std::move(trial_res);
      norm = trial_norm;
    }
    return sol;
  }

 private:
  Vec multiply(const Vec& v) const {
    const int n = f_.n;
    const int p = f_.p;
    const int m = f_.m;
    const auto vx = v.head(n);
    const auto vy = v.segment(n, p);
    const auto vz = v.tail(m);
    Vec out(dim_);
    out.head(n) = f_.A.transpose() * vy + f_.G.transpose() * vz;
    out.segment(n, p) = f_.A * vx;
    Vec oz = f_.G * vx;
    const Cones& cones = f_.cones;
    oz.head(cones.orthant) -= orthant_w2_.cwiseProduct(vz.head(cones.orthant));
    for (size_t k = 0; k < cones.soc_dim.size(); ++k) {
      const int start = cones.soc_start[k];
      const int d = cones.soc_dim[k];
      oz.segment(start, d) -= soc_w2_[k] * vz.segment(start, d);
    }
    out.tail(m) = oz;
    return out;
  }

  const StandardForm& f_;
  int dim_;
  internal::QuasiDefiniteLdl ldl_;
  Vec orthant_w2_;
  std::vector<Eigen::MatrixXd> soc_w2_;
};

struct Iterate {
  Vec x, y, z, s;
  double tau = 1.0;
  double kappa = 1.0;
};

struct Direction {
  Vec dx, dy, dz, ds;
  double dtau = 0.0;
  double dkappa = 0.0;
};

// Unscaled quality measures of the current iterate.
struct Assessment {
  Residuals res;
  double pobj = 0.0;
  double dobj = 0.0;
  double slack_residual = 0.0;
  double comp = 0.0;
  double cnorm = 0.0;
  double primal_cert = kInf;  // ratio for a primal infeasibility certificate
  double dual_cert = kInf;
  bool optimal = false;
  bool primal_infeasible = false;
  bool dual_infeasible = false;
  Vec x, y, z;
};

void classify(Assessment& a, const ToleranceSpec& tol) {
  a.optimal = a.res.equality <= tol.feas && a.res.inequality <= tol.feas &&
              a.res.cone <= tol.feas && a.res.dual <= tol.feas * (1.0 + a.cnorm) &&
              (a.res.relative_gap <= tol.gap || std::abs(a.comp) <= tol.gap * 1e-2);
  a.primal_infeasible = a.primal_cert <= tol.feas;
  a.dual_infeasible = a.dual_cert <= tol.feas;
}

double inf_norm(const Vec& v) { return v.size() ? v.lpNorm<Eigen::Infinity>() : 0.0; }

Assessment assess(const StandardForm& orig, const Equilibration& eq,
                  const Iterate& it, const ToleranceSpec& tol) {
  Assessment a;
  const Vec x = eq.col.cwiseProduct(it.x);
  const Vec y = eq.eq_row.cwiseProduct(it.y);
  const Vec z = eq.cone_row.cwiseProduct(it.z);
  const Vec s = it.s.cwiseQuotient(eq.cone_row);

  const Vec xh = x / it.tau;
  const Vec yh = y / it.tau;
  const Vec zh = z / it.tau;
  const Vec sh = s / it.tau;

  a.res.equality = inf_norm(orig.A * xh - orig.b);
  const Vec u = orig.h - orig.G * xh;  // should lie in K
  const Cones& cones = orig.cones;
  double lin = 0.0;
  for (int i = 0; i < cones.orthant; ++i) lin = std::max(lin, -u(i));
  double soc = 0.0;
  for (size_t k = 0; k < cones.soc_dim.size(); ++k) {
    const int start = cones.soc_start[k];
    const int d = cones.soc_dim[k];
    soc = std::max(soc, u.segment(start + 1, d - 1).norm() - u(start));
  }
  a.res.inequality = lin;
  a.res.cone = soc;
  a.slack_residual = inf_norm(u - sh);
  a.res.dual = inf_norm(orig.A.transpose() * yh + orig.G.transpose() * zh + orig.c);
  a.pobj = orig.c.dot(xh);
  a.dobj = -orig.b.dot(yh) - orig.h.dot(zh);
  a.res.gap = std::abs(a.pobj - a.dobj);
  a.res.relative_gap =
      a.res.gap / std::max(1.0, std::min(std::abs(a.pobj), std::abs(a.dobj)));
  a.comp = sh.dot(zh);
  a.cnorm = inf_norm(orig.c);
  a.x = xh;
  a.y = yh;
  a.z = zh;

  // Certificates use the unnormalized (tau-free) iterate.
  const double bz = orig.b.dot(y) + orig.h.dot(z);
  if (bz < 0.0) {
    a.primal_cert = inf_norm(orig.A.transpose() * y + orig.G.transpose() * z) / -bz;
  }
  const double cx = orig.c.dot(x);
  if (cx < 0.0) {
    a.dual_cert = std::max(inf_norm(orig.A * x), inf_norm(orig.G * x + s)) / -cx;
  }
  classify(a, tol);
  return a;
}

double step_length(const Cones& cones, const Iterate& it, const Direction& d) {
  double alpha = std::min(max_step(cones, it.s, d.ds), max_step(cones, it.z, d.dz));
  if (d.dtau < 0.0) alpha = std::min(alpha, -it.tau / d.dtau);
  if (d.dkappa < 0.0) alpha = std::min(alpha, -it.kappa / d.dkappa);
  return alpha;
}

// Drops equality rows that are linear combinations of earlier kept rows.
// Returns false (and fills `certificate`) when a dropped row's right-hand side
// disagrees with the combination, i.e. the equalities are inconsistent.
struct EqualityPresolve {
  std::vector<int> kept;
  bool consistent = true;
  Vec certificate;  // y with A'y = 0 and b'y < 0 when inconsistent
};

EqualityPresolve presolve_equalities(const StandardForm& f) {
  EqualityPresolve out;
  if (f.p == 0) return out;
  SpMat at = f.A.transpose();
  at.makeCompressed();
  Eigen::SparseQR<SpMat, Eigen::COLAMDOrdering<int>> qr;
  double max_norm = 0.0;
  for (int j = 0; j < at.cols(); ++j) max_norm = std::max(max_norm, at.col(j).norm());
  qr.setPivotThreshold(1e-10 * std::max(1.0, max_norm));
  qr.compute(at);
  if (qr.info() != Eigen::Success) {
    for (int i = 0; i < f.p; ++i) out.kept.push_back(i);
    return out;
  }
  const int rank = static_cast<int>(qr.rank());
  if (rank == f.p) {
    for (int i = 0; i < f.p; ++i) out.kept.push_back(i);
    return out;
  }
  const auto perm = qr.colsPermutation().indices();
  std::vector<bool> keep(f.p, false);
  for (int k = 0; k < rank; ++k) keep[perm(k)] = true;
  for (int i = 0; i < f.p; ++i) {
    if (keep[i]) out.kept.push_back(i);
  }
  // Express every dropped row through the kept ones and compare rhs.
  Eigen::MatrixXd basis(f.n, rank);
  Vec b_kept(rank);
  const Eigen::MatrixXd dense_at = Eigen::MatrixXd(at);
  for (int k = 0; k < rank; ++k) {
    basis.col(k) = dense_at.col(out.kept[k]);
    b_kept(k) = f.b(out.kept[k]);
  }
  const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> dense_qr(basis);
  for (int i = 0; i < f.p; ++i) {
    if (keep[i]) continue;
    const Vec lambda = dense_qr.solve(dense_at.col(i));
    const double mismatch = f.b(i) - lambda.dot(b_kept);
    const double scale = 1.0 + std::abs(f.b(i)) + lambda.cwiseAbs().dot(b_kept.cwiseAbs());
    if (std::abs(mismatch) > 1e-9 * scale) {
      out.consistent = false;
      out.certificate = Vec::Zero(f.p);
      out.certificate(i) = 1.0;
      for (int k = 0; k < rank; ++k) out.certificate(out.kept[k]) = -lambda(k);
      out.certificate /= -mismatch;  // normalized so that b'y = -1
      return out;
    }
  }
  return out;
}

StandardForm select_equalities(const StandardForm& f, const std::vector<int>& rows) {
  StandardForm g = f;
  g.p = static_cast<int>(rows.size());
  std::vector<Eigen::Triplet<double>> trip;
  const SpMat ar = f.A;  // column-major; walk all entries
  std::vector<int> where(f.p, -1);
  for (int k = 0; k < g.p; ++k) where[rows[k]] = k;
  for (int j = 0; j < ar.outerSize(); ++j) {
    for (SpMat::InnerIterator itr(ar, j); itr; ++itr) {
      if (where[itr.row()] >= 0) trip.emplace_back(where[itr.row()], j, itr.value());
    }
  }
  g.A.resize(g.p, f.n);
  g.A.setFromTriplets(trip.begin(), trip.end());
  g.b.resize(g.p);
  for (int k = 0; k < g.p; ++k) g.b(k) = f.b(rows[k]);
  return g;
}

}  // namespace

Solution InteriorPointBackend::solve(const ConicProgram& program,
                                     const ToleranceSpec& tol) const {
  program.validate();
  const StandardForm full = to_standard_form(program);
  const EqualityPresolve pre = presolve_equalities(full);
  if (!pre.consistent) {
    Solution bad;
    bad.status = SolveStatus::kInfeasible;
    bad.x = Vec::Zero(full.n);
    bad.equality_duals = pre.certificate;
    bad.cone_duals = Vec::Zero(full.m);
    bad.objective = program.objective_offset();
    bad.residuals.equality = std::numeric_limits<double>::infinity();
    return bad;
  }
  const bool reduced = static_cast<int>(pre.kept.size()) < full.p;
  const StandardForm orig = reduced ? select_equalities(full, pre.kept) : full;
  StandardForm f = orig;
  const Equilibration eq = equilibrate(f);
  const Cones& cones = f.cones;
  const int n = f.n;
  const int p = f.p;
  const int m = f.m;

  Solution sol;
  sol.x = Vec::Zero(n);
  auto finish = [&](const Assessment& a, SolveStatus status, int iters) {
    sol.status = status;
    sol.iterations = iters;
    sol.residuals = a.res;
    if (status == SolveStatus::kInfeasible || status == SolveStatus::kUnbounded) {
      sol.x = a.x * 0.0;
    } else {
      sol.x = a.x;
    }
    sol.objective = program.evaluate_objective(sol.x);
    sol.dual_objective = a.dobj + program.objective_offset();
    if (reduced) {
      sol.equality_duals = Vec::Zero(full.p);
      for (size_t k = 0; k < pre.kept.size(); ++k) {
        sol.equality_duals(pre.kept[k]) = a.y(static_cast<int>(k));
      }
    } else {
      sol.equality_duals = a.y;
    }
    sol.cone_duals = a.z;
    return sol;
  };

  // Rescales the duals so that b'y + h'z = -1.
  auto finish_infeasible = [&](Assessment& a, int iters) {
    const double bz = orig.b.dot(a.y) + orig.h.dot(a.z);
    a.y /= -bz;
    a.z /= -bz;
    return finish(a, SolveStatus::kInfeasible, iters);
  };

  KktSystem kkt(f);
  if (!kkt.factor(nullptr)) {
    sol.status = SolveStatus::kNumericalFailure;
    return sol;
  }

  Iterate it;
  {
    Vec rhs(n + p + m);
    rhs << Vec::Zero(n), f.b, f.h;
    const Vec primal = kkt.solve(rhs);
    it.x = primal.head(n);
    it.s = -primal.tail(m);
    make_interior(cones, it.s);
    rhs << -f.c, Vec::Zero(p), Vec::Zero(m);
    const Vec dual = kkt.solve(rhs);
    it.y = dual.segment(n, p);
    it.z = dual.tail(m);
    make_interior(cones, it.z);
  }

  const Vec e = cone_identity(cones);
  const double degree = cones.degree() + 1.0;
  Assessment last;
  int last_iter = 0;
  Vec rhs(n + p + m);

  for (int iter = 0; iter <= tol.max_iterations; ++iter) {
    last = assess(orig, eq, it, tol);
    if (tol.verbose) {
      std::fprintf(stderr,
                   "%3d pobj %+.9e dobj %+.9e eq %.2e lin %.2e soc %.2e "
                   "dual %.2e gap %.2e slack %.2e tau %.2e kap %.2e\n",
                   iter, last.pobj, last.dobj, last.res.equality,
                   last.res.inequality, last.res.cone, last.res.dual,
                   last.res.relative_gap, last.slack_residual, it.tau, it.kappa);
    }
    if (last.optimal) return finish(last, SolveStatus::kOptimal, iter);
    if (last.primal_infeasible) return finish_infeasible(last, iter);
    if (last.dual_infeasible) return finish(last, SolveStatus::kUnbounded, iter);
    last_iter = iter;
    if (iter == tol.max_iterations) break;

    Scaling sc;
    if (!compute_scaling(cones, it.s, it.z, sc)) {
      if (tol.verbose) std::fprintf(stderr, "    scaling failed\n");
      break;
    }
    if (!kkt.factor(&sc)) {
      if (tol.verbose) std::fprintf(stderr, "    factorization failed\n");
      break;
    }

    const Vec rx = f.A.transpose() * it.y + f.G.transpose() * it.z + f.c * it.tau;
    const Vec ry = f.A * it.x - f.b * it.tau;
    const Vec rz = f.G * it.x + it.s - f.h * it.tau;
    const double rt = it.kappa + f.c.dot(it.x) + f.b.dot(it.y) + f.h.dot(it.z);
    const double mu = (it.s.dot(it.z) + it.tau * it.kappa) / degree;

    rhs << -f.c, f.b, f.h;
    const Vec sol1 = kkt.solve(rhs);
    const auto x1 = sol1.head(n);
    const auto y1 = sol1.segment(n, p);
    const auto z1 = sol1.tail(m);
    const double denom =
        f.c.dot(x1) + f.b.dot(y1) + f.h.dot(z1) - it.kappa / it.tau;

    // Solves for a direction given the complementarity targets ds_target
    // (for lambda o (W dz + W^-T ds)) and dk_target (for tau dk + kappa dt).
    auto direction = [&](double eta, const Vec& ds_target, double dk_target) {
      const Vec ldiv = jordan_divide(cones, sc.lambda, ds_target);
      const Vec w_ldiv = apply_w(cones, sc, ldiv);
      rhs << -eta * rx, -eta * ry, -eta * rz - w_ldiv;
      const Vec sol2 = kkt.solve(rhs);
      Direction d;
      const double num = -eta * rt - dk_target / it.tau - f.c.dot(sol2.head(n)) -
                         f.b.dot(sol2.segment(n, p)) - f.h.dot(sol2.tail(m));
      d.dtau = num / denom;
      d.dx = sol2.head(n) + d.dtau * x1;
      d.dy = sol2.segment(n, p) + d.dtau * y1;
      d.dz = sol2.tail(m) + d.dtau * z1;
      d.ds = apply_w(cones, sc, ldiv - apply_w(cones, sc, d.dz));
      d.dkappa = (dk_target - it.kappa * d.dtau) / it.tau;
      return d;
    };

    const Vec lam_sq = jordan_product(cones, sc.lambda, sc.lambda);
    const Direction aff = direction(1.0, -lam_sq, -it.kappa * it.tau);
    const double alpha_aff = std::min(1.0, step_length(cones, it, aff));
    const double sigma = std::clamp(std::pow(1.0 - alpha_aff, 3), 0.0, 1.0);

    const Vec corr = jordan_product(cones, apply_w_inverse(cones, sc, aff.ds),
                                    apply_w(cones, sc, aff.dz));
    const Vec ds_target = -lam_sq - corr + sigma * mu * e;
    const double dk_target =
        -it.kappa * it.tau - aff.dkappa * aff.dtau + sigma * mu;
    const Direction d = direction(1.0 - sigma, ds_target, dk_target);
    const double alpha = std::min(1.0, kStepFraction * step_length(cones, it, d));
    if (tol.verbose) {
      std::fprintf(stderr, "    sigma %.3e alpha_aff %.3e alpha %.3e dtau %.3e\n", sigma,
                   alpha_aff, alpha, d.dtau);
    }
    const bool finite = std::isfinite(d.dtau) && std::isfinite(d.dkappa) && d.dx.allFinite() &&
                        d.dy.allFinite() && d.dz.allFinite() && d.ds.allFinite();
    if (!finite || !std::isfinite(alpha) || alpha < 1e-12) break;

    it.x += alpha * d.dx;
    it.y += alpha * d.dy;
    it.z += alpha * d.dz;
    it.s += alpha * d.ds;
    it.tau += alpha * d.dtau;
    it.kappa += alpha * d.dkappa;
    if (!it.x.allFinite() || !it.z.allFinite() || !it.s.allFinite() ||
        !(it.tau > 0.0) || !(it.kappa > 0.0)) {
      break;
    }
  }
  // Breakdown: settle for reduced accuracy when the last iterate allows it.
  ToleranceSpec relaxed = tol;
  relaxed.feas = std::max(tol.feas, kReducedFeas);
  relaxed.gap = std::max(tol.gap, kReducedGap);
  classify(last, relaxed);
  sol.reduced_accuracy = true;
  if (last.optimal) return finish(last, SolveStatus::kOptimal, last_iter);
  if (last.primal_infeasible) return finish_infeasible(last, last_iter);
  if (last.dual_infeasible) return finish(last, SolveStatus::kUnbounded, last_iter);
  sol.reduced_accuracy = false;
  return finish(last, SolveStatus::kNumericalFailure, last_iter);
}

}  // namespace dpcc
