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

// Brute-force vertex enumeration for small bounded LPs. Test-only; shares no
// code with the interior-point solver.

#ifndef DPCC_TESTS_LP_ORACLE_H_
#define DPCC_TESTS_LP_ORACLE_H_

#include <limits>
#include <vector>

#include <Eigen/Dense>

namespace dpcc::testing {

struct OracleResult {
  bool feasible = false;
  double objective = std::numeric_limits<double>::infinity();
  Eigen::VectorXd x;
};

// min c'x  s.t.  A x <= b,  E x = f. The feasible set must be bounded and the
// rows of E linearly independent.
inline OracleResult enumerate_vertices(const Eigen::VectorXd& c,
                                       const Eigen::MatrixXd& A,
                                       const Eigen::VectorXd& b,
                                       const Eigen::MatrixXd& E,
                                       const Eigen::VectorXd& f,
                                       double feas_tol = 1e-9) {
  const int n = static_cast<int>(c.size());
  const int m = static_cast<int>(A.rows());
  const int k = static_cast<int>(E.rows());
  const int pick = n - k;
  OracleResult best;
  if (pick < 0 || pick > m) return best;
  std::vector<int> idx(pick);
  for (int i = 0; i < pick; ++i) idx[i] = i;
  while (true) {
    Eigen::MatrixXd M(n, n);
    Eigen::VectorXd r(n);
    for (int i = 0; i < k; ++i) {
      M.row(i) = E.row(i);
      r(i) = f(i);
    }
    for (int i = 0; i < pick; ++i) {
      M.row(k + i) = A.row(idx[i]);
      r(k + i) = b(idx[i]);
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(M);
    if (lu.rank() == n) {
      const Eigen::VectorXd x = lu.solve(r);
      const bool ok =
          (m == 0 || (A * x - b).maxCoeff() <= feas_tol) &&
          (k == 0 || (E * x - f).cwiseAbs().maxCoeff() <= feas_tol);
      if (ok) {
        const double obj = c.dot(x);
        if (!best.feasible || obj < best.objective) {
          best.feasible = true;
          best.objective = obj;
          best.x = x;
        }
      }
    }
    // Next combination in lexicographic order.
    int i = pick - 1;
    while (i >= 0 && idx[i] == m - pick + i) --i;
    if (i < 0) break;
    ++idx[i];
    for (int j = i + 1; j < pick; ++j) idx[j] = idx[j - 1] + 1;
  }
  return best;
}

}  // namespace dpcc::testing

#endif  // DPCC_TESTS_LP_ORACLE_H_
