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

#include "ldl.h"

#include <cmath>

#include <Eigen/OrderingMethods>

namespace dpcc::internal {

void QuasiDefiniteLdl::analyze(const SpMat& upper) {
  const int n = static_cast<int>(upper.cols());
  etree_.assign(n, -1);
  col_counts_.assign(n, 0);
  std::vector<int> work(n, -1);
  // Elimination tree and column counts from the upper triangle.
  for (int j = 0; j < n; ++j) {
    work[j] = j;
    for (SpMat::InnerIterator it(upper, j); it; ++it) {
      int i = static_cast<int>(it.row());
      if (i >= j) continue;
      while (work[i] != j) {
        if (etree_[i] == -1) etree_[i] = j;
        ++col_counts_[i];
        work[i] = j;
        i = etree_[i];
      }
    }
  }
  lp_.assign(n + 1, 0);
  for (int i = 0; i < n; ++i) lp_[i + 1] = lp_[i] + col_counts_[i];
  li_.assign(lp_[n], 0);
  lx_.assign(lp_[n], 0.0);
  d_.assign(n, 0.0);
}

bool QuasiDefiniteLdl::factor(const SpMat& lower) {
  const int n = static_cast<int>(lower.cols());
  if (static_cast<int>(signs_.size()) != n) return false;
  if (!analyzed_) {
    Eigen::AMDOrdering<int> ordering;
    SpMat full = lower.selfadjointView<Eigen::Lower>();
    ordering(full, perm_inv_);
    perm_ = perm_inv_.inverse();
    permuted_signs_.assign(n, 0);
    for (int i = 0; i < n; ++i) permuted_signs_[perm_.indices()(i)] = signs_[i];
  }
  SpMat upper(n, n);
  upper.selfadjointView<Eigen::Upper>() =
      lower.selfadjointView<Eigen::Lower>().twistedBy(perm_);
  upper.makeCompressed();
  if (!analyzed_) {
    analyze(upper);
    analyzed_ = true;
  }

  regularized_ = 0;
  std::vector<double> y(n, 0.0);
  std::vector<char> marked(n, 0);
  std::vector<int> pattern(n);
  std::vector<int> stack(n);
  std::vector<int> next(lp_.begin(), lp_.end() - 1);
  for (int k = 0; k < n; ++k) {
    // Scatter column k of the upper triangle and find the row pattern of L.
    int top = 0;
    d_[k] = 0.0;
    for (SpMat::InnerIterator it(upper, k); it; ++it) {
      const int i = static_cast<int>(it.row());
      if (i == k) {
        d_[k] = it.value();
        continue;
      }
      if (i > k) continue;
      y[i] = it.value();
      if (marked[i]) continue;
      int len = 0;
      int node = i;
      while (node != -1 && node < k && !marked[node]) {
        marked[node] = 1;
        stack[len++] = node;
        node = etree_[node];
      }
      while (len > 0) pattern[top++] = stack[--len];
    }
    for (int t = top - 1; t >= 0; --t) {
      const int c = pattern[t];
      const double yc = y[c];
      for (int p = lp_[c]; p < next[c]; ++p) y[li_[p]] -= lx_[p] * yc;
      const double l = yc / d_[c];
      li_[next[c]] = k;
      lx_[next[c]] = l;
      ++next[c];
      d_[k] -= yc * l;
      y[c] = 0.0;
      marked[c] = 0;
    }
    const int sign = permuted_signs_[k];
    if (!std::isfinite(d_[k])) return false;
    if (sign * d_[k] <= threshold_) {
      d_[k] = sign * delta_;
      ++regularized_;
    }
  }
  return true;
}

Eigen::VectorXd QuasiDefiniteLdl::solve(const Eigen::VectorXd& rhs) const {
  const int n = static_cast<int>(d_.size());
  Eigen::VectorXd x = perm_ * rhs;
  for (int i = 0; i < n; ++i) {
    const double xi = x(i);
    for (int p = lp_[i]; p < lp_[i + 1]; ++p) x(li_[p]) -= lx_[p] * xi;
  }
  for (int i = 0; i < n; ++i) x(i) /= d_[i];
  for (int i = n - 1; i >= 0; --i) {
    double xi = x(i);
    for (int p = lp_[i]; p < lp_[i + 1]; ++p) xi -= lx_[p] * x(li_[p]);
    x(i) = xi;
  }
  return perm_inv_ * x;
}

}  // namespace dpcc::internal
