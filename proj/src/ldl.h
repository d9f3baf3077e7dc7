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

// Sparse LDL' for quasi-definite matrices with signed dynamic
// regularization. Internal to the solver.

#ifndef DPCC_SRC_LDL_H_
#define DPCC_SRC_LDL_H_

#include <vector>

#include <Eigen/Sparse>

namespace dpcc::internal {

class QuasiDefiniteLdl {
 public:
  using SpMat = Eigen::SparseMatrix<double>;

  // `signs` holds the expected sign (+1 or -1) of each pivot. A pivot whose
  // signed value falls below `threshold` is replaced by sign * `delta`.
  QuasiDefiniteLdl(std::vector<int> signs, double threshold, double delta)
      : signs_(std::move(signs)), threshold_(threshold), delta_(delta) {}

  // `lower` holds the lower triangle (including the diagonal) of a symmetric
  // matrix. The sparsity pattern must stay fixed across calls.
  bool factor(const SpMat& lower);

  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const;

  int regularized_pivots() const { return regularized_; }

 private:
  void analyze(const SpMat& upper_permuted);

  std::vector<int> signs_;
  double threshold_;
  double delta_;
  bool analyzed_ = false;
  Eigen::PermutationMatrix<Eigen::Dynamic, Eigen::Dynamic> perm_;
  Eigen::PermutationMatrix<Eigen::Dynamic, Eigen::Dynamic> perm_inv_;
  std::vector<int> permuted_signs_;
  std::vector<int> etree_;
  std::vector<int> col_counts_;
  std::vector<int> lp_;
  std::vector<int> li_;
  std::vector<double> lx_;
  std::vector<double> d_;
  int regularized_ = 0;
};

}  // namespace dpcc::internal

#endif  // DPCC_SRC_LDL_H_
