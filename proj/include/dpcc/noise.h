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

// Calibration and sampling of the privacy perturbation.
//
// Sampling is fixed so results are bit-reproducible: a std::mt19937_64
// stream seeded with the caller's seed, 53-bit uniforms taken from the top
// bits of each draw, then
//   Laplace(lambda):  x = -lambda * sgn(u) * log(1 - 2|u|),  u in (-1/2, 1/2)
//   Gaussian(sigma):  x = -sigma * sqrt(2) * erfc_inv(2 v),     v in (0, 1).
// Masked coordinates consume no draws.

#ifndef DPCC_NOISE_H_
#define DPCC_NOISE_H_

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "dpcc/problem.h"

namespace dpcc {

enum class NoiseKind { kLaplace, kGaussian };

std::string_view noise_kind_name(NoiseKind kind);
// Accepts "laplace" or "gaussian"; throws Error(kInvalidSpec) otherwise.
NoiseKind parse_noise_kind(std::string_view name);

struct NoiseSpec {
  NoiseKind kind = NoiseKind::kLaplace;
  double scale = 0.0;  // lambda or sigma
  int dim = 0;
  // Structurally zero coordinates (size dim, or empty when none).
  std::vector<bool> zero_mask;
  // Diagonal of the covariance: 2 lambda^2 or sigma^2, zero where masked.
  Eigen::VectorXd covariance;

  bool masked(int i) const { return !zero_mask.empty() && zero_mask[i]; }
  int active_count() const;
  // The same distribution restricted to the unmasked coordinates.
  NoiseSpec compact() const;
};

// Laplace: lambda = sensitivity / epsilon, requires delta == 0.
// Gaussian: sigma = sensitivity * sqrt(2 ln(1.25 / delta)) / epsilon, requires
// delta in (0, 1). Throws Error(kInvalidPrivacy).
NoiseSpec calibrate(const PrivacyParams& privacy, NoiseKind kind, int dim,
                    const std::vector<int>& zero_indices = {});

// Spec with a given scale, bypassing privacy calibration.
NoiseSpec make_noise(NoiseKind kind, double scale, int dim,
                     const std::vector<int>& zero_indices = {});

class NoiseSampler {
 public:
  NoiseSampler(const NoiseSpec& spec, std::uint64_t seed);

  Eigen::VectorXd next();

 private:
  double uniform();
  double draw();

  NoiseSpec spec_;
  std::mt19937_64 engine_;
};

Eigen::VectorXd sample(const NoiseSpec& spec, std::uint64_t seed);

// Elementwise square root of the covariance diagonal.
Eigen::VectorXd covariance_sqrt(const NoiseSpec& spec);

// splitmix64 of (master, index); used for per-run and per-purpose seeds.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

}  // namespace dpcc

#endif  // DPCC_NOISE_H_
