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

#include "dpcc/noise.h"

#include <cmath>
#include <string>

#include <boost/math/special_functions/erf.hpp>
#include <fmt/format.h>

#include "dpcc/error.h"

namespace dpcc {

std::string_view noise_kind_name(NoiseKind kind) {
  return kind == NoiseKind::kLaplace ? "laplace" : "gaussian";
}

NoiseKind parse_noise_kind(std::string_view name) {
  if (name == "laplace") return NoiseKind::kLaplace;
  if (name == "gaussian") return NoiseKind::kGaussian;
  throw Error(ErrorCode::kInvalidSpec,
              fmt::format("unknown distribution '{}'", name));
}

int NoiseSpec::active_count() const {
  int count = 0;
  for (int i = 0; i < dim; ++i) count += masked(i) ? 0 : 1;
  return count;
}

NoiseSpec NoiseSpec::compact() const {
  NoiseSpec out;
  out.kind = kind;
  out.scale = scale;
  out.dim = active_count();
  out.covariance.resize(out.dim);
  int k = 0;
  for (int i = 0; i < dim; ++i) {
    if (!masked(i)) out.covariance(k++) = covariance(i);
  }
  return out;
}

NoiseSpec make_noise(NoiseKind kind, double scale, int dim,
                     const std::vector<int>& zero_indices) {
  if (!(scale > 0.0) || !std::isfinite(scale)) {
    throw Error(ErrorCode::kInvalidPrivacy,
                fmt::format("noise scale must be positive, got {}", scale));
  }
  if (dim < 1) throw Error(ErrorCode::kInvalidSpec, "noise dimension must be >= 1");
  NoiseSpec spec;
  spec.kind = kind;
  spec.scale = scale;
  spec.dim = dim;
  if (!zero_indices.empty()) {
    spec.zero_mask.assign(dim, false);
    for (int i : zero_indices) {
      if (i < 0 || i >= dim) {
        throw Error(ErrorCode::kInvalidSpec, fmt::format("mask index {} out of range", i));
      }
      spec.zero_mask[i] = true;
    }
  }
  const double var = kind == NoiseKind::kLaplace ? 2.0 * scale * scale : scale * scale;
  spec.covariance = Eigen::VectorXd::Constant(dim, var);
  for (int i = 0; i < dim; ++i) {
    if (spec.masked(i)) spec.covariance(i) = 0.0;
  }
  return spec;
}

NoiseSpec calibrate(const PrivacyParams& privacy, NoiseKind kind, int dim,
                    const std::vector<int>& zero_indices) {
  if (!(privacy.epsilon > 0.0) || !std::isfinite(privacy.epsilon)) {
    throw Error(ErrorCode::kInvalidPrivacy,
                fmt::format("epsilon must be positive, got {}", privacy.epsilon));
  }
  if (!(privacy.alpha > 0.0)) {
    throw Error(ErrorCode::kInvalidPrivacy,
                fmt::format("alpha must be positive, got {}", privacy.alpha));
  }
  const double sens = privacy.effective_sensitivity();
  if (kind == NoiseKind::kLaplace) {
    if (privacy.delta != 0.0) {
      throw Error(ErrorCode::kInvalidPrivacy, "Laplace calibration requires delta = 0");
    }
    return make_noise(kind, sens / privacy.epsilon, dim, zero_indices);
  }
  if (!(privacy.delta > 0.0 && privacy.delta < 1.0)) {
    throw Error(ErrorCode::kInvalidPrivacy,
                fmt::format("Gaussian calibration requires delta in (0, 1), got {}",
                            privacy.delta));
  }
  const double sigma =
      sens * std::sqrt(2.0 * std::log(1.25 / privacy.delta)) / privacy.epsilon;
  return make_noise(kind, sigma, dim, zero_indices);
}

NoiseSampler::NoiseSampler(const NoiseSpec& spec, std::uint64_t seed)
    : spec_(spec), engine_(seed) {}

double NoiseSampler::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double NoiseSampler::draw() {
  if (spec_.kind == NoiseKind::kLaplace) {
    while (true) {
      const double u = uniform() - 0.5;
      const double tail = 1.0 - 2.0 * std::abs(u);
      if (tail <= 0.0) continue;
      return -spec_.scale * (u < 0.0 ? -1.0 : 1.0) * std::log(tail);
    }
  }
  while (true) {
    const double v = uniform();
    if (v <= 0.0) continue;
    return -spec_.scale * std::sqrt(2.0) * boost::math::erfc_inv(2.0 * v);
  }
}

Eigen::VectorXd NoiseSampler::next() {
  Eigen::VectorXd xi = Eigen::VectorXd::Zero(spec_.dim);
  for (int i = 0; i < spec_.dim; ++i) {
    if (!spec_.masked(i)) xi(i) = draw();
  }
  return xi;
}

Eigen::VectorXd sample(const NoiseSpec& spec, std::uint64_t seed) {
  NoiseSampler sampler(spec, seed);
  return sampler.next();
}

Eigen::VectorXd covariance_sqrt(const NoiseSpec& spec) {
  return spec.covariance.cwiseSqrt();
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  std::uint64_t z = master + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace dpcc
