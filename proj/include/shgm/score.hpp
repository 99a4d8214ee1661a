// Copyright 2026 The SHGM Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Variance-exploding noise schedule, perturbation kernel scores, the
// denoising score matching objective and an analytic Gaussian score.

#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "shgm/error.hpp"
#include "shgm/rng.hpp"

namespace shgm {

using Tensor = Eigen::VectorXd;

// Geometric scales sigma_i = sigma_min * (sigma_max / sigma_min)^(i / (N-1)).
struct NoiseSchedule {
  double sigma_min = 0.01;
  double sigma_max = 378.0;
  int steps = 1000;

  void Validate() const {
    detail::Require(sigma_min > 0.0 && sigma_min < sigma_max,
                    "noise schedule needs 0 < sigma_min < sigma_max");
    detail::Require(steps >= 1, "noise schedule needs at least one scale");
  }

  double sigma(int i) const {
    detail::Require(i >= 0 && i < steps,
                    "noise index " + std::to_string(i) + " outside [0, " +
                        std::to_string(steps) + ")");
    if (i == 0 || steps == 1) return sigma_min;
    if (i == steps - 1) return sigma_max;
    const double t = static_cast<double>(i) / (steps - 1);
    return sigma_min * std::pow(sigma_max / sigma_min, t);
  }

  friend bool operator==(const NoiseSchedule&, const NoiseSchedule&) = default;
};

// s(x, sigma) ~ grad_x log p_sigma(x). Implementations must be safe to call
// concurrently from several threads.
class ScoreFunction {
 public:
  virtual ~ScoreFunction() = default;
  virtual Tensor operator()(const Tensor& x, double sigma) const = 0;
};

// Adapts a callable to ScoreFunction.
class LambdaScore final : public ScoreFunction {
 public:
  using Fn = std::function<Tensor(const Tensor&, double)>;
  explicit LambdaScore(Fn fn) : fn_(std::move(fn)) {}
  Tensor operator()(const Tensor& x, double sigma) const override {
    return fn_(x, sigma);
  }

 private:
  Fn fn_;
};

// x0 + sigma * z, z ~ N(0, I).
inline Tensor Perturb(const Tensor& x0, double sigma, Rng& rng) {
  detail::Require(sigma >= 0.0, "perturbation scale must be non-negative");
  if (sigma == 0.0) return x0;
  return x0 + sigma * rng.NormalVector(x0.size());
}

// Score of the perturbation kernel N(x; x0, sigma^2 I).
inline Tensor KernelScore(const Tensor& x, const Tensor& x0, double sigma) {
  detail::Require(sigma > 0.0, "kernel score needs sigma > 0");
  detail::Require(x.size() == x0.size(), "kernel score shape mismatch");
  return -(x - x0) / (sigma * sigma);
}

// Diagonal Gaussian data distribution; its VE-perturbed marginal at scale
// sigma is N(mean, diag(variance + sigma^2)).
struct GaussianOracle {
  Tensor mean;
  Tensor variance;

  void Validate() const {
    detail::Require(mean.size() == variance.size(),
                    "oracle mean and variance sizes differ");
    detail::Require((variance.array() > 0.0).all(),
                    "oracle variance must be positive");
  }
};

inline Tensor OracleScore(const GaussianOracle& oracle, const Tensor& x,
                          double sigma) {
  detail::Require(sigma >= 0.0, "oracle score needs sigma >= 0");
  detail::Require(x.size() == oracle.mean.size(), "oracle score shape mismatch");
  return -((x - oracle.mean).array() / (oracle.variance.array() + sigma * sigma))
              .matrix();
}

class GaussianOracleScore final : public ScoreFunction {
 public:
  explicit GaussianOracleScore(GaussianOracle oracle)
      : oracle_(std::move(oracle)) {
    oracle_.Validate();
  }
  Tensor operator()(const Tensor& x, double sigma) const override {
    return OracleScore(oracle_, x, sigma);
  }
  const GaussianOracle& oracle() const { return oracle_; }

 private:
  GaussianOracle oracle_;
};

// One DSM term with gamma(sigma) = sigma^2: ||sigma * s(x0 + sigma z) + z||^2.
inline double DsmTerm(const ScoreFunction& model, const Tensor& x0,
                      double sigma, const Tensor& z) {
  const Tensor xt = x0 + sigma * z;
  return (sigma * model(xt, sigma) + z).squaredNorm();
}

// Mean weighted DSM loss over the batch, one uniformly drawn noise index per
// item.
inline double DsmLoss(const ScoreFunction& model,
                      const std::vector<Tensor>& batch,
                      const NoiseSchedule& schedule, Rng& rng) {
  detail::Require(!batch.empty(), "DSM loss needs a non-empty batch");
  double total = 0.0;
  for (const Tensor& x0 : batch) {
    const int i = static_cast<int>(rng.UniformInt(0, schedule.steps - 1));
    const Tensor z = rng.NormalVector(x0.size());
    total += DsmTerm(model, x0, schedule.sigma(i), z);
  }
  return total / static_cast<double>(batch.size());
}

// Same objective at a fixed scale, averaged over `draws` noise samples per item.
inline double DsmLossAt(const ScoreFunction& model,
                        const std::vector<Tensor>& batch, double sigma,
                        Rng& rng, int draws = 1) {
  detail::Require(!batch.empty() && draws >= 1,
                  "DSM loss needs a non-empty batch");
  double total = 0.0;
  for (int d = 0; d < draws; ++d)
    for (const Tensor& x0 : batch)
      total += DsmTerm(model, x0, sigma, rng.NormalVector(x0.size()));
  return total / (static_cast<double>(batch.size()) * draws);
}

}  // namespace shgm
