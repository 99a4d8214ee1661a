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

// Reverse-time VE-SDE predictor and annealed Langevin corrector steps.

#pragma once

#include <cmath>
#include <string>

#include "shgm/error.hpp"
#include "shgm/rng.hpp"
#include "shgm/score.hpp"

namespace shgm {

struct SamplerConfig {
  int steps = 1000;         // outer iterations N
  int corrector_steps = 1;  // inner iterations M
  double snr = 0.21;

  void Validate() const {
    detail::Require(steps >= 1, "sampler needs N >= 1");
    detail::Require(corrector_steps >= 0, "sampler needs M >= 0");
    detail::Require(snr > 0.0, "sampler needs snr > 0");
  }
};

namespace detail {

inline void RequireFinite(const Tensor& x, const char* stage, int i) {
  if (!x.allFinite())
    throw NumericalFailure(std::string("non-finite state after ") + stage +
                           " at noise index " + std::to_string(i));
}

}  // namespace detail

// Prior draw: i.i.d. N(0, sigma_{N-1}^2).
inline Tensor InitSample(const NoiseSchedule& schedule, Eigen::Index size,
                         Rng& rng) {
  schedule.Validate();
  detail::Require(size >= 1, "sample size must be positive");
  return schedule.sigma(schedule.steps - 1) * rng.NormalVector(size);
}

// Moves a sample at scale sigma_{i+1} to sigma_i:
//   x + (s_{i+1}^2 - s_i^2) score(x, s_{i+1}) + sqrt(s_{i+1}^2 - s_i^2) z.
inline Tensor PredictorStep(const Tensor& x, int i, const ScoreFunction& score,
                            const NoiseSchedule& schedule, const Tensor& z) {
  detail::Require(i >= 0 && i + 1 < schedule.steps,
                  "predictor index must satisfy 0 <= i < N-1");
  detail::Require(z.size() == x.size(), "noise shape mismatch");
  const double hi = schedule.sigma(i + 1);
  const double lo = schedule.sigma(i);
  const double var_step = hi * hi - lo * lo;
  const Tensor g = score(x, hi);
  detail::Require(g.size() == x.size(), "score output shape mismatch");
  Tensor out = x + var_step * g;
  if (var_step > 0.0) out += std::sqrt(var_step) * z;
  detail::RequireFinite(out, "predictor", i);
  return out;
}

inline Tensor PredictorStep(const Tensor& x, int i, const ScoreFunction& score,
                            const NoiseSchedule& schedule, Rng& rng) {
  return PredictorStep(x, i, score, schedule, rng.NormalVector(x.size()));
}

// Langevin step at sigma_i with eps = 2 (snr ||z|| / ||g||)^2; a zero score
// leaves the state unchanged.
inline Tensor CorrectorStep(const Tensor& x, int i, const ScoreFunction& score,
                            const NoiseSchedule& schedule,
                            const SamplerConfig& cfg, const Tensor& z) {
  detail::Require(i >= 0 && i < schedule.steps,
                  "corrector index must satisfy 0 <= i < N");
  detail::Require(z.size() == x.size(), "noise shape mismatch");
  const Tensor g = score(x, schedule.sigma(i));
  detail::Require(g.size() == x.size(), "score output shape mismatch");
  const double g_norm = g.norm();
  if (g_norm == 0.0) return x;
  const double ratio = cfg.snr * z.norm() / g_norm;
  const double eps = 2.0 * ratio * ratio;
  Tensor out = x + eps * g + std::sqrt(2.0 * eps) * z;
  detail::RequireFinite(out, "corrector", i);
  return out;
}

inline Tensor CorrectorStep(const Tensor& x, int i, const ScoreFunction& score,
                            const NoiseSchedule& schedule,
                            const SamplerConfig& cfg, Rng& rng) {
  return CorrectorStep(x, i, score, schedule, cfg, rng.NormalVector(x.size()));
}

// Step size the corrector uses for a given score and noise draw.
inline double CorrectorStepSize(const Tensor& g, const Tensor& z, double snr) {
  const double g_norm = g.norm();
  if (g_norm == 0.0) return 0.0;
  const double ratio = snr * z.norm() / g_norm;
  return 2.0 * ratio * ratio;
}

// Unconditional predictor-corrector chain from the prior down to sigma_0.
inline Tensor SamplePc(const ScoreFunction& score, const NoiseSchedule& schedule,
                       const SamplerConfig& cfg, Eigen::Index size, Rng& rng) {
  cfg.Validate();
  Tensor x = InitSample(schedule, size, rng);
  for (int i = schedule.steps - 1; i >= 0; --i) {
    if (i + 1 < schedule.steps) x = PredictorStep(x, i, score, schedule, rng);
    for (int j = 0; j < cfg.corrector_steps; ++j)
      x = CorrectorStep(x, i, score, schedule, cfg, rng);
  }
  return x;
}

}  // namespace shgm
