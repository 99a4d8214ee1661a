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

#include <gtest/gtest.h>

#include "test_support.hpp"

namespace shgm {
namespace {

const LambdaScore kLinearScore([](const Tensor& x, double s) {
  return (-x / (1.0 + s * s)).eval();
});

TEST(InitSampleTest, PriorScale) {
  Rng rng(1);
  const NoiseSchedule schedule{0.01, 50.0, 10};
  const Tensor x = InitSample(schedule, 100000, rng);
  EXPECT_NEAR(std::sqrt(x.squaredNorm() / x.size()), 50.0, 0.5);
  EXPECT_NEAR(x.mean(), 0.0, 0.5);
}

TEST(PredictorTest, MatchesUpdateFormula) {
  Rng rng(2);
  const NoiseSchedule schedule{0.1, 10.0, 5};
  const Tensor x = rng.NormalVector(8);
  const Tensor z = rng.NormalVector(8);
  const int i = 2;
  const double hi = schedule.sigma(3), lo = schedule.sigma(2);
  const Tensor expected =
      x + (hi * hi - lo * lo) * (-x / (1 + hi * hi)) +
      std::sqrt(hi * hi - lo * lo) * z;
  EXPECT_LT((PredictorStep(x, i, kLinearScore, schedule, z) - expected).norm(),
            1e-12);
  EXPECT_THROW(PredictorStep(x, 4, kLinearScore, schedule, z), InvalidInput);
}

TEST(CorrectorTest, MatchesUpdateFormula) {
  Rng rng(3);
  const NoiseSchedule schedule{0.1, 10.0, 5};
  const SamplerConfig cfg{5, 1, 0.16};
  const Tensor x = rng.NormalVector(8);
  const Tensor z = rng.NormalVector(8);
  const double s = schedule.sigma(1);
  const Tensor g = -x / (1 + s * s);
  const double eps = 2 * std::pow(0.16 * z.norm() / g.norm(), 2);
  EXPECT_DOUBLE_EQ(CorrectorStepSize(g, z, 0.16), eps);
  const Tensor expected = x + eps * g + std::sqrt(2 * eps) * z;
  EXPECT_LT((CorrectorStep(x, 1, kLinearScore, schedule, cfg, z) - expected)
                .norm(),
            1e-12);
}

TEST(CorrectorTest, ZeroScoreLeavesStateUnchanged) {
  Rng rng(4);
  const LambdaScore zero([](const Tensor& x, double) {
    return Tensor::Zero(x.size()).eval();
  });
  const Tensor x = rng.NormalVector(5);
  EXPECT_EQ(CorrectorStep(x, 0, zero, NoiseSchedule{}, SamplerConfig{}, rng), x);
}

TEST(SamplerTest, NonFiniteScoreRaises) {
  Rng rng(5);
  const LambdaScore bad([](const Tensor& x, double) {
    return Tensor::Constant(x.size(), std::nan("")).eval();
  });
  const NoiseSchedule schedule{0.1, 1.0, 3};
  EXPECT_THROW(PredictorStep(Tensor::Zero(3), 0, bad, schedule, rng),
               NumericalFailure);
  EXPECT_THROW(CorrectorStep(Tensor::Ones(3), 0, bad, schedule, SamplerConfig{},
                             rng),
               NumericalFailure);
}

TEST(SamplerTest, ConfigValidation) {
  EXPECT_THROW((SamplerConfig{0, 1, 0.2}.Validate()), InvalidInput);
  EXPECT_THROW((SamplerConfig{10, -1, 0.2}.Validate()), InvalidInput);
  EXPECT_THROW((SamplerConfig{10, 1, 0.0}.Validate()), InvalidInput);
}

// Independent 1-D chains under the exact Gaussian score should land on the
// data distribution.
TEST(SamplerTest, OracleReverseChainsRecoverDataMoments) {
  const int chains = 10000;
  GaussianOracle oracle{Tensor::Constant(chains, 0.3),
                        Tensor::Constant(chains, 0.04)};
  const GaussianOracleScore score(oracle);
  const NoiseSchedule schedule{0.01, 50.0, 200};
  Rng rng(6);
  const Tensor x = SamplePc(score, schedule, {200, 1, 0.16}, chains, rng);
  const double mean = x.mean();
  const double sd = std::sqrt((x.array() - mean).square().mean());
  EXPECT_NEAR(mean, 0.3, 0.01);
  EXPECT_NEAR(sd, 0.2, 0.01);
}

// Langevin with a fixed Gaussian target keeps its stationary variance. The
// step size depends on the state, which biases the law by O(1/dim); the
// remaining O(eps) discretization bias of the linear recursion is accounted
// for in `expected`.
TEST(SamplerTest, CorrectorPreservesStationaryLaw) {
  const int dim = 1024;
  GaussianOracle oracle{Tensor::Zero(dim), Tensor::Constant(dim, 1.0)};
  const GaussianOracleScore score(oracle);
  const NoiseSchedule schedule{0.5, 1.0, 2};
  const SamplerConfig cfg{2, 1, 0.1};
  Rng rng(7);
  Tensor x = rng.NormalVector(dim) * std::sqrt(1.25);
  double sq = 0.0;
  const int n = 5000;
  for (int t = 0; t < n; ++t) {
    x = CorrectorStep(x, 0, score, schedule, cfg, rng);
    sq += x.squaredNorm() / dim;
  }
  const double tau = 1.25;
  const double eps = 2 * 0.1 * 0.1 * tau;  // ||z|| / ||g|| ~ tau
  const double a = eps / tau;
  const double expected = 2 * eps / (1 - (1 - a) * (1 - a));
  EXPECT_NEAR(sq / n, expected, 0.03);
}

TEST(SamplerTest, DeterministicPerSeedAndDecorrelatedAcrossSeeds) {
  const NoiseSchedule schedule{0.01, 5.0, 20};
  const SamplerConfig cfg{20, 1, 0.16};
  Rng a(8), b(8), c(9);
  const Tensor xa = SamplePc(kLinearScore, schedule, cfg, 500, a);
  const Tensor xb = SamplePc(kLinearScore, schedule, cfg, 500, b);
  const Tensor xc = SamplePc(kLinearScore, schedule, cfg, 500, c);
  EXPECT_EQ(xa, xb);
  const double corr = xa.dot(xc) / (xa.norm() * xc.norm());
  EXPECT_LT(std::abs(corr), 0.15);
}

}  // namespace
}  // namespace shgm
