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

#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "test_support.hpp"

namespace shgm {
namespace {

using testing::RandomImage;
using testing::Texture;

const LambdaScore kZeroScore([](const Tensor& x, double) {
  return Tensor::Zero(x.size()).eval();
});

InpaintConfig SmallConfig(int steps = 30, TrainDomain domain = TrainDomain::kHankel) {
  InpaintConfig cfg;
  cfg.schedule = {0.01, 20.0, steps};
  cfg.sampler = {steps, 1, 0.16};
  cfg.admm = {4, 1.0, 1};
  cfg.geometry = {domain, HankelLayout{16, 16, 4}, 48, 48};
  cfg.pad = PadPolicy::kAligned;
  cfg.seed = 11;
  return cfg;
}

ImageTensor ConstantPatch(int size) {
  ImageTensor p(size, size);
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) {
      p.at(y, x, 0) = 0.3;
      p.at(y, x, 1) = 0.6;
      p.at(y, x, 2) = 0.8;
    }
  return p;
}

double MaxAbsDiff(const ImageTensor& a, const ImageTensor& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
  return m;
}

TEST(DcTest, ModeFormulas) {
  const DcConfig exact{0.25, DcMode::kExactMinimizer};
  EXPECT_DOUBLE_EQ(DcPixel(0.2, 0.6, true, exact), (0.6 + 0.25 * 0.2) / 1.25);
  EXPECT_DOUBLE_EQ(DcPixel(0.2, 0.6, false, exact), 0.2);
  const DcConfig replace{0.25, DcMode::kReplaceObserved};
  EXPECT_DOUBLE_EQ(DcPixel(0.2, 0.6, true, replace), 0.6);
  EXPECT_DOUBLE_EQ(DcPixel(0.2, 0.6, false, replace), 0.2);
  const DcConfig literal{0.25, DcMode::kShrinkAll};
  EXPECT_DOUBLE_EQ(DcPixel(0.2, 0.6, true, literal), (0.6 + 0.25 * 0.2) / 1.25);
  // the literal form shrinks unobserved pixels towards zero
  EXPECT_DOUBLE_EQ(DcPixel(0.2, 0.6, false, literal), 0.25 * 0.2 / 1.25);
}

// The exact minimizer beats every point of a fine grid on its own objective.
TEST(DcTest, ExactMinimizerIsGridOptimal) {
  const DcConfig cfg{0.3, DcMode::kExactMinimizer};
  for (bool obs : {true, false}) {
    const double h = 0.71, y = 0.18, m = obs ? 1.0 : 0.0;
    auto objective = [&](double x) {
      return m * (x - y) * (x - y) + cfg.lambda * (x - h) * (x - h);
    };
    const double best = DcPixel(h, y, obs, cfg);
    for (int k = 0; k <= 2000; ++k)
      EXPECT_LE(objective(best), objective(-0.5 + k * 1e-3) + 1e-15);
  }
}

TEST(DcTest, LambdaLimits) {
  const DcConfig huge{1e12, DcMode::kExactMinimizer};
  EXPECT_NEAR(DcPixel(0.2, 0.9, true, huge), 0.2, 1e-11);
  const DcConfig zero{0.0, DcMode::kExactMinimizer};
  EXPECT_EQ(DcPixel(0.2, 0.9, true, zero), 0.9);
  EXPECT_EQ(DcPixel(0.2, 0.9, false, zero), 0.2);  // no 0 / 0
  EXPECT_THROW((DcConfig{-1.0, DcMode::kExactMinimizer}.Validate()), InvalidInput);
  EXPECT_THROW((DcConfig{std::nan(""), DcMode::kExactMinimizer}.Validate()),
               InvalidInput);
}

TEST(DcTest, StepAndResidual) {
  Rng rng(1);
  const ImageTensor h = RandomImage(8, 8, rng), y = RandomImage(8, 8, rng);
  const Mask m = MakeMask(MaskKind::kRandom, {8, 8, 0.5, {}}, rng);
  const ImageTensor out = DcStep(h, y, m, {0.0, DcMode::kReplaceObserved});
  EXPECT_EQ(DcResidual(out, y, m), 0.0);
  EXPECT_GT(DcResidual(h, y, m), 0.1);
  EXPECT_EQ(DcResidual(h, y, Mask(8, 8, 0)), 0.0);
}

TEST(InpaintConfigTest, Validation) {
  InpaintConfig cfg = SmallConfig();
  EXPECT_NO_THROW(cfg.Validate());
  cfg.sampler.steps = 29;
  EXPECT_THROW(cfg.Validate(), InvalidInput);
  cfg = SmallConfig();
  cfg.admm.rank = 49;
  EXPECT_THROW(cfg.Validate(), InvalidInput);
  cfg = SmallConfig();
  cfg.geometry.layout = HankelLayout{16, 12, 4};
  EXPECT_THROW(cfg.Validate(), InvalidInput);
  cfg = SmallConfig();
  cfg.workers = 0;
  EXPECT_THROW(cfg.Validate(), InvalidInput);
}

TEST(InpaintPatchTest, FullyObservedPatchIsReturnedExactly) {
  const ImageTensor y = Texture(16, 16);
  InpaintConfig cfg = SmallConfig(5);
  cfg.dc.mode = DcMode::kReplaceObserved;
  Rng rng(2);
  EXPECT_EQ(InpaintPatch(y, Mask(16, 16, 1), kZeroScore, cfg, rng), y);
}

// A sharp Gaussian prior around a constant patch recovers it from 10% of its
// pixels: the missing-pixel mean stays within 0.05 of the constant.
TEST(InpaintPatchTest, ConstantPatchFromTenPercentOfPixels) {
  for (TrainDomain domain : {TrainDomain::kHankel, TrainDomain::kImage}) {
    InpaintConfig cfg = SmallConfig(60, domain);
    cfg.admm.rank = 8;
    const ImageTensor truth = ConstantPatch(16);
    const Tensor mean = EncodePatch(truth, cfg.geometry);
    const GaussianOracleScore prior(
        {mean, Tensor::Constant(mean.size(), 1e-4)});
    for (std::uint64_t seed : {3, 4, 5}) {
      Rng mrng(seed);
      const Mask mask = MakeMask(MaskKind::kRandom, {16, 16, 0.9, {}}, mrng);
      Rng rng(seed + 100);
      const ImageTensor out =
          InpaintPatch(ApplyMask(truth, mask), mask, prior, cfg, rng);
      double bias = 0.0;
      int n = 0;
      for (int y = 0; y < 16; ++y)
        for (int x = 0; x < 16; ++x)
          if (!mask.observed(y, x))
            for (int c = 0; c < 3; ++c, ++n) bias += out.at(y, x, c) - truth.at(y, x, c);
      EXPECT_LT(std::abs(bias / n), 0.05) << ToString(domain) << " seed " << seed;
      EXPECT_LT(MaxAbsDiff(out, truth), 0.15) << ToString(domain) << " seed " << seed;
    }
  }
}

// max|X| <= 20 sigma_i + 2: the noise band plus the data range and the slack
// that unclamped intermediate patches need.
TEST(InpaintPatchTest, StateStaysInsideNoiseEnvelope) {
  InpaintConfig cfg = SmallConfig(40);
  const ImageTensor truth = Texture(16, 16);
  const Tensor mean = EncodePatch(ImageTensor(16, 16, 0.5), cfg.geometry);
  const GaussianOracleScore prior({mean, Tensor::Constant(mean.size(), 0.04)});
  Rng mrng(5);
  const Mask mask = MakeMask(MaskKind::kRandom, {16, 16, 0.5, {}}, mrng);
  PatchOptions opts;
  int cycles = 0;
  double worst = 0.0;
  opts.hook = [&](const IterationInfo& info) {
    ++cycles;
    worst = std::max(worst, info.state_max_abs / (20 * info.sigma + 2));
  };
  std::vector<std::string> lines;
  opts.log = [&](const std::string& l) { lines.push_back(l); };
  Rng rng(6);
  InpaintPatch(ApplyMask(truth, mask), mask, prior, cfg, rng, opts);
  EXPECT_EQ(cycles, 40 * 2);
  EXPECT_LE(worst, 1.0);
  ASSERT_EQ(lines.size(), 2u);  // i = N-1 and i = 0
  EXPECT_EQ(lines.back().rfind("patch 0 iter 0 sigma 0.01 dc_residual", 0), 0u);
}

TEST(InpaintPatchTest, NonFiniteModelRaises) {
  const LambdaScore bad([](const Tensor& x, double) {
    return Tensor::Constant(x.size(), std::nan("")).eval();
  });
  InpaintConfig cfg = SmallConfig(3);
  Rng rng(7);
  EXPECT_THROW(InpaintPatch(Texture(16, 16), Mask(16, 16, 1), bad, cfg, rng),
               NumericalFailure);
}

class InpaintImageTest : public ::testing::Test {
 protected:
  void SetUp() override {
    truth_ = Texture(32, 32);
    Rng rng(8);
    mask_ = MakeMask(MaskKind::kRandom, {32, 32, 0.5, {}}, rng);
    y_ = ApplyMask(truth_, mask_);
    cfg_ = SmallConfig(20);
    mean_ = EncodePatch(truth_.Crop(0, 0, 16, 16), cfg_.geometry);
  }
  ImageTensor Run(const InpaintConfig& cfg, const ImageOptions& opts = {}) {
    const GaussianOracleScore prior({mean_, Tensor::Constant(mean_.size(), 0.01)});
    return InpaintImage(y_, mask_, prior, cfg, opts);
  }
  ImageTensor truth_, y_;
  Mask mask_;
  InpaintConfig cfg_;
  Tensor mean_;
};

TEST_F(InpaintImageTest, DeterministicForFixedSeed) {
  const ImageTensor a = Run(cfg_);
  EXPECT_EQ(Run(cfg_), a);
  InpaintConfig other = cfg_;
  other.seed = 12;
  EXPECT_NE(Run(other), a);
}

TEST_F(InpaintImageTest, IndependentOfOrderAndWorkerCount) {
  const ImageTensor a = Run(cfg_);
  ImageOptions reversed;
  reversed.order = {3, 2, 1, 0};
  EXPECT_EQ(Run(cfg_, reversed), a);
  InpaintConfig threaded = cfg_;
  threaded.workers = 3;
  EXPECT_EQ(Run(threaded), a);
}

TEST_F(InpaintImageTest, ProgressAndHookCoverEveryPatch) {
  std::ostringstream progress;
  std::set<int> seen;
  ImageOptions opts;
  opts.progress = &progress;
  opts.hook = [&](const IterationInfo& info) { seen.insert(info.patch); };
  InpaintConfig threaded = cfg_;
  threaded.workers = 2;
  const ImageTensor out = Run(threaded, opts);
  EXPECT_EQ(seen, (std::set<int>{0, 1, 2, 3}));
  EXPECT_NE(progress.str().find("patch 3 iter 19"), std::string::npos);
  for (double v : out.data()) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
}

TEST_F(InpaintImageTest, RejectsBadArguments) {
  ImageOptions bad_order;
  bad_order.order = {0, 1, 1, 3};
  EXPECT_THROW(Run(cfg_, bad_order), InvalidInput);
  const GaussianOracleScore prior({mean_, Tensor::Constant(mean_.size(), 0.01)});
  EXPECT_THROW(InpaintImage(y_, Mask(31, 32), prior, cfg_), InvalidInput);
  ImageTensor nan_y = y_;
  nan_y.at(1, 1, 1) = std::nan("");
  EXPECT_THROW(InpaintImage(nan_y, mask_, prior, cfg_), InvalidInput);
}

TEST_F(InpaintImageTest, ModelFailureNamesThePatch) {
  const LambdaScore bad([](const Tensor& x, double) {
    return Tensor::Constant(x.size(), std::nan("")).eval();
  });
  try {
    InpaintImage(y_, mask_, bad, cfg_);
    FAIL() << "expected NumericalFailure";
  } catch (const NumericalFailure& e) {
    EXPECT_EQ(std::string(e.what()).rfind("patch 0: ", 0), 0u) << e.what();
  }
}

TEST(InpaintImageDefaultTest, FullyObservedImageIsReproduced) {
  const ImageTensor img = Texture(40, 40);
  InpaintConfig cfg = SmallConfig(3);
  cfg.pad = PadPolicy::kBoundary;
  cfg.dc.mode = DcMode::kReplaceObserved;
  EXPECT_EQ(InpaintImage(img, Mask(40, 40, 1), kZeroScore, cfg), img);
}

TEST(InpaintImageDefaultTest, DefaultGeometryTiles256IntoTwentyFivePatches) {
  InpaintConfig cfg;
  cfg.schedule = {0.01, 378.0, 2};
  cfg.sampler = {2, 0, 0.21};
  std::set<int> seen;
  ImageOptions opts;
  opts.hook = [&](const IterationInfo& info) { seen.insert(info.patch); };
  const ImageTensor out =
      InpaintImage(Texture(256, 256), Mask(256, 256, 1), kZeroScore, cfg, opts);
  EXPECT_EQ(seen.size(), 25u);
  EXPECT_EQ(out.height(), 256);
  EXPECT_EQ(out.width(), 256);
}

}  // namespace
}  // namespace shgm
