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

// Denoising score matching training loop and the model checkpoint format.

#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <functional>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "shgm/error.hpp"
#include "shgm/hankel.hpp"
#include "shgm/image.hpp"
#include "shgm/patch.hpp"
#include "shgm/rng.hpp"
#include "shgm/score.hpp"
#include "shgm/score_net.hpp"

namespace shgm {

struct TrainConfig {
  double learning_rate = 2e-4;
  int steps = 1000;
  int batch_size = 1;   // crops per training image per step
  int images = 10;      // first n images of the dataset
  TrainDomain domain = TrainDomain::kHankel;
  std::uint64_t seed = 0;

  void Validate() const {
    detail::Require(learning_rate > 0.0 && std::isfinite(learning_rate),
                    "learning rate must be > 0");
    detail::Require(steps >= 1, "training needs at least one step");
    detail::Require(batch_size >= 1, "batch size must be >= 1");
    detail::Require(images >= 1, "image count must be >= 1");
  }
};

// Adaptive-moment optimizer over a flat float parameter vector.
class Adam {
 public:
  Adam(std::size_t n, double lr, double beta1 = 0.9, double beta2 = 0.999,
       double eps = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps), m_(n, 0.0f),
        v_(n, 0.0f) {}

  void Step(std::vector<float>& params, const std::vector<double>& grad) {
    detail::Require(params.size() == m_.size() && grad.size() == m_.size(),
                    "optimizer size mismatch");
    ++t_;
    const double c1 = 1.0 - std::pow(beta1_, t_);
    const double c2 = 1.0 - std::pow(beta2_, t_);
    for (std::size_t k = 0; k < params.size(); ++k) {
      const float g = static_cast<float>(grad[k]);
      m_[k] = static_cast<float>(beta1_) * m_[k] +
              static_cast<float>(1.0 - beta1_) * g;
      v_[k] = static_cast<float>(beta2_) * v_[k] +
              static_cast<float>(1.0 - beta2_) * g * g;
      const double mh = m_[k] / c1, vh = v_[k] / c2;
      params[k] -= static_cast<float>(lr_ * mh / (std::sqrt(vh) + eps_));
    }
  }

  long steps() const { return t_; }

 private:
  double lr_, beta1_, beta2_, eps_;
  std::vector<float> m_, v_;
  long t_ = 0;
};

struct TrainStep {
  int step;
  double loss;  // mean DSM term over the step's batch
};

// Trains from a freshly initialized model. Each step draws `batch_size` random
// crops per image, one noise index and draw per crop, and applies one Adam
// update on the mean DSM loss.
inline ScoreNet Train(const std::vector<ImageTensor>& images,
                      const HankelLayout& layout, int fold_h, int fold_w,
                      const NoiseSchedule& schedule, const TrainConfig& cfg,
                      const ScoreNetConfig& net_cfg = {},
                      const std::function<void(const TrainStep&)>& on_step = {}) {
  cfg.Validate();
  schedule.Validate();
  layout.Validate();
  detail::Require(!images.empty(), "training dataset is empty");
  detail::Require(layout.patch_h == layout.patch_w,
                  "training crops must be square");
  for (const ImageTensor& img : images)
    detail::Require(img.height() >= layout.patch_h && img.width() >= layout.patch_w,
                    "training images must be at least the patch size");

  const ModelGeometry geometry{cfg.domain, layout, fold_h, fold_w};
  ScoreNet net(geometry, net_cfg);
  Rng init_rng = Rng::Child(cfg.seed, 0);
  net.Initialize(init_rng);
  Rng rng = Rng::Child(cfg.seed, 1);

  Adam adam(net.params().size(), cfg.learning_rate);
  std::vector<double> grad(net.params().size());
  const int batch = static_cast<int>(images.size()) * cfg.batch_size;
  const double weight = 1.0 / batch;

  for (int step = 0; step < cfg.steps; ++step) {
    std::fill(grad.begin(), grad.end(), 0.0);
    double loss = 0.0;
    for (const ImageTensor& img : images)
      for (int b = 0; b < cfg.batch_size; ++b) {
        const ImageTensor crop = RandomCrop(img, layout.patch_h, rng);
        const Tensor x0 = EncodePatch(crop, geometry);
        const int i = static_cast<int>(rng.UniformInt(0, schedule.steps - 1));
        const Tensor z = rng.NormalVector(x0.size());
        loss += net.AccumulateGradient(x0, schedule.sigma(i), z, weight, grad);
      }
    loss /= batch;
    if (!std::isfinite(loss))
      throw NumericalFailure("training loss became non-finite at step " +
                             std::to_string(step));
    adam.Step(net.params(), grad);
    if (on_step) on_step(TrainStep{step, loss});
  }
  return net;
}

// Checkpoint layout (all little-endian):
//   "SHGM", u32 version,
//   i32 patch_h, patch_w, window, fold_h, fold_w,
//   f64 sigma_min, sigma_max, i32 N,
//   u8 train_domain, i32 hidden, i32 embed, f64 sigma_data, f64 gain_scale,
//   u64 parameter count, f32 parameters.
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  ScoreNet model;
  NoiseSchedule schedule;
};

inline void WriteCheckpoint(std::ostream& os, const ScoreNet& net,
                            const NoiseSchedule& schedule) {
  const ModelGeometry& g = net.geometry();
  os.write("SHGM", 4);
  detail::WriteLE<std::uint32_t>(os, kCheckpointVersion);
  for (int v : {g.layout.patch_h, g.layout.patch_w, g.layout.window, g.fold_h,
                g.fold_w})
    detail::WriteLE<std::int32_t>(os, v);
  detail::WriteLE<double>(os, schedule.sigma_min);
  detail::WriteLE<double>(os, schedule.sigma_max);
  detail::WriteLE<std::int32_t>(os, schedule.steps);
  detail::WriteLE<std::uint8_t>(os, static_cast<std::uint8_t>(g.domain));
  detail::WriteLE<std::int32_t>(os, net.config().hidden);
  detail::WriteLE<std::int32_t>(os, net.config().embed);
  detail::WriteLE<double>(os, net.config().sigma_data);
  detail::WriteLE<double>(os, net.config().gain_scale);
  detail::WriteLE<std::uint64_t>(os, net.params().size());
  for (float p : net.params()) detail::WriteLE<float>(os, p);
  if (!os) throw std::runtime_error("failed to write checkpoint");
}

inline Checkpoint ReadCheckpoint(std::istream& is) {
  char magic[4] = {};
  is.read(magic, 4);
  detail::Require(is && std::memcmp(magic, "SHGM", 4) == 0,
                  "not a checkpoint file (bad magic)");
  const auto version = detail::ReadLE<std::uint32_t>(is);
  detail::Require(version == kCheckpointVersion,
                  "unsupported checkpoint version " + std::to_string(version));
  ModelGeometry g;
  g.layout.patch_h = detail::ReadLE<std::int32_t>(is);
  g.layout.patch_w = detail::ReadLE<std::int32_t>(is);
  g.layout.window = detail::ReadLE<std::int32_t>(is);
  g.fold_h = detail::ReadLE<std::int32_t>(is);
  g.fold_w = detail::ReadLE<std::int32_t>(is);
  NoiseSchedule schedule;
  schedule.sigma_min = detail::ReadLE<double>(is);
  schedule.sigma_max = detail::ReadLE<double>(is);
  schedule.steps = detail::ReadLE<std::int32_t>(is);
  schedule.Validate();
  const auto domain = detail::ReadLE<std::uint8_t>(is);
  detail::Require(domain <= 1, "unknown training domain in checkpoint");
  g.domain = static_cast<TrainDomain>(domain);
  ScoreNetConfig cfg;
  cfg.hidden = detail::ReadLE<std::int32_t>(is);
  cfg.embed = detail::ReadLE<std::int32_t>(is);
  cfg.sigma_data = detail::ReadLE<double>(is);
  cfg.gain_scale = detail::ReadLE<double>(is);
  g.layout.Validate();
  if (g.domain == TrainDomain::kHankel) (void)g.fold_spec();
  ScoreNet net(g, cfg);
  const auto count = detail::ReadLE<std::uint64_t>(is);
  detail::Require(count == net.params().size(),
                  "checkpoint parameter count does not match its architecture");
  for (float& p : net.params()) p = detail::ReadLE<float>(is);
  return Checkpoint{std::move(net), schedule};
}

inline void SaveCheckpoint(const std::string& path, const ScoreNet& net,
                           const NoiseSchedule& schedule) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw InvalidInput("cannot open checkpoint for writing: " + path);
  WriteCheckpoint(os, net, schedule);
}

inline Checkpoint LoadCheckpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw InvalidInput("cannot open checkpoint: " + path);
  return ReadCheckpoint(is);
}

}  // namespace shgm
