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

// Restoration quality metrics on [0, 1] images.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "shgm/error.hpp"
#include "shgm/image.hpp"

namespace shgm {

struct MetricConfig {
  double dynamic_range = 1.0;
  double k1 = 0.01;
  double k2 = 0.03;
  int window = 11;
  double window_sigma = 1.5;
  double psnr_cap = 100.0;

  double c1() const { return (k1 * dynamic_range) * (k1 * dynamic_range); }
  double c2() const { return (k2 * dynamic_range) * (k2 * dynamic_range); }
};

// 20 log10(MAX / RMSE), capped for identical inputs.
inline double Psnr(const ImageTensor& x, const ImageTensor& ref,
                   const MetricConfig& cfg = {}) {
  detail::Require(x.SameShape(ref), "PSNR inputs have different shapes");
  detail::Require(!x.empty(), "PSNR of an empty image");
  double sum = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x.data()[i] - ref.data()[i];
    sum += d * d;
  }
  if (sum == 0.0) return cfg.psnr_cap;
  const double rmse = std::sqrt(sum / static_cast<double>(x.size()));
  return std::min(cfg.psnr_cap, 20.0 * std::log10(cfg.dynamic_range / rmse));
}

// Normalized separable Gaussian taps.
inline std::vector<double> GaussianWindow(int size, double sigma) {
  std::vector<double> w(size);
  const double center = (size - 1) / 2.0;
  double total = 0.0;
  for (int i = 0; i < size; ++i) {
    const double d = i - center;
    w[i] = std::exp(-d * d / (2.0 * sigma * sigma));
    total += w[i];
  }
  for (double& v : w) v /= total;
  return w;
}

// Mean SSIM over the valid windowed region of every channel.
inline double Ssim(const ImageTensor& x, const ImageTensor& ref,
                   const MetricConfig& cfg = {}) {
  detail::Require(x.SameShape(ref), "SSIM inputs have different shapes");
  const int k = cfg.window;
  detail::Require(x.height() >= k && x.width() >= k,
                  "SSIM needs images of at least " + std::to_string(k) + "x" +
                      std::to_string(k));
  const std::vector<double> g = GaussianWindow(k, cfg.window_sigma);
  const int H = x.height(), W = x.width();
  const int oh = H - k + 1, ow = W - k + 1;
  const double c1 = cfg.c1(), c2 = cfg.c2();

  // Filtered moments: mean of a, b, a^2, b^2, ab.
  auto filter = [&](const std::vector<double>& img) {
    std::vector<double> rows(static_cast<std::size_t>(H) * ow, 0.0);
    for (int y = 0; y < H; ++y)
      for (int xo = 0; xo < ow; ++xo) {
        double s = 0.0;
        for (int t = 0; t < k; ++t) s += g[t] * img[y * W + xo + t];
        rows[y * ow + xo] = s;
      }
    std::vector<double> out(static_cast<std::size_t>(oh) * ow, 0.0);
    for (int yo = 0; yo < oh; ++yo)
      for (int xo = 0; xo < ow; ++xo) {
        double s = 0.0;
        for (int t = 0; t < k; ++t) s += g[t] * rows[(yo + t) * ow + xo];
        out[yo * ow + xo] = s;
      }
    return out;
  };

  double total = 0.0;
  const std::size_t plane = static_cast<std::size_t>(H) * W;
  for (int c = 0; c < kChannels; ++c) {
    std::vector<double> a(plane), b(plane), aa(plane), bb(plane), ab(plane);
    for (int y = 0; y < H; ++y)
      for (int xx = 0; xx < W; ++xx) {
        const std::size_t i = static_cast<std::size_t>(y) * W + xx;
        a[i] = x.at(y, xx, c);
        b[i] = ref.at(y, xx, c);
        aa[i] = a[i] * a[i];
        bb[i] = b[i] * b[i];
        ab[i] = a[i] * b[i];
      }
    const auto mu_a = filter(a), mu_b = filter(b);
    const auto m_aa = filter(aa), m_bb = filter(bb), m_ab = filter(ab);
    double sum = 0.0;
    for (std::size_t i = 0; i < mu_a.size(); ++i) {
      const double va = m_aa[i] - mu_a[i] * mu_a[i];
      const double vb = m_bb[i] - mu_b[i] * mu_b[i];
      const double cov = m_ab[i] - mu_a[i] * mu_b[i];
      const double num = (2.0 * mu_a[i] * mu_b[i] + c1) * (2.0 * cov + c2);
      const double den =
          (mu_a[i] * mu_a[i] + mu_b[i] * mu_b[i] + c1) * (va + vb + c2);
      sum += num / den;
    }
    total += sum / static_cast<double>(mu_a.size());
  }
  return total / kChannels;
}

}  // namespace shgm
