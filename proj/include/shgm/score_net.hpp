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

// Small noise-conditioned convolutional score approximator.
//
// The model predicts the noise e(x, sigma) and reports the score -e / sigma.
// Every plane of the input tensor (one fold channel, or one colour channel in
// image-domain mode) goes through the same per-plane network, whose inputs are
//
//   f0 = (x - 1/2) / sqrt(sigma^2 + sd^2)        raw signal
//   f1 = (P x - 1/2) * sigma / (sigma^2 + sd^2)  structured part
//   f2 = (x - P x) / sigma                       structure residual
//
// where P re-lifts the pixel averages of the unfolded Hankel matrix (identity
// in image-domain mode) and sd is the nominal data spread. The network is
//
//   h1  = silu(conv3x3(f; 3 -> H) + a1(sigma))
//   h2  = silu(conv1x1(h1; H -> H) + a2(sigma))
//   e   = conv3x3(h2; H -> 1) + b + sum_k g_k(sigma) f_k
//
// with a1, a2, g affine in a Fourier embedding of log(sigma). All arithmetic is
// float32; weights are shared across planes.

#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "shgm/error.hpp"
#include "shgm/hankel.hpp"
#include "shgm/image.hpp"
#include "shgm/patch.hpp"
#include "shgm/rng.hpp"
#include "shgm/score.hpp"

namespace shgm {

enum class TrainDomain : std::uint8_t { kHankel = 0, kImage = 1 };

inline const char* ToString(TrainDomain d) {
  return d == TrainDomain::kHankel ? "hankel" : "image";
}

// Shape of the tensors a model consumes.
struct ModelGeometry {
  TrainDomain domain = TrainDomain::kHankel;
  HankelLayout layout;
  int fold_h = 192;
  int fold_w = 192;

  FoldSpec fold_spec() const { return MakeFoldSpec(layout, fold_h, fold_w); }
  int planes() const {
    return domain == TrainDomain::kHankel ? fold_spec().fold_c : kChannels;
  }
  int plane_h() const {
    return domain == TrainDomain::kHankel ? fold_h : layout.patch_h;
  }
  int plane_w() const {
    return domain == TrainDomain::kHankel ? fold_w : layout.patch_w;
  }
  Eigen::Index plane_size() const {
    return static_cast<Eigen::Index>(plane_h()) * plane_w();
  }
  Eigen::Index tensor_size() const { return plane_size() * planes(); }

  friend bool operator==(const ModelGeometry&, const ModelGeometry&) = default;
};

// Channel-planar copy of an image: entry (y, x, c) at c * H * W + y * W + x.
inline Tensor ImageToPlanar(const ImageTensor& image) {
  const Eigen::Index plane =
      static_cast<Eigen::Index>(image.height()) * image.width();
  Tensor out(plane * kChannels);
  for (int y = 0; y < image.height(); ++y)
    for (int x = 0; x < image.width(); ++x)
      for (int c = 0; c < kChannels; ++c)
        out[c * plane + static_cast<Eigen::Index>(y) * image.width() + x] =
            image.at(y, x, c);
  return out;
}

inline ImageTensor PlanarToImage(const Tensor& planar, int height, int width) {
  const Eigen::Index plane = static_cast<Eigen::Index>(height) * width;
  detail::Require(planar.size() == plane * kChannels,
                  "planar tensor size does not match image shape");
  ImageTensor out(height, width);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x)
      for (int c = 0; c < kChannels; ++c)
        out.at(y, x, c) =
            planar[c * plane + static_cast<Eigen::Index>(y) * width + x];
  return out;
}

// Model input for a clean patch: folded Hankel lift, or the planar patch.
inline Tensor EncodePatch(const ImageTensor& patch, const ModelGeometry& g) {
  if (g.domain == TrainDomain::kImage) return ImageToPlanar(patch);
  return Fold(Lift(patch, g.layout), g.fold_h, g.fold_w).data;
}

struct ScoreNetConfig {
  int hidden = 8;
  int embed = 16;
  double sigma_data = 0.5;
  // Fixed multiplier on the skip-gain head. Adam moves each raw parameter by
  // about lr per step, so without it the O(1) gains take ~1/lr steps to form.
  double gain_scale = 10.0;

  friend bool operator==(const ScoreNetConfig&, const ScoreNetConfig&) = default;
};

namespace net_detail {

// exp for float lanes: range reduction to 2^n e^r, |r| <= ln2/2, then a
// degree-6 polynomial. Relative error ~2 ulp; vectorizes under omp simd.
inline float FastExp(float v) {
  v = std::clamp(v, -87.0f, 88.0f);
  const float n = std::nearbyint(v * 1.44269504088896341f);
  const float r = (v - n * 0.693359375f) + n * 2.12194440e-4f;
  float p = 1.3981999507e-3f;
  p = p * r + 8.3334519073e-3f;
  p = p * r + 4.1665795894e-2f;
  p = p * r + 1.6666665459e-1f;
  p = p * r + 5.0000001201e-1f;
  p = p * r * r + r + 1.0f;
  const std::int32_t bits = (static_cast<std::int32_t>(n) + 127) << 23;
  return p * std::bit_cast<float>(bits);
}

// act = pre * sigmoid(pre); sig keeps the sigmoid for the backward pass.
inline void Silu(const float* pre, float* act, float* sig, Eigen::Index n) {
#pragma omp simd
  for (Eigen::Index i = 0; i < n; ++i) {
    const float s = 1.0f / (1.0f + FastExp(-pre[i]));
    sig[i] = s;
    act[i] = pre[i] * s;
  }
}

// d *= silu'(pre) given the cached sigmoid.
inline void SiluBackward(const float* pre, const float* sig, float* d,
                         Eigen::Index n) {
#pragma omp simd
  for (Eigen::Index i = 0; i < n; ++i)
    d[i] *= sig[i] * (1.0f + pre[i] * (1.0f - sig[i]));
}

// Convolution helpers work on zero-bordered planes: a padded plane has
// (h + 2) rows of pitch w + 2 with the data in the interior, so all nine taps
// are in range for every output pixel.
inline std::ptrdiff_t Pitch(int w) { return w + 2; }
inline std::ptrdiff_t PaddedSize(int h, int w) {
  return static_cast<std::ptrdiff_t>(h + 2) * (w + 2);
}
inline float* Interior(float* padded, int w) { return padded + Pitch(w) + 1; }

// out[y][x] += sum_{ky,kx} k[ky+1][kx+1] * in[y+ky][x+kx], `in` padded.
inline void Conv3Add(const float* in, const float* k, float* out, int h,
                     int w) {
  const std::ptrdiff_t pitch = Pitch(w);
  const float k0 = k[0], k1 = k[1], k2 = k[2], k3 = k[3], k4 = k[4],
              k5 = k[5], k6 = k[6], k7 = k[7], k8 = k[8];
  for (int y = 0; y < h; ++y) {
    const float* r0 = in + y * pitch;
    const float* r1 = r0 + pitch;
    const float* r2 = r1 + pitch;
    float* dst = out + static_cast<std::ptrdiff_t>(y) * w;
#pragma omp simd
    for (int x = 0; x < w; ++x)
      dst[x] += k0 * r0[x] + k1 * r0[x + 1] + k2 * r0[x + 2] + k3 * r1[x] +
                k4 * r1[x + 1] + k5 * r1[x + 2] + k6 * r2[x] +
                k7 * r2[x + 1] + k8 * r2[x + 2];
  }
}

// Adjoint of Conv3Add: correlation with the flipped kernel, `dout` padded.
inline void Conv3AddTransposed(const float* dout, const float* k, float* din,
                               int h, int w) {
  const float flipped[9] = {k[8], k[7], k[6], k[5], k[4],
                            k[3], k[2], k[1], k[0]};
  Conv3Add(dout, flipped, din, h, w);
}

// gk[t] += sum_{y,x} in[y+ky][x+kx] * dout[y][x], `in` padded.
inline void Conv3WeightGrad(const float* in, const float* dout, double* gk,
                            int h, int w) {
  const std::ptrdiff_t pitch = Pitch(w);
  double total[9] = {};
  for (int y = 0; y < h; ++y) {
    const float* r0 = in + y * pitch;
    const float* r1 = r0 + pitch;
    const float* r2 = r1 + pitch;
    const float* g = dout + static_cast<std::ptrdiff_t>(y) * w;
    float a0 = 0, a1 = 0, a2 = 0, a3 = 0, a4 = 0, a5 = 0, a6 = 0, a7 = 0,
          a8 = 0;
#pragma omp simd reduction(+ : a0, a1, a2, a3, a4, a5, a6, a7, a8)
    for (int x = 0; x < w; ++x) {
      a0 += r0[x] * g[x];
      a1 += r0[x + 1] * g[x];
      a2 += r0[x + 2] * g[x];
      a3 += r1[x] * g[x];
      a4 += r1[x + 1] * g[x];
      a5 += r1[x + 2] * g[x];
      a6 += r2[x] * g[x];
      a7 += r2[x + 1] * g[x];
      a8 += r2[x + 2] * g[x];
    }
    total[0] += a0; total[1] += a1; total[2] += a2;
    total[3] += a3; total[4] += a4; total[5] += a5;
    total[6] += a6; total[7] += a7; total[8] += a8;
  }
  for (int t = 0; t < 9; ++t) gk[t] += total[t];
}

inline double Dot(const float* a, const float* b, Eigen::Index n) {
  double total = 0.0;
  constexpr Eigen::Index kBlock = 4096;
  for (Eigen::Index s = 0; s < n; s += kBlock) {
    const Eigen::Index e = std::min(n, s + kBlock);
    float acc = 0.0f;
#pragma omp simd reduction(+ : acc)
    for (Eigen::Index i = s; i < e; ++i) acc += a[i] * b[i];
    total += acc;
  }
  return total;
}

inline double Sum(const float* a, Eigen::Index n) {
  double total = 0.0;
  constexpr Eigen::Index kBlock = 4096;
  for (Eigen::Index s = 0; s < n; s += kBlock) {
    const Eigen::Index e = std::min(n, s + kBlock);
    float acc = 0.0f;
#pragma omp simd reduction(+ : acc)
    for (Eigen::Index i = s; i < e; ++i) acc += a[i];
    total += acc;
  }
  return total;
}

}  // namespace net_detail

class ScoreNet final : public ScoreFunction {
 public:
  static constexpr int kFeatures = 3;

  ScoreNet(ModelGeometry geometry, ScoreNetConfig config)
      : geometry_(geometry), config_(config) {
    geometry_.layout.Validate();
    detail::Require(config_.hidden >= 1 && config_.embed >= 2 &&
                        config_.embed % 2 == 0 && config_.sigma_data > 0.0 &&
                        config_.gain_scale > 0.0,
                    "invalid score network configuration");
    BuildOffsets();
    params_.assign(offsets_.total, 0.0f);
    if (geometry_.domain == TrainDomain::kHankel) {
      entry_pixel_ = EntryPixelIndex(geometry_.layout);
      const ImageTensor counts = MultiplicityMap(geometry_.layout);
      inv_count_.resize(counts.size());
      for (std::size_t i = 0; i < counts.size(); ++i)
        inv_count_[i] = 1.0 / counts.data()[i];
    }
  }

  // Random initial weights; the skip gains start at zero.
  void Initialize(Rng& rng) {
    const int H = config_.hidden, E = config_.embed;
    auto fill = [&](std::size_t off, std::size_t n, double scale) {
      for (std::size_t i = 0; i < n; ++i)
        params_[off + i] = static_cast<float>(scale * rng.Normal());
    };
    std::fill(params_.begin(), params_.end(), 0.0f);
    fill(offsets_.w1, H * kFeatures * 9, std::sqrt(1.0 / (kFeatures * 9)));
    fill(offsets_.e1, H * E, std::sqrt(1.0 / E));
    fill(offsets_.w2, H * H, std::sqrt(1.0 / H));
    fill(offsets_.e2, H * E, std::sqrt(1.0 / E));
    fill(offsets_.w3, H * 9, std::sqrt(1.0 / (9 * H)));
  }

  const ModelGeometry& geometry() const { return geometry_; }
  const ScoreNetConfig& config() const { return config_; }
  std::vector<float>& params() { return params_; }
  const std::vector<float>& params() const { return params_; }

  // Score estimate -e(x, sigma) / sigma.
  Tensor operator()(const Tensor& x, double sigma) const override {
    CheckInput(x, sigma);
    std::vector<float> eps(x.size());
    Run(x, sigma, eps.data(), nullptr, nullptr);
    Tensor out(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) out[i] = -eps[i] / sigma;
    return out;
  }

  // Noise prediction e(x, sigma).
  Tensor PredictNoise(const Tensor& x, double sigma) const {
    CheckInput(x, sigma);
    std::vector<float> eps(x.size());
    Run(x, sigma, eps.data(), nullptr, nullptr);
    return Eigen::Map<const Eigen::VectorXf>(eps.data(), x.size())
        .cast<double>();
  }

  // DSM term ||e(x0 + sigma z) - z||^2 = ||sigma s + z||^2; its parameter
  // gradient times `weight` is added to `grad`.
  double AccumulateGradient(const Tensor& x0, double sigma, const Tensor& z,
                            double weight, std::vector<double>& grad) const {
    detail::Require(grad.size() == params_.size(), "gradient buffer size");
    detail::Require(z.size() == x0.size(), "noise shape mismatch");
    const Tensor xt = x0 + sigma * z;
    CheckInput(xt, sigma);
    std::vector<float> eps(xt.size());
    std::vector<float> target(z.size());
    for (Eigen::Index i = 0; i < z.size(); ++i)
      target[i] = static_cast<float>(z[i]);
    double loss = 0.0;
    Run(xt, sigma, eps.data(), &target, &grad, weight, &loss);
    return loss;
  }

 private:
  struct Offsets {
    std::size_t w1, e1, a1, w2, e2, a2, w3, b3, eg, g, total;
  };

  void BuildOffsets() {
    const std::size_t H = config_.hidden, E = config_.embed;
    std::size_t at = 0;
    auto take = [&](std::size_t n) {
      const std::size_t off = at;
      at += n;
      return off;
    };
    offsets_.w1 = take(H * kFeatures * 9);
    offsets_.e1 = take(H * E);
    offsets_.a1 = take(H);
    offsets_.w2 = take(H * H);
    offsets_.e2 = take(H * E);
    offsets_.a2 = take(H);
    offsets_.w3 = take(H * 9);
    offsets_.b3 = take(1);
    offsets_.eg = take(kFeatures * E);
    offsets_.g = take(kFeatures);
    offsets_.total = at;
  }

  void CheckInput(const Tensor& x, double sigma) const {
    detail::Require(x.size() == geometry_.tensor_size(),
                    "score network input has " + std::to_string(x.size()) +
                        " entries, expected " +
                        std::to_string(geometry_.tensor_size()));
    detail::Require(sigma > 0.0 && std::isfinite(sigma),
                    "score network needs a positive finite sigma");
  }

  std::vector<float> Embedding(double sigma) const {
    const int half = config_.embed / 2;
    const double t = std::log(sigma) / 4.0;
    std::vector<float> emb(config_.embed);
    for (int k = 0; k < half; ++k) {
      const double a = k * std::numbers::pi / 2.0 * t;
      emb[k] = static_cast<float>(std::sin(a));
      emb[half + k] = static_cast<float>(std::cos(a));
    }
    return emb;
  }

  // Affine map of the embedding: out[o] = bias[o] + sum_e W[o, e] emb[e].
  std::vector<float> Condition(std::size_t w_off, std::size_t b_off, int n,
                               const std::vector<float>& emb) const {
    std::vector<float> out(n);
    for (int o = 0; o < n; ++o) {
      double v = params_[b_off + o];
      for (int e = 0; e < config_.embed; ++e)
        v += params_[w_off + o * config_.embed + e] * emb[e];
      out[o] = static_cast<float>(v);
    }
    return out;
  }

  // P x: pixel means of the unfolded matrix lifted back; pad entries are 0.
  std::vector<double> StructuredPart(const Tensor& x) const {
    if (geometry_.domain == TrainDomain::kImage)
      return std::vector<double>(x.data(), x.data() + x.size());
    std::vector<double> pixel(inv_count_.size(), 0.0);
    const std::size_t n = entry_pixel_.size();
    for (std::size_t e = 0; e < n; ++e) pixel[entry_pixel_[e]] += x[e];
    for (std::size_t p = 0; p < pixel.size(); ++p) pixel[p] *= inv_count_[p];
    std::vector<double> px(x.size(), 0.0);
    for (std::size_t e = 0; e < n; ++e) px[e] = pixel[entry_pixel_[e]];
    return px;
  }

  // Forward pass writing e into `eps`. With `target` set, also backpropagates
  // weight * d||e - target||^2 into `grad` and stores the loss.
  void Run(const Tensor& x, double sigma, float* eps,
           const std::vector<float>* target, std::vector<double>* grad,
           double weight = 1.0, double* loss = nullptr) const {
    using namespace net_detail;
    const int H = config_.hidden;
    const int ph = geometry_.plane_h(), pw = geometry_.plane_w();
    const Eigen::Index n = geometry_.plane_size();
    const std::ptrdiff_t pn = PaddedSize(ph, pw), pitch = Pitch(pw);
    const double sd2 = config_.sigma_data * config_.sigma_data;
    const double c_raw = 1.0 / std::sqrt(sigma * sigma + sd2);
    const double c_struct = sigma / (sigma * sigma + sd2);

    const std::vector<float> emb = Embedding(sigma);
    const std::vector<float> a1 = Condition(offsets_.e1, offsets_.a1, H, emb);
    const std::vector<float> a2 = Condition(offsets_.e2, offsets_.a2, H, emb);
    std::vector<float> gain = Condition(offsets_.eg, offsets_.g, kFeatures, emb);
    for (float& v : gain) v *= static_cast<float>(config_.gain_scale);
    const float* w1 = &params_[offsets_.w1];
    const float* w2 = &params_[offsets_.w2];
    const float* w3 = &params_[offsets_.w3];
    const float b3 = params_[offsets_.b3];

    const std::vector<double> px = StructuredPart(x);

    // Padded buffers keep zero borders for the whole call.
    std::vector<float> feat(kFeatures * pn, 0.0f), h2(H * pn, 0.0f);
    std::vector<float> h1_pre(H * n), h1(H * n), h2_pre(H * n);
    std::vector<float> s1(H * n), s2(H * n);
    std::vector<float> d_out, d_flat, d_h2, d_h1;
    std::vector<double> g_a1(H, 0.0), g_a2(H, 0.0), g_gain(kFeatures, 0.0);
    if (target) {
      d_out.assign(pn, 0.0f);
      d_flat.resize(n);
      d_h2.resize(H * n);
      d_h1.resize(H * n);
    }
    double total_loss = 0.0;

    for (int plane = 0; plane < geometry_.planes(); ++plane) {
      const Eigen::Index base = plane * n;
      for (int y = 0; y < ph; ++y) {
        float* f0 = Interior(&feat[0], pw) + y * pitch;
        float* f1 = Interior(&feat[pn], pw) + y * pitch;
        float* f2 = Interior(&feat[2 * pn], pw) + y * pitch;
        for (int xx = 0; xx < pw; ++xx) {
          const Eigen::Index i = base + static_cast<Eigen::Index>(y) * pw + xx;
          const double v = x[i], p = px[i];
          f0[xx] = static_cast<float>((v - 0.5) * c_raw);
          f1[xx] = static_cast<float>((p - 0.5) * c_struct);
          f2[xx] = static_cast<float>((v - p) / sigma);
        }
      }
      // layer 1: 3x3 conv over the features
      for (int o = 0; o < H; ++o) {
        float* pre = &h1_pre[o * n];
        std::fill(pre, pre + n, a1[o]);
        for (int f = 0; f < kFeatures; ++f)
          Conv3Add(&feat[f * pn], w1 + (o * kFeatures + f) * 9, pre, ph, pw);
        Silu(pre, &h1[o * n], &s1[o * n], n);
      }
      // layer 2: 1x1 mixing, one row at a time for locality
      for (int y = 0; y < ph; ++y) {
        const std::ptrdiff_t r = static_cast<std::ptrdiff_t>(y) * pw;
        for (int o = 0; o < H; ++o) {
          float* pre = &h2_pre[o * n + r];
          std::fill(pre, pre + pw, a2[o]);
          for (int i2 = 0; i2 < H; ++i2) {
            const float wt = w2[o * H + i2];
            const float* src = &h1[i2 * n + r];
#pragma omp simd
            for (int xx = 0; xx < pw; ++xx) pre[xx] += wt * src[xx];
          }
          Silu(pre, Interior(&h2[o * pn], pw) + y * pitch, &s2[o * n + r], pw);
        }
      }
      // output: 3x3 conv plus the sigma-dependent skip
      float* out = eps + base;
      std::fill(out, out + n, b3);
      for (int i2 = 0; i2 < H; ++i2)
        Conv3Add(&h2[i2 * pn], w3 + i2 * 9, out, ph, pw);
      for (int f = 0; f < kFeatures; ++f) {
        const float gf = gain[f];
        for (int y = 0; y < ph; ++y) {
          const float* src = Interior(&feat[f * pn], pw) + y * pitch;
          float* dst = out + static_cast<std::ptrdiff_t>(y) * pw;
#pragma omp simd
          for (int xx = 0; xx < pw; ++xx) dst[xx] += gf * src[xx];
        }
      }
      if (!target) continue;

      // backward: d loss / d e = 2 (e - target)
      const float* tgt = target->data() + base;
      double plane_loss = 0.0;
      for (int y = 0; y < ph; ++y) {
        float* d = Interior(d_out.data(), pw) + y * pitch;
        for (int xx = 0; xx < pw; ++xx) {
          const Eigen::Index i = static_cast<Eigen::Index>(y) * pw + xx;
          const float r = out[i] - tgt[i];
          plane_loss += static_cast<double>(r) * r;
          d[xx] = static_cast<float>(2.0 * weight) * r;
        }
      }
      total_loss += plane_loss;
      std::vector<double>& G = *grad;
      // d_out is padded with zero borders, so whole-buffer reductions are
      // sums over the interior.
      G[offsets_.b3] += Sum(d_out.data(), pn);
      for (int f = 0; f < kFeatures; ++f)
        g_gain[f] += Dot(&feat[f * pn], d_out.data(), pn);
      const float* d_int = Interior(d_out.data(), pw);
      for (int y = 0; y < ph; ++y)
        std::copy(d_int + y * pitch, d_int + y * pitch + pw,
                  &d_flat[static_cast<std::ptrdiff_t>(y) * pw]);
      std::fill(d_h2.begin(), d_h2.end(), 0.0f);
      for (int i2 = 0; i2 < H; ++i2) {
        Conv3WeightGrad(&h2[i2 * pn], d_flat.data(), &G[offsets_.w3 + i2 * 9],
                        ph, pw);
        Conv3AddTransposed(d_out.data(), w3 + i2 * 9, &d_h2[i2 * n], ph, pw);
      }
      for (int o = 0; o < H; ++o) {
        float* d = &d_h2[o * n];
        SiluBackward(&h2_pre[o * n], &s2[o * n], d, n);
        g_a2[o] += Sum(d, n);
      }
      std::fill(d_h1.begin(), d_h1.end(), 0.0f);
      for (int y = 0; y < ph; ++y) {
        const std::ptrdiff_t r = static_cast<std::ptrdiff_t>(y) * pw;
        for (int o = 0; o < H; ++o)
          for (int i2 = 0; i2 < H; ++i2) {
            const float* src = &d_h2[o * n + r];
            G[offsets_.w2 + o * H + i2] += Dot(src, &h1[i2 * n + r], pw);
            const float wt = w2[o * H + i2];
            float* dst = &d_h1[i2 * n + r];
#pragma omp simd
            for (int xx = 0; xx < pw; ++xx) dst[xx] += wt * src[xx];
          }
      }
      for (int o = 0; o < H; ++o) {
        float* d = &d_h1[o * n];
        SiluBackward(&h1_pre[o * n], &s1[o * n], d, n);
        g_a1[o] += Sum(d, n);
        for (int f = 0; f < kFeatures; ++f)
          Conv3WeightGrad(&feat[f * pn], d,
                          &G[offsets_.w1 + (o * kFeatures + f) * 9], ph, pw);
      }
    }

    if (!target) return;
    std::vector<double>& G = *grad;
    auto back_condition = [&](std::size_t w_off, std::size_t b_off, int m,
                              const std::vector<double>& g) {
      for (int o = 0; o < m; ++o) {
        G[b_off + o] += g[o];
        for (int e = 0; e < config_.embed; ++e)
          G[w_off + o * config_.embed + e] += g[o] * emb[e];
      }
    };
    back_condition(offsets_.e1, offsets_.a1, H, g_a1);
    back_condition(offsets_.e2, offsets_.a2, H, g_a2);
    for (double& v : g_gain) v *= config_.gain_scale;
    back_condition(offsets_.eg, offsets_.g, kFeatures, g_gain);
    if (loss) *loss = total_loss;
  }

  ModelGeometry geometry_;
  ScoreNetConfig config_;
  Offsets offsets_{};
  std::vector<float> params_;
  std::vector<std::int32_t> entry_pixel_;
  std::vector<double> inv_count_;
};

}  // namespace shgm
