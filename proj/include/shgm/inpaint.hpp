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

// Conditional sampling for inpainting. Each 64x64 patch runs its own chain:
//
//   X ~ N(0, sigma_max^2)
//   for i = N-1 .. 0:
//     predictor (skipped at i = N-1, where the chain starts)
//     low-rank update -> adjoint -> data consistency -> lift/fold
//     repeat M times: corrector, low-rank update, adjoint, DC, lift/fold
//
// Patches are independent, so they are spread over a worker pool with one
// random stream per patch index.

#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <functional>
#include <iostream>
#include <mutex>
#include <numeric>
#include <string>
#include <thread>
#include <vector>

#include "shgm/admm.hpp"
#include "shgm/error.hpp"
#include "shgm/hankel.hpp"
#include "shgm/image.hpp"
#include "shgm/patch.hpp"
#include "shgm/rng.hpp"
#include "shgm/sampler.hpp"
#include "shgm/score.hpp"
#include "shgm/score_net.hpp"

namespace shgm {

enum class DcMode { kExactMinimizer, kReplaceObserved, kShrinkAll };

inline const char* ToString(DcMode m) {
  switch (m) {
    case DcMode::kExactMinimizer: return "exact_minimizer";
    case DcMode::kReplaceObserved: return "replace_observed";
    case DcMode::kShrinkAll: return "shrink_all";
  }
  return "?";
}

struct DcConfig {
  double lambda = 0.1;
  DcMode mode = DcMode::kExactMinimizer;

  void Validate() const {
    detail::Require(std::isfinite(lambda) && lambda >= 0.0,
                    "DC lambda must be finite and >= 0");
  }
};

// Per-pixel data consistency between the low-rank estimate h and the
// observation y.
//   exact_minimizer:  argmin_x m (x - y)^2 + lambda (x - h)^2
//                     = (m y + lambda h) / (m + lambda), h where m = 0
//   replace_observed: y where observed, h elsewhere
//   shrink_all:       (m y + lambda h) / (1 + lambda) everywhere
inline double DcPixel(double h, double y, bool observed, const DcConfig& cfg) {
  switch (cfg.mode) {
    case DcMode::kReplaceObserved:
      return observed ? y : h;
    case DcMode::kShrinkAll:
      return ((observed ? y : 0.0) + cfg.lambda * h) / (1.0 + cfg.lambda);
    case DcMode::kExactMinimizer:
      break;
  }
  if (!observed) return h;
  return (y + cfg.lambda * h) / (1.0 + cfg.lambda);
}

inline ImageTensor DcStep(const ImageTensor& estimate, const ImageTensor& y,
                          const Mask& mask, const DcConfig& cfg) {
  cfg.Validate();
  detail::Require(estimate.SameShape(y) && mask.Matches(y),
                  "DC inputs have mismatched shapes");
  ImageTensor out(y.height(), y.width());
  for (int r = 0; r < y.height(); ++r)
    for (int c = 0; c < y.width(); ++c) {
      const bool obs = mask.observed(r, c);
      for (int ch = 0; ch < kChannels; ++ch)
        out.at(r, c, ch) = DcPixel(estimate.at(r, c, ch), y.at(r, c, ch), obs, cfg);
    }
  return out;
}

// RMS gap between the estimate and the observation over observed pixels.
inline double DcResidual(const ImageTensor& estimate, const ImageTensor& y,
                         const Mask& mask) {
  double sum = 0.0;
  std::size_t count = 0;
  for (int r = 0; r < y.height(); ++r)
    for (int c = 0; c < y.width(); ++c) {
      if (!mask.observed(r, c)) continue;
      for (int ch = 0; ch < kChannels; ++ch) {
        const double d = estimate.at(r, c, ch) - y.at(r, c, ch);
        sum += d * d;
        ++count;
      }
    }
  return count ? std::sqrt(sum / count) : 0.0;
}

struct InpaintConfig {
  NoiseSchedule schedule;
  SamplerConfig sampler;
  AdmmConfig admm;
  DcConfig dc;
  ModelGeometry geometry;
  PadPolicy pad = PadPolicy::kBoundary;
  int workers = 1;
  std::uint64_t seed = 0;

  void Validate() const {
    schedule.Validate();
    sampler.Validate();
    dc.Validate();
    geometry.layout.Validate();
    admm.Validate(geometry.layout.rows(), geometry.layout.cols());
    detail::Require(sampler.steps == schedule.steps,
                    "sampler N must equal the schedule length");
    detail::Require(geometry.layout.patch_h == geometry.layout.patch_w,
                    "inpainting tiles must be square");
    detail::Require(workers >= 1, "workers must be >= 1");
    if (geometry.domain == TrainDomain::kHankel) (void)geometry.fold_spec();
  }
};

// One DC'd iterate, reported after every low-rank/DC cycle.
struct IterationInfo {
  int patch = 0;
  int i = 0;       // noise index
  int j = 0;       // 0 after the predictor, 1..M after each corrector
  double sigma = 0.0;
  double state_max_abs = 0.0;  // max |X| entering the cycle
  double dc_residual = 0.0;
};

using IterationHook = std::function<void(const IterationInfo&)>;

struct PatchOptions {
  int patch_index = 0;
  IterationHook hook;  // called from the worker thread
  // Receives one status line per 100 outer iterations.
  std::function<void(const std::string&)> log;
};

namespace detail {

inline RowMatrix StateToMatrix(const Tensor& state, const ModelGeometry& g) {
  if (g.domain == TrainDomain::kImage)
    return Lift(PlanarToImage(state, g.layout.patch_h, g.layout.patch_w),
                g.layout)
        .data;
  FoldedTensor t{g.fold_spec(), state};
  return Unfold(t, g.layout).data;
}

}  // namespace detail

// Runs one patch chain. `y` is the observation tile (values at missing
// pixels are ignored) and `mask` its mask tile.
inline ImageTensor InpaintPatch(const ImageTensor& y, const Mask& mask,
                                const ScoreFunction& model,
                                const InpaintConfig& cfg, Rng& rng,
                                const PatchOptions& opts = {}) {
  const ModelGeometry& g = cfg.geometry;
  detail::Require(y.height() == g.layout.patch_h && y.width() == g.layout.patch_w,
                  "observation tile does not match the patch size");
  detail::Require(mask.Matches(y), "mask tile does not match observation tile");
  const ImageTensor y0 = ApplyMask(y, mask);

  Tensor state = InitSample(cfg.schedule, g.tensor_size(), rng);
  AdmmState admm = InitAdmmState(Lift(y0, g.layout).data, cfg.admm, rng);
  ImageTensor x = y0;

  auto cycle = [&](int i, int j) {
    IterationInfo info{opts.patch_index, i, j, cfg.schedule.sigma(i),
                       state.cwiseAbs().maxCoeff(), 0.0};
    const RowMatrix x_lr = AdmmSweep(admm, detail::StateToMatrix(state, g));
    const ImageTensor h = Adjoint(HankelMatrix{g.layout, x_lr});
    info.dc_residual = DcResidual(h, y0, mask);
    x = DcStep(h, y0, mask, cfg.dc);
    if (!x.AllFinite())
      throw NumericalFailure("non-finite patch after data consistency at noise "
                             "index " + std::to_string(i));
    state = EncodePatch(x, g);
    if (opts.hook) opts.hook(info);
    if (opts.log && j == 0 && (i % 100 == 0 || i == cfg.schedule.steps - 1)) {
      char line[160];
      std::snprintf(line, sizeof line,
                    "patch %d iter %d sigma %.6g dc_residual %.6g",
                    opts.patch_index, i, info.sigma, info.dc_residual);
      opts.log(line);
    }
  };

  const int N = cfg.schedule.steps;
  for (int i = N - 1; i >= 0; --i) {
    if (i + 1 < N) state = PredictorStep(state, i, model, cfg.schedule, rng);
    cycle(i, 0);
    for (int j = 1; j <= cfg.sampler.corrector_steps; ++j) {
      state = CorrectorStep(state, i, model, cfg.schedule, cfg.sampler, rng);
      cycle(i, j);
    }
  }
  x.Clamp(0.0, 1.0);
  return x;
}

struct ImageOptions {
  // Execution order of patch indices; empty means 0..count-1. Results do not
  // depend on it.
  std::vector<int> order;
  IterationHook hook;
  std::ostream* progress = nullptr;
};

// Pads, tiles, restores every tile and reassembles the image.
inline ImageTensor InpaintImage(const ImageTensor& observation, const Mask& mask,
                                const ScoreFunction& model,
                                const InpaintConfig& cfg,
                                const ImageOptions& opts = {}) {
  cfg.Validate();
  detail::Require(mask.Matches(observation),
                  "mask and observation shapes differ");
  detail::Require(observation.AllFinite(), "observation has non-finite values");
  const int patch = cfg.geometry.layout.patch_h;
  auto [grid, tiles] = PadAndTile(observation, patch, cfg.pad);
  const std::vector<Mask> masks = TileMask(mask, grid);
  const int count = grid.count();

  std::vector<int> order = opts.order;
  if (order.empty()) {
    order.resize(count);
    std::iota(order.begin(), order.end(), 0);
  }
  {
    std::vector<int> sorted = order;
    std::sort(sorted.begin(), sorted.end());
    std::vector<int> expect(count);
    std::iota(expect.begin(), expect.end(), 0);
    detail::Require(sorted == expect, "patch order must be a permutation");
  }

  std::vector<ImageTensor> results(count);
  std::vector<std::exception_ptr> errors(count);
  std::atomic<int> next{0};
  std::mutex log_mutex;

  auto worker = [&] {
    for (;;) {
      const int slot = next.fetch_add(1);
      if (slot >= count) return;
      const int k = order[slot];
      try {
        Rng rng = Rng::Child(cfg.seed, static_cast<std::uint64_t>(k));
        PatchOptions po;
        po.patch_index = k;
        if (opts.hook)
          po.hook = [&](const IterationInfo& info) {
            std::lock_guard<std::mutex> lock(log_mutex);
            opts.hook(info);
          };
        if (opts.progress)
          po.log = [&](const std::string& line) {
            std::lock_guard<std::mutex> lock(log_mutex);
            *opts.progress << line << '\n' << std::flush;
          };
        results[k] = InpaintPatch(tiles[k], masks[k], model, cfg, rng, po);
      } catch (...) {
        errors[k] = std::current_exception();
      }
    }
  };

  const int n_threads = std::min(cfg.workers, count);
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }

  for (int k = 0; k < count; ++k) {
    if (!errors[k]) continue;
    try {
      std::rethrow_exception(errors[k]);
    } catch (const InvalidInput& e) {
      throw InvalidInput("patch " + std::to_string(k) + ": " + e.what());
    } catch (const NumericalFailure& e) {
      throw NumericalFailure("patch " + std::to_string(k) + ": " + e.what());
    }
  }
  ImageTensor out = Untile(grid, results);
  out.Clamp(0.0, 1.0);
  return out;
}

}  // namespace shgm
