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

#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "shgm/error.hpp"
#include "shgm/image.hpp"
#include "shgm/rng.hpp"

namespace shgm {

inline ImageTensor RandomCrop(const ImageTensor& image, int size, Rng& rng) {
  detail::Require(size >= 1, "crop size must be positive");
  detail::Require(image.height() >= size && image.width() >= size,
                  "image " + std::to_string(image.height()) + "x" +
                      std::to_string(image.width()) + " is smaller than crop " +
                      std::to_string(size));
  const int y0 = static_cast<int>(rng.UniformInt(0, image.height() - size));
  const int x0 = static_cast<int>(rng.UniformInt(0, image.width() - size));
  return image.Crop(y0, x0, size, size);
}

// How much border to add before tiling.
//   kBoundary: round up to a multiple of the patch size, then add one extra
//              patch of margin split across both sides (256 -> 320).
//   kAligned:  only round up to a multiple of the patch size (64 -> 64).
enum class PadPolicy { kBoundary, kAligned };

inline const char* ToString(PadPolicy p) {
  return p == PadPolicy::kBoundary ? "boundary" : "aligned";
}

struct TileGrid {
  int original_h = 0;
  int original_w = 0;
  int padded_h = 0;
  int padded_w = 0;
  int patch = 64;
  int pad_top = 0;
  int pad_left = 0;
  int rows = 0;
  int cols = 0;

  int count() const { return rows * cols; }
  int pad_bottom() const { return padded_h - original_h - pad_top; }
  int pad_right() const { return padded_w - original_w - pad_left; }

  friend bool operator==(const TileGrid&, const TileGrid&) = default;
};

inline TileGrid MakeTileGrid(int height, int width, int patch = 64,
                             PadPolicy policy = PadPolicy::kBoundary) {
  detail::Require(height >= 1 && width >= 1, "empty image");
  detail::Require(patch >= 1, "patch size must be positive");
  auto padded = [&](int n) {
    int p = (n + patch - 1) / patch * patch;
    return policy == PadPolicy::kBoundary ? p + patch : p;
  };
  TileGrid grid;
  grid.original_h = height;
  grid.original_w = width;
  grid.patch = patch;
  grid.padded_h = padded(height);
  grid.padded_w = padded(width);
  grid.pad_top = (grid.padded_h - height) / 2;
  grid.pad_left = (grid.padded_w - width) / 2;
  grid.rows = grid.padded_h / patch;
  grid.cols = grid.padded_w / patch;
  return grid;
}

// Edge-replicating pad of `image` onto the grid's padded canvas.
inline ImageTensor PadReplicate(const ImageTensor& image, const TileGrid& grid) {
  detail::Require(image.height() == grid.original_h &&
                      image.width() == grid.original_w,
                  "image does not match tile grid");
  ImageTensor out(grid.padded_h, grid.padded_w);
  for (int y = 0; y < grid.padded_h; ++y) {
    const int sy = std::clamp(y - grid.pad_top, 0, grid.original_h - 1);
    for (int x = 0; x < grid.padded_w; ++x) {
      const int sx = std::clamp(x - grid.pad_left, 0, grid.original_w - 1);
      for (int c = 0; c < kChannels; ++c) out.at(y, x, c) = image.at(sy, sx, c);
    }
  }
  return out;
}

inline Mask PadReplicate(const Mask& mask, const TileGrid& grid) {
  detail::Require(mask.height() == grid.original_h &&
                      mask.width() == grid.original_w,
                  "mask does not match tile grid");
  Mask out(grid.padded_h, grid.padded_w);
  for (int y = 0; y < grid.padded_h; ++y) {
    const int sy = std::clamp(y - grid.pad_top, 0, grid.original_h - 1);
    for (int x = 0; x < grid.padded_w; ++x) {
      const int sx = std::clamp(x - grid.pad_left, 0, grid.original_w - 1);
      out.at(y, x) = mask.at(sy, sx);
    }
  }
  return out;
}

inline std::pair<TileGrid, std::vector<ImageTensor>> PadAndTile(
    const ImageTensor& image, int patch = 64,
    PadPolicy policy = PadPolicy::kBoundary) {
  TileGrid grid = MakeTileGrid(image.height(), image.width(), patch, policy);
  const ImageTensor padded = PadReplicate(image, grid);
  std::vector<ImageTensor> tiles;
  tiles.reserve(grid.count());
  for (int r = 0; r < grid.rows; ++r)
    for (int c = 0; c < grid.cols; ++c)
      tiles.push_back(padded.Crop(r * patch, c * patch, patch, patch));
  return {grid, std::move(tiles)};
}

inline std::vector<Mask> TileMask(const Mask& mask, const TileGrid& grid) {
  const Mask padded = PadReplicate(mask, grid);
  std::vector<Mask> tiles;
  tiles.reserve(grid.count());
  for (int r = 0; r < grid.rows; ++r)
    for (int c = 0; c < grid.cols; ++c)
      tiles.push_back(padded.Crop(r * grid.patch, c * grid.patch, grid.patch,
                                  grid.patch));
  return tiles;
}

// Concatenates row-major tiles and crops the padding margins.
inline ImageTensor Untile(const TileGrid& grid,
                          const std::vector<ImageTensor>& patches) {
  detail::Require(static_cast<int>(patches.size()) == grid.count(),
                  "expected " + std::to_string(grid.count()) + " patches, got " +
                      std::to_string(patches.size()));
  ImageTensor canvas(grid.padded_h, grid.padded_w);
  for (int r = 0; r < grid.rows; ++r)
    for (int c = 0; c < grid.cols; ++c) {
      const ImageTensor& p = patches[r * grid.cols + c];
      detail::Require(p.height() == grid.patch && p.width() == grid.patch,
                      "patch has the wrong size");
      canvas.Paste(p, r * grid.patch, c * grid.patch);
    }
  return canvas.Crop(grid.pad_top, grid.pad_left, grid.original_h,
                     grid.original_w);
}

// ---------------------------------------------------------------------------
// Masks

enum class MaskKind { kRandom, kBlock, kText };

struct MaskParams {
  int height = 256;
  int width = 256;
  // Missing fraction for kRandom, covered area fraction for kBlock.
  double ratio = 0.5;
  // Glyph image for kText; dark pixels (luminance < 0.5) become missing.
  ImageTensor overlay;
};

// Block side lengths for a centered rectangle covering `ratio` of the image:
// the height follows the image aspect, the width is the nearest integer that
// brings the area closest to ratio * H * W.
inline std::pair<int, int> BlockExtent(int height, int width, double ratio) {
  if (ratio <= 0.0) return {0, 0};
  const double target = ratio * height * width;
  int h = std::clamp(static_cast<int>(std::lround(height * std::sqrt(ratio))),
                     1, height);
  int w = std::clamp(static_cast<int>(std::lround(target / h)), 0, width);
  return {h, w};
}

inline Mask MakeMask(MaskKind kind, const MaskParams& params, Rng& rng) {
  detail::Require(params.height >= 1 && params.width >= 1,
                  "mask size must be positive");
  Mask mask(params.height, params.width, 1);
  switch (kind) {
    case MaskKind::kRandom: {
      detail::Require(params.ratio >= 0.0 && params.ratio < 1.0,
                      "random mask ratio must lie in [0, 1)");
      for (auto& v : mask.values()) v = rng.Uniform() < params.ratio ? 0 : 1;
      break;
    }
    case MaskKind::kBlock: {
      detail::Require(params.ratio >= 0.0 && params.ratio <= 1.0,
                      "block mask ratio must lie in [0, 1]");
      const auto [h, w] = BlockExtent(params.height, params.width, params.ratio);
      const int top = (params.height - h) / 2;
      const int left = (params.width - w) / 2;
      for (int y = top; y < top + h; ++y)
        for (int x = left; x < left + w; ++x) mask.at(y, x) = 0;
      break;
    }
    case MaskKind::kText: {
      const ImageTensor& glyphs = params.overlay;
      detail::Require(!glyphs.empty(), "text mask needs an overlay image");
      for (int y = 0; y < params.height; ++y) {
        const int sy = static_cast<int>(
            static_cast<long long>(y) * glyphs.height() / params.height);
        for (int x = 0; x < params.width; ++x) {
          const int sx = static_cast<int>(
              static_cast<long long>(x) * glyphs.width() / params.width);
          const double lum = 0.299 * glyphs.at(sy, sx, 0) +
                             0.587 * glyphs.at(sy, sx, 1) +
                             0.114 * glyphs.at(sy, sx, 2);
          mask.at(y, x) = lum < 0.5 ? 0 : 1;
        }
      }
      break;
    }
  }
  return mask;
}

// y = D x + e. Missing pixels are zero on every channel; observed pixels get
// optional Gaussian noise of standard deviation `noise_level`.
inline ImageTensor ApplyMask(const ImageTensor& image, const Mask& mask,
                             double noise_level, Rng& rng) {
  detail::Require(mask.Matches(image), "mask and image shapes differ");
  detail::Require(noise_level >= 0.0, "noise level must be non-negative");
  ImageTensor out(image.height(), image.width());
  for (int y = 0; y < image.height(); ++y)
    for (int x = 0; x < image.width(); ++x) {
      if (!mask.observed(y, x)) continue;
      for (int c = 0; c < kChannels; ++c) {
        double v = image.at(y, x, c);
        if (noise_level > 0.0) v += noise_level * rng.Normal();
        out.at(y, x, c) = v;
      }
    }
  return out;
}

inline ImageTensor ApplyMask(const ImageTensor& image, const Mask& mask) {
  Rng unused(0);
  return ApplyMask(image, mask, 0.0, unused);
}

}  // namespace shgm
