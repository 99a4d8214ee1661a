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
#include <cstdint>
#include <string>
#include <vector>

#include "shgm/error.hpp"

namespace shgm {

inline constexpr int kChannels = 3;

// H x W x 3 real image, interleaved (y, x, c) storage. Nominal range [0, 1].
class ImageTensor {
 public:
  ImageTensor() = default;
  ImageTensor(int height, int width, double fill = 0.0)
      : height_(height),
        width_(width),
        data_(static_cast<std::size_t>(height) * width * kChannels, fill) {
    detail::Require(height >= 0 && width >= 0, "negative image size");
  }

  int height() const { return height_; }
  int width() const { return width_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  std::size_t Index(int y, int x, int c) const {
    return (static_cast<std::size_t>(y) * width_ + x) * kChannels + c;
  }
  double& at(int y, int x, int c) { return data_[Index(y, x, c)]; }
  double at(int y, int x, int c) const { return data_[Index(y, x, c)]; }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  bool SameShape(const ImageTensor& other) const {
    return height_ == other.height_ && width_ == other.width_;
  }
  bool AllFinite() const {
    return std::all_of(data_.begin(), data_.end(),
                       [](double v) { return std::isfinite(v); });
  }

  // Copy of the h x w window whose top-left corner is (y0, x0).
  ImageTensor Crop(int y0, int x0, int h, int w) const {
    detail::Require(y0 >= 0 && x0 >= 0 && y0 + h <= height_ && x0 + w <= width_,
                    "crop window outside image");
    ImageTensor out(h, w);
    for (int y = 0; y < h; ++y) {
      const auto* src = &data_[Index(y0 + y, x0, 0)];
      std::copy(src, src + static_cast<std::size_t>(w) * kChannels,
                &out.data_[out.Index(y, 0, 0)]);
    }
    return out;
  }

  void Paste(const ImageTensor& patch, int y0, int x0) {
    detail::Require(y0 >= 0 && x0 >= 0 && y0 + patch.height_ <= height_ &&
                        x0 + patch.width_ <= width_,
                    "paste window outside image");
    for (int y = 0; y < patch.height_; ++y) {
      const auto* src = &patch.data_[patch.Index(y, 0, 0)];
      std::copy(src, src + static_cast<std::size_t>(patch.width_) * kChannels,
                &data_[Index(y0 + y, x0, 0)]);
    }
  }

  void Clamp(double lo = 0.0, double hi = 1.0) {
    for (auto& v : data_) v = std::clamp(v, lo, hi);
  }

  friend bool operator==(const ImageTensor&, const ImageTensor&) = default;

 private:
  int height_ = 0;
  int width_ = 0;
  std::vector<double> data_;
};

// Per-pixel sampling mask shared by the three channels; 1 = observed.
class Mask {
 public:
  Mask() = default;
  Mask(int height, int width, std::uint8_t fill = 1)
      : height_(height),
        width_(width),
        values_(static_cast<std::size_t>(height) * width, fill) {}

  int height() const { return height_; }
  int width() const { return width_; }
  std::size_t size() const { return values_.size(); }

  std::uint8_t& at(int y, int x) {
    return values_[static_cast<std::size_t>(y) * width_ + x];
  }
  std::uint8_t at(int y, int x) const {
    return values_[static_cast<std::size_t>(y) * width_ + x];
  }
  bool observed(int y, int x) const { return at(y, x) != 0; }

  std::vector<std::uint8_t>& values() { return values_; }
  const std::vector<std::uint8_t>& values() const { return values_; }

  bool Matches(const ImageTensor& image) const {
    return height_ == image.height() && width_ == image.width();
  }

  std::size_t CountMissing() const {
    return static_cast<std::size_t>(
        std::count(values_.begin(), values_.end(), std::uint8_t{0}));
  }

  Mask Crop(int y0, int x0, int h, int w) const {
    detail::Require(y0 >= 0 && x0 >= 0 && y0 + h <= height_ && x0 + w <= width_,
                    "crop window outside mask");
    Mask out(h, w);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) out.at(y, x) = at(y0 + y, x0 + x);
    return out;
  }

  friend bool operator==(const Mask&, const Mask&) = default;

 private:
  int height_ = 0;
  int width_ = 0;
  std::vector<std::uint8_t> values_;
};

}  // namespace shgm
