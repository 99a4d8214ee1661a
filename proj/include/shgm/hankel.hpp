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

// Lifting between RGB patches and block-Hankel matrices, and the lossless
// fold/unfold between Hankel matrices and multi-channel score-model tensors.
//
// Row i of the Hankel matrix is the i-th w x w x 3 sliding window, windows
// enumerated row-major over their top-left corners. Within a row, entries are
// channel-major, then row-major inside the window:
//   column = c * w * w + dy * w + dx.

#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "shgm/error.hpp"
#include "shgm/image.hpp"

namespace shgm {

using RowMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct HankelLayout {
  int patch_h = 64;
  int patch_w = 64;
  int window = 8;

  static constexpr int channels = kChannels;

  Eigen::Index rows() const {
    return static_cast<Eigen::Index>(patch_h - window + 1) *
           (patch_w - window + 1);
  }
  Eigen::Index cols() const {
    return static_cast<Eigen::Index>(channels) * window * window;
  }
  Eigen::Index entries() const { return rows() * cols(); }
  int windows_x() const { return patch_w - window + 1; }

  bool valid() const {
    return window >= 1 && window <= patch_h && window <= patch_w;
  }
  void Validate() const {
    detail::Require(valid(), "invalid Hankel layout: window " +
                                 std::to_string(window) + " for patch " +
                                 std::to_string(patch_h) + "x" +
                                 std::to_string(patch_w));
  }

  friend bool operator==(const HankelLayout&, const HankelLayout&) = default;
};

struct HankelMatrix {
  HankelLayout layout;
  RowMatrix data;
};

struct FoldSpec {
  int fold_h = 0;
  int fold_w = 0;
  int fold_c = 0;
  Eigen::Index pad_tail = 0;

  Eigen::Index plane() const {
    return static_cast<Eigen::Index>(fold_h) * fold_w;
  }
  Eigen::Index size() const { return plane() * fold_c; }

  friend bool operator==(const FoldSpec&, const FoldSpec&) = default;
};

// Folded tensor stored plane by plane: entry (a, b, c) of the fold_h x fold_w
// x fold_c tensor lives at data[c * fold_h * fold_w + a * fold_w + b], which is
// also the row-major position of the Hankel entry it came from.
struct FoldedTensor {
  FoldSpec spec;
  Eigen::VectorXd data;

  double at(int a, int b, int c) const {
    return data[c * spec.plane() + static_cast<Eigen::Index>(a) * spec.fold_w +
                b];
  }
};

// Flat ImageTensor offset of every Hankel entry, in row-major entry order.
inline std::vector<std::int32_t> EntryPixelIndex(const HankelLayout& layout) {
  layout.Validate();
  const int w = layout.window;
  const int nx = layout.windows_x();
  const Eigen::Index K = layout.cols();
  std::vector<std::int32_t> index(static_cast<std::size_t>(layout.entries()));
  for (Eigen::Index row = 0; row < layout.rows(); ++row) {
    const int py = static_cast<int>(row / nx);
    const int px = static_cast<int>(row % nx);
    for (int c = 0; c < kChannels; ++c)
      for (int dy = 0; dy < w; ++dy)
        for (int dx = 0; dx < w; ++dx) {
          const Eigen::Index col = (c * w + dy) * w + dx;
          index[row * K + col] = static_cast<std::int32_t>(
              ((py + dy) * layout.patch_w + (px + dx)) * kChannels + c);
        }
  }
  return index;
}

inline HankelMatrix Lift(const ImageTensor& patch, const HankelLayout& layout) {
  layout.Validate();
  detail::Require(
      patch.height() == layout.patch_h && patch.width() == layout.patch_w,
      "patch is " + std::to_string(patch.height()) + "x" +
          std::to_string(patch.width()) + ", layout expects " +
          std::to_string(layout.patch_h) + "x" +
          std::to_string(layout.patch_w));
  detail::Require(patch.AllFinite(), "patch contains non-finite values");

  const int w = layout.window;
  const int nx = layout.windows_x();
  HankelMatrix out{layout, RowMatrix(layout.rows(), layout.cols())};
  for (Eigen::Index row = 0; row < layout.rows(); ++row) {
    const int py = static_cast<int>(row / nx);
    const int px = static_cast<int>(row % nx);
    double* dst = out.data.row(row).data();
    for (int c = 0; c < kChannels; ++c)
      for (int dy = 0; dy < w; ++dy)
        for (int dx = 0; dx < w; ++dx)
          *dst++ = patch.at(py + dy, px + dx, c);
  }
  return out;
}

// Number of Hankel entries that copy each pixel (same for every channel).
inline ImageTensor MultiplicityMap(const HankelLayout& layout) {
  layout.Validate();
  ImageTensor counts(layout.patch_h, layout.patch_w);
  for (std::int32_t p : EntryPixelIndex(layout)) counts.data()[p] += 1.0;
  return counts;
}

// Pseudo-inverse of Lift: each pixel becomes the mean of every matrix entry
// mapped to it. Deviations are accumulated about the first copy seen, so a
// structurally consistent matrix maps back without rounding error.
inline ImageTensor Adjoint(const HankelMatrix& matrix) {
  const HankelLayout& layout = matrix.layout;
  layout.Validate();
  detail::Require(matrix.data.rows() == layout.rows() &&
                      matrix.data.cols() == layout.cols(),
                  "Hankel matrix shape does not match its layout");
  const auto index = EntryPixelIndex(layout);
  const std::size_t n_pix =
      static_cast<std::size_t>(layout.patch_h) * layout.patch_w * kChannels;
  std::vector<double> anchor(n_pix, 0.0), deviation(n_pix, 0.0);
  std::vector<std::int32_t> count(n_pix, 0);
  const double* values = matrix.data.data();
  for (std::size_t e = 0; e < index.size(); ++e) {
    const std::int32_t p = index[e];
    if (count[p]++ == 0)
      anchor[p] = values[e];
    else
      deviation[p] += values[e] - anchor[p];
  }
  ImageTensor out(layout.patch_h, layout.patch_w);
  for (std::size_t p = 0; p < n_pix; ++p)
    out.data()[p] = anchor[p] + deviation[p] / count[p];
  return out;
}

inline FoldSpec MakeFoldSpec(Eigen::Index entries, int target_h,
                             int target_w) {
  detail::Require(target_h >= 1 && target_w >= 1,
                  "fold target must be at least 1x1");
  FoldSpec spec;
  spec.fold_h = target_h;
  spec.fold_w = target_w;
  const Eigen::Index plane = spec.plane();
  spec.fold_c = static_cast<int>((entries + plane - 1) / plane);
  if (spec.fold_c == 0) spec.fold_c = 1;
  spec.pad_tail = spec.size() - entries;
  return spec;
}

inline FoldSpec MakeFoldSpec(const HankelLayout& layout, int target_h,
                             int target_w) {
  return MakeFoldSpec(layout.entries(), target_h, target_w);
}

inline FoldedTensor Fold(const HankelMatrix& matrix, int target_h,
                         int target_w) {
  const Eigen::Index n = matrix.data.size();
  FoldedTensor out{MakeFoldSpec(n, target_h, target_w), {}};
  out.data = Eigen::VectorXd::Zero(out.spec.size());
  std::memcpy(out.data.data(), matrix.data.data(), sizeof(double) * n);
  return out;
}

// Left inverse of Fold; whatever sits in the pad tail is discarded.
inline HankelMatrix Unfold(const FoldedTensor& tensor,
                           const HankelLayout& layout) {
  layout.Validate();
  const FoldSpec& spec = tensor.spec;
  detail::Require(spec.fold_h >= 1 && spec.fold_w >= 1 && spec.fold_c >= 1,
                  "degenerate fold spec");
  detail::Require(tensor.data.size() == spec.size(),
                  "folded tensor size does not match its spec");
  detail::Require(spec.size() == layout.entries() + spec.pad_tail &&
                      spec.pad_tail >= 0 && spec.pad_tail < spec.plane(),
                  "fold spec is inconsistent with the Hankel layout");
  HankelMatrix out{layout, RowMatrix(layout.rows(), layout.cols())};
  std::memcpy(out.data.data(), tensor.data.data(),
              sizeof(double) * layout.entries());
  return out;
}

// ---------------------------------------------------------------------------
// Diagnostic dump: six little-endian int32 (L, K, patch_h, patch_w, channels,
// window) followed by the L*K entries as row-major little-endian float64.

namespace detail {

template <typename T>
void WriteLE(std::ostream& os, T value) {
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big)
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i)
      std::swap(bytes[i], bytes[sizeof(T) - 1 - i]);
  os.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <typename T>
T ReadLE(std::istream& is) {
  unsigned char bytes[sizeof(T)];
  if (!is.read(reinterpret_cast<char*>(bytes), sizeof(T)))
    throw InvalidInput("unexpected end of binary stream");
  if constexpr (std::endian::native == std::endian::big)
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i)
      std::swap(bytes[i], bytes[sizeof(T) - 1 - i]);
  T value;
  std::memcpy(&value, bytes, sizeof(T));
  return value;
}

}  // namespace detail

inline void WriteHankelDump(std::ostream& os, const HankelMatrix& matrix) {
  const HankelLayout& l = matrix.layout;
  for (std::int64_t v : {static_cast<std::int64_t>(matrix.data.rows()),
                         static_cast<std::int64_t>(matrix.data.cols()),
                         std::int64_t{l.patch_h}, std::int64_t{l.patch_w},
                         std::int64_t{HankelLayout::channels},
                         std::int64_t{l.window}})
    detail::WriteLE<std::int32_t>(os, static_cast<std::int32_t>(v));
  const double* values = matrix.data.data();
  for (Eigen::Index i = 0; i < matrix.data.size(); ++i)
    detail::WriteLE<double>(os, values[i]);
}

inline HankelMatrix ReadHankelDump(std::istream& is) {
  const auto rows = detail::ReadLE<std::int32_t>(is);
  const auto cols = detail::ReadLE<std::int32_t>(is);
  HankelLayout layout;
  layout.patch_h = detail::ReadLE<std::int32_t>(is);
  layout.patch_w = detail::ReadLE<std::int32_t>(is);
  const auto channels = detail::ReadLE<std::int32_t>(is);
  layout.window = detail::ReadLE<std::int32_t>(is);
  layout.Validate();
  detail::Require(channels == HankelLayout::channels &&
                      rows == layout.rows() && cols == layout.cols(),
                  "Hankel dump header is inconsistent");
  HankelMatrix out{layout, RowMatrix(rows, cols)};
  double* values = out.data.data();
  for (Eigen::Index i = 0; i < out.data.size(); ++i)
    values[i] = detail::ReadLE<double>(is);
  return out;
}

}  // namespace shgm
