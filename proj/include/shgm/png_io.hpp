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

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "shgm/error.hpp"
#include "shgm/image.hpp"

namespace shgm {
namespace detail {

inline std::vector<std::uint8_t> ReadPng(const std::string& path,
                                         png_uint_32 format, int& height,
                                         int& width) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.c_str()))
    throw InvalidInput("cannot read PNG '" + path + "': " + image.message);
  image.format = format;
  std::vector<std::uint8_t> buffer(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr)) {
    png_image_free(&image);
    throw InvalidInput("cannot decode PNG '" + path + "': " + image.message);
  }
  height = static_cast<int>(image.height);
  width = static_cast<int>(image.width);
  return buffer;
}

inline void WritePng(const std::string& path, png_uint_32 format, int height,
                     int width, const std::vector<std::uint8_t>& buffer) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(width);
  image.height = static_cast<png_uint_32>(height);
  image.format = format;
  if (!png_image_write_to_file(&image, path.c_str(), 0, buffer.data(), 0,
                               nullptr))
    throw InvalidInput("cannot write PNG '" + path + "': " + image.message);
}

}  // namespace detail

// 8-bit RGB, v / 255 on load.
inline ImageTensor LoadImagePng(const std::string& path) {
  int h = 0, w = 0;
  const auto bytes = detail::ReadPng(path, PNG_FORMAT_RGB, h, w);
  ImageTensor out(h, w);
  for (std::size_t i = 0; i < bytes.size(); ++i) out.data()[i] = bytes[i] / 255.0;
  return out;
}

// round(v * 255) clamped to [0, 255].
inline void SaveImagePng(const std::string& path, const ImageTensor& image) {
  std::vector<std::uint8_t> bytes(image.size());
  for (std::size_t i = 0; i < bytes.size(); ++i)
    bytes[i] = static_cast<std::uint8_t>(
        std::clamp(std::lround(image.data()[i] * 255.0), 0L, 255L));
  detail::WritePng(path, PNG_FORMAT_RGB, image.height(), image.width(), bytes);
}

// Single-channel mask: >= 128 observed, otherwise missing.
inline Mask LoadMaskPng(const std::string& path) {
  int h = 0, w = 0;
  const auto bytes = detail::ReadPng(path, PNG_FORMAT_GRAY, h, w);
  Mask mask(h, w);
  for (std::size_t i = 0; i < bytes.size(); ++i)
    mask.values()[i] = bytes[i] >= 128 ? 1 : 0;
  return mask;
}

// 255 = observed, 0 = missing.
inline void SaveMaskPng(const std::string& path, const Mask& mask) {
  std::vector<std::uint8_t> bytes(mask.size());
  for (std::size_t i = 0; i < bytes.size(); ++i)
    bytes[i] = mask.values()[i] ? 255 : 0;
  detail::WritePng(path, PNG_FORMAT_GRAY, mask.height(), mask.width(), bytes);
}

// PNG files directly inside `dir`, lexicographic order, at most `limit`.
inline std::vector<std::string> ListPngImages(const std::string& dir,
                                              std::size_t limit = 0) {
  namespace fs = std::filesystem;
  std::error_code ec;
  if (!fs::is_directory(dir, ec))
    throw InvalidInput("not a directory: '" + dir + "'");
  std::vector<std::string> paths;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    std::string ext = entry.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char ch) { return std::tolower(ch); });
    if (ext == ".png") paths.push_back(entry.path().string());
  }
  std::sort(paths.begin(), paths.end());
  if (limit > 0 && paths.size() > limit) paths.resize(limit);
  return paths;
}

}  // namespace shgm
