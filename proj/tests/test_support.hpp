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

// Shared fixtures for the unit and acceptance tests.

#pragma once

#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <numbers>
#include <string>
#include <sys/wait.h>
#include <unistd.h>

#include "shgm/shgm.hpp"

namespace shgm::testing {

// Stationary colour texture: four plane waves shared by the channels with
// per-channel amplitude and phase, plus optional white noise. Values stay in
// [0.1, 0.9] before noise. Any crop of it is "the same texture".
inline ImageTensor Texture(int height, int width, double noise = 0.02,
                           std::uint64_t noise_seed = 7, int y0 = 0,
                           int x0 = 0) {
  struct Wave {
    double fy, fx;
    std::array<double, 3> amp, phase;
  };
  static const Wave waves[] = {
      {0.047, 0.113, {0.14, 0.10, 0.06}, {0.0, 0.7, 1.9}},
      {0.131, -0.041, {0.08, 0.12, 0.10}, {2.1, 0.3, 4.0}},
      {0.019, 0.071, {0.10, 0.06, 0.14}, {1.2, 2.8, 0.5}},
      {0.089, 0.089, {0.06, 0.10, 0.08}, {3.3, 5.1, 2.2}},
  };
  Rng rng(noise_seed);
  ImageTensor img(height, width);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x)
      for (int c = 0; c < kChannels; ++c) {
        double v = 0.5;
        for (const Wave& w : waves)
          v += w.amp[c] * std::cos(2.0 * std::numbers::pi *
                                       (w.fy * (y + y0) + w.fx * (x + x0)) +
                                   w.phase[c]);
        if (noise > 0.0) v += noise * rng.Normal();
        img.at(y, x, c) = std::clamp(v, 0.0, 1.0);
      }
  return img;
}

inline ImageTensor RandomImage(int height, int width, Rng& rng) {
  ImageTensor img(height, width);
  for (double& v : img.data()) v = rng.Uniform();
  return img;
}

inline std::filesystem::path TempDir() {
  static const std::filesystem::path dir = [] {
    auto d = std::filesystem::temp_directory_path() /
             ("shgm_test_" + std::to_string(::getpid()));
    std::filesystem::create_directories(d);
    return d;
  }();
  return dir;
}

inline std::string TempPath(const std::string& name) {
  return (TempDir() / name).string();
}

inline std::string ReadFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

struct CommandResult {
  int exit_code = -1;
  std::string output;  // stdout and stderr
};

inline CommandResult RunCommand(const std::string& command) {
  CommandResult result;
  FILE* pipe = ::popen((command + " 2>&1").c_str(), "r");
  if (!pipe) return result;
  char buffer[4096];
  while (std::size_t n = std::fread(buffer, 1, sizeof buffer, pipe))
    result.output.append(buffer, n);
  const int status = ::pclose(pipe);
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return result;
}

}  // namespace shgm::testing
