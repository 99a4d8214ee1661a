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

// Plain-text run configuration: one `key = value` per line, `#` starts a
// comment. Keys prefixed with `run.` are informational (written into run
// summaries) and skipped on parse, so a summary can be fed back as a config.

#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "shgm/error.hpp"
#include "shgm/hankel.hpp"
#include "shgm/inpaint.hpp"
#include "shgm/patch.hpp"
#include "shgm/score.hpp"
#include "shgm/score_net.hpp"
#include "shgm/train.hpp"

namespace shgm {

inline int DefaultWorkers() {
  const unsigned n = std::thread::hardware_concurrency();
  return n == 0 ? 1 : static_cast<int>(n);
}

struct RunConfig {
  int window = 8;
  int patch = 64;
  double sigma_min = 0.01;
  double sigma_max = 378.0;
  int N = 1000;
  int M = 1;
  double snr = 0.21;
  int rank = 48;
  double mu = 1.0;
  int sweeps = 1;
  double lambda = 0.1;
  DcMode dc_mode = DcMode::kExactMinimizer;
  PadPolicy pad = PadPolicy::kBoundary;
  TrainDomain train_domain = TrainDomain::kHankel;
  double lr = 2e-4;
  int steps = 1000;
  int images = 10;
  int batch = 1;
  int hidden = 8;
  std::uint64_t seed = 0;
  int workers = DefaultWorkers();

  HankelLayout layout() const { return {patch, patch, window}; }
  NoiseSchedule schedule() const { return {sigma_min, sigma_max, N}; }
  // Fold target: 3 * patch square, 192 x 192 at the default geometry.
  int fold_side() const { return 3 * patch; }

  InpaintConfig inpaint() const {
    InpaintConfig c;
    c.schedule = schedule();
    c.sampler = {N, M, snr};
    c.admm = {rank, mu, sweeps};
    c.dc = {lambda, dc_mode};
    c.geometry = {train_domain, layout(), fold_side(), fold_side()};
    c.pad = pad;
    c.workers = workers;
    c.seed = seed;
    return c;
  }

  TrainConfig train() const {
    TrainConfig t;
    t.learning_rate = lr;
    t.steps = steps;
    t.batch_size = batch;
    t.images = images;
    t.domain = train_domain;
    t.seed = seed;
    return t;
  }

  ScoreNetConfig net() const {
    ScoreNetConfig n;
    n.hidden = hidden;
    return n;
  }

  void Validate() const {
    detail::Require(patch >= 1 && window >= 1 && window <= patch,
                    "window must lie in [1, patch]");
    InpaintConfig ic = inpaint();
    ic.Validate();
    train().Validate();
    detail::Require(hidden >= 1, "hidden must be >= 1");
  }

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

namespace detail {

inline std::string Trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T ParseNumber(const std::string& key, const std::string& text) {
  T value{};
  const char* first = text.data();
  const char* last = first + text.size();
  const auto [ptr, ec] = std::from_chars(first, last, value);
  Require(ec == std::errc() && ptr == last,
          "config key '" + key + "': cannot parse '" + text + "'");
  if constexpr (std::is_floating_point_v<T>)
    Require(std::isfinite(value), "config key '" + key + "' must be finite");
  return value;
}

inline std::string FormatDouble(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

struct ConfigField {
  const char* key;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

template <typename T>
ConfigField NumberField(const char* key, T RunConfig::*member) {
  return {key,
          [key, member](RunConfig& c, const std::string& v) {
            c.*member = ParseNumber<T>(key, v);
          },
          [member](const RunConfig& c) {
            if constexpr (std::is_floating_point_v<T>)
              return FormatDouble(c.*member);
            else
              return std::to_string(c.*member);
          }};
}

inline DcMode ParseDcMode(const std::string& v) {
  if (v == "exact_minimizer") return DcMode::kExactMinimizer;
  if (v == "replace_observed") return DcMode::kReplaceObserved;
  if (v == "shrink_all") return DcMode::kShrinkAll;
  throw InvalidInput("dc_mode must be exact_minimizer, replace_observed or "
                     "shrink_all, got '" + v + "'");
}

inline TrainDomain ParseTrainDomain(const std::string& v) {
  if (v == "hankel") return TrainDomain::kHankel;
  if (v == "image") return TrainDomain::kImage;
  throw InvalidInput("train_domain must be hankel or image, got '" + v + "'");
}

inline PadPolicy ParsePadPolicy(const std::string& v) {
  if (v == "boundary") return PadPolicy::kBoundary;
  if (v == "aligned") return PadPolicy::kAligned;
  throw InvalidInput("pad must be boundary or aligned, got '" + v + "'");
}

inline const std::vector<ConfigField>& ConfigFields() {
  static const std::vector<ConfigField> fields = {
      NumberField("window", &RunConfig::window),
      NumberField("patch", &RunConfig::patch),
      NumberField("sigma_min", &RunConfig::sigma_min),
      NumberField("sigma_max", &RunConfig::sigma_max),
      NumberField("N", &RunConfig::N),
      NumberField("M", &RunConfig::M),
      NumberField("snr", &RunConfig::snr),
      NumberField("rank", &RunConfig::rank),
      NumberField("mu", &RunConfig::mu),
      NumberField("sweeps", &RunConfig::sweeps),
      NumberField("lambda", &RunConfig::lambda),
      {"dc_mode",
       [](RunConfig& c, const std::string& v) { c.dc_mode = ParseDcMode(v); },
       [](const RunConfig& c) { return std::string(ToString(c.dc_mode)); }},
      {"pad",
       [](RunConfig& c, const std::string& v) { c.pad = ParsePadPolicy(v); },
       [](const RunConfig& c) { return std::string(ToString(c.pad)); }},
      {"train_domain",
       [](RunConfig& c, const std::string& v) {
         c.train_domain = ParseTrainDomain(v);
       },
       [](const RunConfig& c) { return std::string(ToString(c.train_domain)); }},
      NumberField("lr", &RunConfig::lr),
      NumberField("steps", &RunConfig::steps),
      NumberField("images", &RunConfig::images),
      NumberField("batch", &RunConfig::batch),
      NumberField("hidden", &RunConfig::hidden),
      NumberField("seed", &RunConfig::seed),
      NumberField("workers", &RunConfig::workers),
  };
  return fields;
}

}  // namespace detail

inline std::vector<std::string> ConfigKeys() {
  std::vector<std::string> keys;
  for (const auto& f : detail::ConfigFields()) keys.emplace_back(f.key);
  return keys;
}

// Sets one key from its text form; unknown keys are rejected.
inline void SetConfigValue(RunConfig& cfg, const std::string& key,
                           const std::string& value) {
  for (const auto& f : detail::ConfigFields())
    if (key == f.key) {
      f.set(cfg, detail::Trim(value));
      return;
    }
  throw InvalidInput("unknown config key '" + key + "'");
}

inline std::string GetConfigValue(const RunConfig& cfg, const std::string& key) {
  for (const auto& f : detail::ConfigFields())
    if (key == f.key) return f.get(cfg);
  throw InvalidInput("unknown config key '" + key + "'");
}

// Applies the lines of `text` on top of `base`.
inline RunConfig ParseConfig(const std::string& text, RunConfig base = {}) {
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = detail::Trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    detail::Require(eq != std::string::npos,
                    "config line " + std::to_string(lineno) +
                        ": expected 'key = value'");
    const std::string key = detail::Trim(line.substr(0, eq));
    const std::string value = detail::Trim(line.substr(eq + 1));
    if (key.rfind("run.", 0) == 0) continue;
    SetConfigValue(base, key, value);
  }
  return base;
}

inline RunConfig LoadConfig(const std::string& path, RunConfig base = {}) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot read config file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ParseConfig(ss.str(), std::move(base));
}

// Every key in a fixed order; doubles use the shortest exact representation so
// parse(serialize(c)) == c.
inline std::string SerializeConfig(const RunConfig& cfg) {
  std::string out;
  for (const auto& f : detail::ConfigFields()) {
    out += f.key;
    out += " = ";
    out += f.get(cfg);
    out += '\n';
  }
  return out;
}

// FNV-1a over the serialized config, excluding `workers` (which does not
// change results).
inline std::string ConfigHash(const RunConfig& cfg) {
  RunConfig c = cfg;
  c.workers = 1;
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : SerializeConfig(c)) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace shgm
