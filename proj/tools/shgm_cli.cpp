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

// shgm: train, inpaint, mask, eval and check-hankel.
//
// Settings come from defaults, then --config FILE, then --<key> flags.
// Exit codes: 0 success, 2 invalid input, 3 numerical or runtime failure.

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <Eigen/SVD>

#include "shgm/shgm.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInvalid = 2;
constexpr int kExitFailure = 3;

struct GlobalOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::map<std::string, std::string> overrides;
};

shgm::RunConfig ResolveConfig(const GlobalOptions& g) {
  shgm::RunConfig cfg;
  if (!g.config_path.empty()) cfg = shgm::LoadConfig(g.config_path, cfg);
  for (const auto& [key, value] : g.overrides)
    shgm::SetConfigValue(cfg, key, value);
  if (g.seed) cfg.seed = *g.seed;
  if (g.workers) cfg.workers = *g.workers;
  cfg.Validate();
  return cfg;
}

void WriteSummary(const std::string& path,
                  const std::vector<std::pair<std::string, std::string>>& run,
                  const shgm::RunConfig& cfg) {
  std::ofstream os(path);
  if (!os) throw shgm::InvalidInput("cannot write run summary: " + path);
  for (const auto& [k, v] : run) os << "run." << k << " = " << v << '\n';
  os << shgm::SerializeConfig(cfg);
}

// ---------------------------------------------------------------------------

int CmdTrain(const GlobalOptions& g, const std::string& data_dir,
             const std::string& out_path) {
  const shgm::RunConfig cfg = ResolveConfig(g);
  const auto paths = shgm::ListPngImages(data_dir, cfg.images);
  if (paths.empty()) throw shgm::InvalidInput("no training images in " + data_dir);
  std::vector<shgm::ImageTensor> images;
  for (const auto& p : paths) images.push_back(shgm::LoadImagePng(p));

  const auto start = std::chrono::steady_clock::now();
  double last = 0.0;
  const shgm::ScoreNet net = shgm::Train(
      images, cfg.layout(), cfg.fold_side(), cfg.fold_side(), cfg.schedule(),
      cfg.train(), cfg.net(), [&](const shgm::TrainStep& s) {
        last = s.loss;
        if (s.step % 100 == 0 || s.step + 1 == cfg.steps)
          std::fprintf(stderr, "step %d loss %.6g\n", s.step, s.loss);
      });
  shgm::SaveCheckpoint(out_path, net, cfg.schedule());
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  std::printf("steps=%d final_loss=%.6g images=%zu checkpoint=%s\n", cfg.steps,
              last, images.size(), out_path.c_str());
  WriteSummary(out_path + ".summary.txt",
               {{"command", "train"},
                {"data_dir", data_dir},
                {"checkpoint", out_path},
                {"images", std::to_string(images.size())},
                {"final_loss", shgm::detail::FormatDouble(last)},
                {"wall_seconds", shgm::detail::FormatDouble(secs)},
                {"config_hash", shgm::ConfigHash(cfg)},
                {"version", SHGM_VERSION}},
               cfg);
  return kExitOk;
}

int CmdInpaint(const GlobalOptions& g, const std::string& ckpt_path,
               const std::string& input_path, const std::string& mask_path,
               const std::string& out_path, const std::string& reference_path,
               bool quiet) {
  const shgm::RunConfig cfg = ResolveConfig(g);
  const shgm::Checkpoint ckpt = shgm::LoadCheckpoint(ckpt_path);
  const shgm::InpaintConfig icfg = cfg.inpaint();
  const shgm::ModelGeometry& mg = ckpt.model.geometry();
  if (!(mg == icfg.geometry))
    throw shgm::InvalidInput(
        "checkpoint was trained for patch " + std::to_string(mg.layout.patch_h) +
        ", window " + std::to_string(mg.layout.window) + ", fold " +
        std::to_string(mg.fold_h) + "x" + std::to_string(mg.fold_w) +
        ", domain " + shgm::ToString(mg.domain) +
        ", which does not match the run configuration");

  const shgm::ImageTensor observation = shgm::LoadImagePng(input_path);
  const shgm::Mask mask = shgm::LoadMaskPng(mask_path);
  if (!mask.Matches(observation))
    throw shgm::InvalidInput("mask size does not match the input image");

  const auto start = std::chrono::steady_clock::now();
  shgm::ImageOptions opts;
  if (!quiet) opts.progress = &std::cerr;
  const shgm::ImageTensor restored =
      shgm::InpaintImage(observation, mask, ckpt.model, icfg, opts);
  shgm::SaveImagePng(out_path, restored);
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();

  std::vector<std::pair<std::string, std::string>> run = {
      {"command", "inpaint"},
      {"checkpoint", ckpt_path},
      {"input", input_path},
      {"mask", mask_path},
      {"output", out_path},
      {"missing_pixels", std::to_string(mask.CountMissing())},
      {"wall_seconds", shgm::detail::FormatDouble(secs)},
      {"config_hash", shgm::ConfigHash(cfg)},
      {"version", SHGM_VERSION}};
  if (!reference_path.empty()) {
    const shgm::ImageTensor ref = shgm::LoadImagePng(reference_path);
    const shgm::ImageTensor saved = shgm::LoadImagePng(out_path);
    char line[96];
    std::snprintf(line, sizeof line, "PSNR=%.4f SSIM=%.4f",
                  shgm::Psnr(saved, ref), shgm::Ssim(saved, ref));
    std::printf("%s\n", line);
    run.emplace_back("reference", reference_path);
    run.emplace_back("psnr", shgm::detail::FormatDouble(shgm::Psnr(saved, ref)));
    run.emplace_back("ssim", shgm::detail::FormatDouble(shgm::Ssim(saved, ref)));
  }
  WriteSummary(out_path + ".summary.txt", run, cfg);
  std::printf("wrote %s\n", out_path.c_str());
  return kExitOk;
}

int CmdMask(const GlobalOptions& g, const std::string& kind,
            const std::string& out_path, int height, int width, double ratio,
            const std::string& overlay) {
  shgm::MaskKind k;
  if (kind == "random") {
    k = shgm::MaskKind::kRandom;
  } else if (kind == "block") {
    k = shgm::MaskKind::kBlock;
  } else if (kind == "text") {
    k = shgm::MaskKind::kText;
  } else {
    throw shgm::InvalidInput("mask kind must be random, block or text");
  }
  shgm::MaskParams params;
  params.height = height;
  params.width = width;
  params.ratio = ratio;
  if (k == shgm::MaskKind::kText) {
    if (overlay.empty()) throw shgm::InvalidInput("text mask needs --overlay");
    params.overlay = shgm::LoadImagePng(overlay);
  }
  const shgm::RunConfig cfg = ResolveConfig(g);
  shgm::Rng rng(cfg.seed);
  const shgm::Mask mask = shgm::MakeMask(k, params, rng);
  shgm::SaveMaskPng(out_path, mask);
  std::printf("missing=%zu of %zu\n", mask.CountMissing(), mask.size());
  return kExitOk;
}

int CmdEval(const std::string& ref_path, const std::string& test_path) {
  const shgm::ImageTensor ref = shgm::LoadImagePng(ref_path);
  const shgm::ImageTensor test = shgm::LoadImagePng(test_path);
  if (!ref.SameShape(test))
    throw shgm::InvalidInput("images have different sizes");
  std::printf("PSNR=%.4f SSIM=%.4f\n", shgm::Psnr(test, ref),
              shgm::Ssim(test, ref));
  return kExitOk;
}

int CmdCheckHankel(const GlobalOptions& g, const std::string& input_path,
                   const std::string& dump_path) {
  const shgm::RunConfig cfg = ResolveConfig(g);
  const shgm::HankelLayout layout = cfg.layout();
  const shgm::ImageTensor image = shgm::LoadImagePng(input_path);
  if (image.height() < layout.patch_h || image.width() < layout.patch_w)
    throw shgm::InvalidInput("patch too small: image is " +
                             std::to_string(image.height()) + "x" +
                             std::to_string(image.width()) + ", need at least " +
                             std::to_string(layout.patch_h) + "x" +
                             std::to_string(layout.patch_w));
  const shgm::ImageTensor patch =
      image.Crop((image.height() - layout.patch_h) / 2,
                 (image.width() - layout.patch_w) / 2, layout.patch_h,
                 layout.patch_w);
  const shgm::HankelMatrix m = shgm::Lift(patch, layout);
  const shgm::ImageTensor back = shgm::Adjoint(m);
  double err = 0.0;
  for (std::size_t i = 0; i < back.size(); ++i)
    err = std::max(err, std::abs(back.data()[i] - patch.data()[i]));
  std::printf("shape=%ldx%ld roundtrip_err=%g\n",
              static_cast<long>(m.data.rows()), static_cast<long>(m.data.cols()),
              err);

  // How many pixels appear k times in the matrix.
  const shgm::ImageTensor mult = shgm::MultiplicityMap(layout);
  std::map<int, int> histogram;
  for (int y = 0; y < layout.patch_h; ++y)
    for (int x = 0; x < layout.patch_w; ++x)
      ++histogram[static_cast<int>(mult.at(y, x, 0))];
  std::printf("multiplicity");
  for (const auto& [k, n] : histogram) std::printf(" %d:%d", k, n);
  std::printf("\n");

  Eigen::BDCSVD<Eigen::MatrixXd> svd(m.data);
  const Eigen::VectorXd s = svd.singularValues();
  std::printf("singular_values");
  for (Eigen::Index i = 0; i < std::min<Eigen::Index>(8, s.size()); ++i)
    std::printf(" %.6g", s[i]);
  std::printf("\n");
  const double tol = s.size() ? s[0] * std::max(m.data.rows(), m.data.cols()) *
                                    std::numeric_limits<double>::epsilon()
                              : 0.0;
  int rank = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s[i] > tol) ++rank;
  std::printf("numerical_rank=%d\n", rank);

  if (!dump_path.empty()) {
    std::ofstream os(dump_path, std::ios::binary);
    if (!os) throw shgm::InvalidInput("cannot write dump: " + dump_path);
    shgm::WriteHankelDump(os, m);
  }
  return err == 0.0 ? kExitOk : kExitFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Structured-Hankel score-based inpainting"};
  app.require_subcommand(1);
  app.set_version_flag("--version", SHGM_VERSION);

  GlobalOptions g;
  app.add_option("--config", g.config_path, "key = value configuration file")
      ->check(CLI::ExistingFile);
  app.add_option_function<std::uint64_t>(
      "--seed", [&](const std::uint64_t& v) { g.seed = v; }, "master seed");
  app.add_option_function<int>(
      "--workers", [&](const int& v) { g.workers = v; },
      "worker threads for inpainting");
  for (const std::string& key : shgm::ConfigKeys()) {
    if (key == "seed" || key == "workers") continue;
    app.add_option_function<std::string>(
           "--" + key, [&g, key](const std::string& v) { g.overrides[key] = v; },
           "override config key '" + key + "'")
        ->group("Config overrides");
  }

  std::string a, b, c, d, reference, overlay, dump;
  int height = 256, width = 256;
  double ratio = 0.5;
  bool quiet = false;

  auto* train = app.add_subcommand("train", "train a score model on a PNG folder");
  train->add_option("data_dir", a, "directory of PNG images")->required();
  train->add_option("out", b, "output checkpoint")->required();

  auto* inpaint = app.add_subcommand("inpaint", "restore missing pixels");
  inpaint->add_option("checkpoint", a)->required();
  inpaint->add_option("input", b, "observed image PNG")->required();
  inpaint->add_option("mask", c, "mask PNG, 255 = observed")->required();
  inpaint->add_option("out", d, "restored image PNG")->required();
  inpaint->add_option("--reference", reference,
                      "ground truth PNG for PSNR/SSIM in the summary");
  inpaint->add_flag("--quiet", quiet, "no progress lines");

  auto* mask = app.add_subcommand("mask", "generate a mask PNG");
  mask->add_option("kind", a, "random, block or text")->required();
  mask->add_option("out", b)->required();
  mask->add_option("--height", height);
  mask->add_option("--width", width);
  mask->add_option("--ratio", ratio, "missing fraction (random/block)");
  mask->add_option("--overlay", overlay, "glyph image for text masks");

  auto* eval = app.add_subcommand("eval", "PSNR and SSIM of test against ref");
  eval->add_option("ref", a)->required();
  eval->add_option("test", b)->required();

  auto* check = app.add_subcommand("check-hankel", "Hankel lift diagnostics");
  check->add_option("input", a)->required();
  check->add_option("--dump", dump, "write the lifted matrix as binary");

  for (CLI::App* sub : {train, inpaint, mask, eval, check}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInvalid;
  }

  try {
    if (*train) return CmdTrain(g, a, b);
    if (*inpaint) return CmdInpaint(g, a, b, c, d, reference, quiet);
    if (*mask) return CmdMask(g, a, b, height, width, ratio, overlay);
    if (*eval) return CmdEval(a, b);
    if (*check) return CmdCheckHankel(g, a, dump);
  } catch (const shgm::InvalidInput& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitInvalid;
  } catch (const shgm::NumericalFailure& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return kExitFailure;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "failure: %s\n", e.what());
    return kExitFailure;
  }
  return kExitInvalid;
}
