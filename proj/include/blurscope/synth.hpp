#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <numbers>
#include <string>
#include <system_error>
#include <vector>

#include "blurscope/dataset.hpp"
#include "blurscope/error.hpp"
#include "blurscope/image.hpp"
#include "blurscope/pnm.hpp"
#include "blurscope/rng.hpp"

namespace blurscope {

inline constexpr int kTextureGratings = 8;
inline constexpr double kTextureNoise = 0.2;

/// Edge-rich synthetic texture: eight unit-amplitude sinusoidal gratings with
/// random orientation in [0, pi), frequency in [2, width/4] cycles per image
/// width and random phase, plus uniform noise in [-0.2, 0.2], then rescaled
/// so the minimum is exactly 0 and the maximum exactly 1.
inline GrayImage synth_texture(std::uint64_t seed, std::size_t width, std::size_t height) {
  if (width < 8 || height < 8) {
    throw Error(ErrorCode::BadRange, "texture dimensions must be >= 8");
  }
  struct Grating {
    double kx, ky, phase;
  };
  Rng rng(substream(seed, 0x7465787475726501ULL));
  const double w = static_cast<double>(width);
  std::vector<Grating> gratings;
  for (int i = 0; i < kTextureGratings; ++i) {
    const double theta = rng.uniform(0.0, std::numbers::pi);
    const double freq = rng.uniform(2.0, w / 4.0);
    const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const double k = 2.0 * std::numbers::pi * freq / w;
    gratings.push_back({k * std::cos(theta), k * std::sin(theta), phase});
  }

  std::vector<double> values(width * height);
  for (std::size_t y = 0; y < height; ++y) {
    for (std::size_t x = 0; x < width; ++x) {
      double v = 0.0;
      for (const auto& g : gratings) {
        v += std::sin(g.kx * static_cast<double>(x) + g.ky * static_cast<double>(y) + g.phase);
      }
      values[y * width + x] = v + rng.uniform(-kTextureNoise, kTextureNoise);
    }
  }

  const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  const double lo = *lo_it;
  const double span = *hi_it - lo;
  for (double& v : values) v = span > 0.0 ? (v - lo) / span : 0.0;
  return GrayImage(width, height, std::move(values));
}

struct SynthOptions {
  std::uint64_t seed = 7;
  std::size_t count = 200;
  double sigma_min = 2.0;
  double sigma_max = 4.0;
  std::size_t width = 256;
  std::size_t height = 256;
};

/// Seed of the sharp texture for pair `index`.
constexpr std::uint64_t synth_texture_seed(std::uint64_t seed, std::size_t index) noexcept {
  return substream(seed, 1, index);
}

/// Blur sigma for pair `index`, uniform in [sigma_min, sigma_max].
inline double synth_blur_sigma(std::uint64_t seed, std::size_t index, double sigma_min, double sigma_max) {
  Rng rng(substream(seed, 2, index));
  return rng.uniform(sigma_min, sigma_max);
}

inline std::string synth_file_name(std::size_t index, Label label) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "img_%05zu_%s.pgm", index, label == Label::Blurry ? "blurry" : "sharp");
  return buf;
}

/// Writes count/2 sharp textures and a Gaussian-blurred copy of each into
/// out_dir, plus out_dir/labels.csv. Rows alternate sharp, blurry per pair.
inline LabeledDataset synth_dataset(const SynthOptions& opt, const std::filesystem::path& out_dir) {
  if (opt.count < 2 || opt.count % 2 != 0) {
    throw Error(ErrorCode::BadRange, "count must be even and >= 2, got " + std::to_string(opt.count));
  }
  if (!(opt.sigma_min > 0.0) || !(opt.sigma_min <= opt.sigma_max)) {
    throw Error(ErrorCode::BadRange, "need 0 < sigma_min <= sigma_max");
  }
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw Error(ErrorCode::IoFailure, out_dir.string() + ": " + ec.message());

  LabeledDataset dataset;
  for (std::size_t i = 0; i < opt.count / 2; ++i) {
    const GrayImage sharp = synth_texture(synth_texture_seed(opt.seed, i), opt.width, opt.height);
    const GrayImage blurry = gaussian_blur(sharp, synth_blur_sigma(opt.seed, i, opt.sigma_min, opt.sigma_max));
    const auto sharp_path = out_dir / synth_file_name(i, Label::Sharp);
    const auto blurry_path = out_dir / synth_file_name(i, Label::Blurry);
    save_pgm(sharp, sharp_path);
    save_pgm(blurry, blurry_path);
    dataset.add({sharp_path, Label::Sharp});
    dataset.add({blurry_path, Label::Blurry});
  }
  write_labels_csv(dataset, out_dir / "labels.csv");
  return dataset;
}

}  // namespace blurscope
