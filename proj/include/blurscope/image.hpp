#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "blurscope/error.hpp"

namespace blurscope {

/// Single-channel raster with intensities in [0, 1], row-major, top-left origin.
class GrayImage {
 public:
  GrayImage() = default;

  GrayImage(std::size_t width, std::size_t height, double fill = 0.0)
      : width_(width), height_(height), pixels_(width * height, fill) {
    check_dims();
    check_range();
  }

  GrayImage(std::size_t width, std::size_t height, std::vector<double> pixels)
      : width_(width), height_(height), pixels_(std::move(pixels)) {
    check_dims();
    if (pixels_.size() != width_ * height_) {
      throw Error(ErrorCode::ShapeMismatch,
                  "pixel count " + std::to_string(pixels_.size()) + " != " +
                      std::to_string(width_) + "x" + std::to_string(height_));
    }
    check_range();
  }

  std::size_t width() const noexcept { return width_; }
  std::size_t height() const noexcept { return height_; }
  std::size_t size() const noexcept { return pixels_.size(); }
  bool empty() const noexcept { return pixels_.empty(); }

  double operator()(std::size_t x, std::size_t y) const { return pixels_[y * width_ + x]; }
  double& operator()(std::size_t x, std::size_t y) { return pixels_[y * width_ + x]; }

  std::span<const double> pixels() const noexcept { return pixels_; }
  std::span<double> pixels() noexcept { return pixels_; }

  bool operator==(const GrayImage&) const = default;

 private:
  void check_dims() const {
    if (width_ == 0 || height_ == 0) {
      throw Error(ErrorCode::BadHeader, "image dimensions must be positive");
    }
  }
  void check_range() const {
    for (double p : pixels_) {
      if (!(p >= 0.0 && p <= 1.0)) {
        throw Error(ErrorCode::BadSample, "pixel value outside [0, 1]: " + std::to_string(p));
      }
    }
  }

  std::size_t width_ = 0;
  std::size_t height_ = 0;
  std::vector<double> pixels_;
};

/// BT.601 luma.
constexpr double to_grayscale(double r, double g, double b) noexcept {
  return 0.299 * r + 0.587 * g + 0.114 * b;
}

/// Bilinear resampling with half-pixel-centred sample coordinates and edge clamping.
inline GrayImage resize_bilinear(const GrayImage& image, std::size_t new_width,
                                 std::size_t new_height) {
  if (new_width == 0 || new_height == 0) {
    throw Error(ErrorCode::BadRange, "resize target dimensions must be positive");
  }
  if (new_width == image.width() && new_height == image.height()) return image;

  const double sx = static_cast<double>(image.width()) / static_cast<double>(new_width);
  const double sy = static_cast<double>(image.height()) / static_cast<double>(new_height);
  const double max_x = static_cast<double>(image.width() - 1);
  const double max_y = static_cast<double>(image.height() - 1);

  std::vector<double> out(new_width * new_height);
  for (std::size_t y = 0; y < new_height; ++y) {
    const double fy = std::clamp((static_cast<double>(y) + 0.5) * sy - 0.5, 0.0, max_y);
    const auto y0 = static_cast<std::size_t>(fy);
    const std::size_t y1 = std::min(y0 + 1, image.height() - 1);
    const double wy = fy - static_cast<double>(y0);
    for (std::size_t x = 0; x < new_width; ++x) {
      const double fx = std::clamp((static_cast<double>(x) + 0.5) * sx - 0.5, 0.0, max_x);
      const auto x0 = static_cast<std::size_t>(fx);
      const std::size_t x1 = std::min(x0 + 1, image.width() - 1);
      const double wx = fx - static_cast<double>(x0);
      const double top = (1.0 - wx) * image(x0, y0) + wx * image(x1, y0);
      const double bottom = (1.0 - wx) * image(x0, y1) + wx * image(x1, y1);
      out[y * new_width + x] = std::clamp((1.0 - wy) * top + wy * bottom, 0.0, 1.0);
    }
  }
  return GrayImage(new_width, new_height, std::move(out));
}

/// Normalised 1-D Gaussian truncated at ceil(3 sigma); length 2*ceil(3 sigma)+1.
inline std::vector<double> gaussian_kernel(double sigma) {
  if (!(sigma > 0.0)) {
    throw Error(ErrorCode::NonpositiveSigma, "sigma must be > 0, got " + std::to_string(sigma));
  }
  const auto radius = static_cast<std::ptrdiff_t>(std::ceil(3.0 * sigma));
  std::vector<double> taps(static_cast<std::size_t>(2 * radius + 1));
  double sum = 0.0;
  for (std::ptrdiff_t i = -radius; i <= radius; ++i) {
    const double v = std::exp(-static_cast<double>(i * i) / (2.0 * sigma * sigma));
    taps[static_cast<std::size_t>(i + radius)] = v;
    sum += v;
  }
  for (double& t : taps) t /= sum;
  return taps;
}

/// Separable Gaussian blur, horizontal pass then vertical pass, replicate borders.
inline GrayImage gaussian_blur(const GrayImage& image, double sigma) {
  const std::vector<double> taps = gaussian_kernel(sigma);
  const auto radius = static_cast<std::ptrdiff_t>(taps.size() / 2);
  const auto w = static_cast<std::ptrdiff_t>(image.width());
  const auto h = static_cast<std::ptrdiff_t>(image.height());
  auto clamp_index = [](std::ptrdiff_t i, std::ptrdiff_t n) { return std::clamp<std::ptrdiff_t>(i, 0, n - 1); };

  std::vector<double> tmp(image.size());
  for (std::ptrdiff_t y = 0; y < h; ++y) {
    for (std::ptrdiff_t x = 0; x < w; ++x) {
      double acc = 0.0;
      for (std::ptrdiff_t k = -radius; k <= radius; ++k) {
        acc += taps[static_cast<std::size_t>(k + radius)] *
               image(static_cast<std::size_t>(clamp_index(x + k, w)), static_cast<std::size_t>(y));
      }
      tmp[static_cast<std::size_t>(y * w + x)] = acc;
    }
  }

  std::vector<double> out(image.size());
  for (std::ptrdiff_t y = 0; y < h; ++y) {
    for (std::ptrdiff_t x = 0; x < w; ++x) {
      double acc = 0.0;
      for (std::ptrdiff_t k = -radius; k <= radius; ++k) {
        acc += taps[static_cast<std::size_t>(k + radius)] *
               tmp[static_cast<std::size_t>(clamp_index(y + k, h) * w + x)];
      }
      out[static_cast<std::size_t>(y * w + x)] = std::clamp(acc, 0.0, 1.0);
    }
  }
  return GrayImage(image.width(), image.height(), std::move(out));
}

}  // namespace blurscope
