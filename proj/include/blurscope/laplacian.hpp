#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "blurscope/dataset.hpp"
#include "blurscope/error.hpp"
#include "blurscope/image.hpp"
#include "blurscope/pnm.hpp"

namespace blurscope {

/// Square correlation mask with odd side length.
class Kernel {
 public:
  Kernel(std::size_t size, std::vector<double> taps) : size_(size), taps_(std::move(taps)) {
    if (size_ % 2 == 0) {
      throw Error(ErrorCode::EvenKernel, "kernel size must be odd, got " + std::to_string(size_));
    }
    if (taps_.size() != size_ * size_) {
      throw Error(ErrorCode::ShapeMismatch, "kernel needs size*size taps");
    }
  }

  std::size_t size() const noexcept { return size_; }
  double operator()(std::size_t row, std::size_t col) const { return taps_[row * size_ + col]; }
  std::span<const double> taps() const noexcept { return taps_; }

 private:
  std::size_t size_;
  std::vector<double> taps_;
};

enum class LaplacianMask { FourNeighbor, EightNeighbor };

inline Kernel laplacian_kernel(LaplacianMask mask = LaplacianMask::FourNeighbor) {
  if (mask == LaplacianMask::EightNeighbor) {
    return Kernel(3, {1, 1, 1, 1, -8, 1, 1, 1, 1});
  }
  return Kernel(3, {0, 1, 0, 1, -4, 1, 0, 1, 0});
}

struct ResponseMap {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<double> values;
};

/// Same-size correlation with zero padding:
///   out(x, y) = sum_ij taps(i, j) * I(x + j - c, y + i - c),  c = size / 2.
/// Loops run tap-outer over the valid output window of each tap so the inner
/// loop is a contiguous axpy.
inline ResponseMap convolve(const GrayImage& image, const Kernel& kernel) {
  if (image.empty()) throw Error(ErrorCode::EmptyInput, "cannot convolve an empty image");
  const auto w = static_cast<std::ptrdiff_t>(image.width());
  const auto h = static_cast<std::ptrdiff_t>(image.height());
  const auto c = static_cast<std::ptrdiff_t>(kernel.size() / 2);
  const auto in = image.pixels();

  ResponseMap out{image.width(), image.height(), std::vector<double>(image.size(), 0.0)};
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(kernel.size()); ++i) {
    const std::ptrdiff_t dy = i - c;
    const std::ptrdiff_t y_lo = std::max<std::ptrdiff_t>(0, -dy);
    const std::ptrdiff_t y_hi = std::min(h, h - dy);
    for (std::ptrdiff_t j = 0; j < static_cast<std::ptrdiff_t>(kernel.size()); ++j) {
      const double tap = kernel(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
      if (tap == 0.0) continue;
      const std::ptrdiff_t dx = j - c;
      const std::ptrdiff_t x_lo = std::max<std::ptrdiff_t>(0, -dx);
      const std::ptrdiff_t x_hi = std::min(w, w - dx);
      for (std::ptrdiff_t y = y_lo; y < y_hi; ++y) {
        double* dst = out.values.data() + y * w;
        const double* src = in.data() + (y + dy) * w + dx;
        for (std::ptrdiff_t x = x_lo; x < x_hi; ++x) dst[x] += tap * src[x];
      }
    }
  }
  return out;
}

/// Population variance (divides by n).
inline double variance(std::span<const double> values) {
  if (values.empty()) throw Error(ErrorCode::EmptyInput, "variance of an empty sequence");
  const double n = static_cast<double>(values.size());
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return ss / n;
}

/// Blurriness score: variance of the Laplacian response on native-resolution [0,1] intensities.
inline double laplacian_variance(const GrayImage& image, LaplacianMask mask = LaplacianMask::FourNeighbor) {
  return variance(convolve(image, laplacian_kernel(mask)).values);
}

/// How the two class centres are combined into a threshold.
enum class CentreWeighting { ClassCount, Midpoint };

struct ThresholdModel {
  double threshold = 0.0;
  double centre_blurry = 0.0;
  double centre_sharp = 0.0;
  std::size_t n_blurry = 0;
  std::size_t n_sharp = 0;

  bool operator==(const ThresholdModel&) const = default;
};

/// Places the threshold at the weighted mean of the two class centres
/// (class means of the scores). Blurry scores must centre below sharp ones.
inline ThresholdModel calibrate(std::span<const double> blurry_scores, std::span<const double> sharp_scores,
                                CentreWeighting weighting = CentreWeighting::ClassCount) {
  if (blurry_scores.empty() || sharp_scores.empty()) {
    throw Error(ErrorCode::EmptyClass, "calibration needs at least one score per class (blurry=" +
                                           std::to_string(blurry_scores.size()) +
                                           ", sharp=" + std::to_string(sharp_scores.size()) + ")");
  }
  ThresholdModel m;
  m.n_blurry = blurry_scores.size();
  m.n_sharp = sharp_scores.size();
  m.centre_blurry = std::accumulate(blurry_scores.begin(), blurry_scores.end(), 0.0) / static_cast<double>(m.n_blurry);
  m.centre_sharp = std::accumulate(sharp_scores.begin(), sharp_scores.end(), 0.0) / static_cast<double>(m.n_sharp);
  if (!(m.centre_blurry < m.centre_sharp)) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "blurry centre %.17g is not below sharp centre %.17g", m.centre_blurry,
                  m.centre_sharp);
    throw Error(ErrorCode::InvertedCentres, buf);
  }
  if (weighting == CentreWeighting::Midpoint) {
    m.threshold = 0.5 * (m.centre_blurry + m.centre_sharp);
  } else {
    const double nb = static_cast<double>(m.n_blurry);
    const double ns = static_cast<double>(m.n_sharp);
    m.threshold = (nb * m.centre_blurry + ns * m.centre_sharp) / (nb + ns);
  }
  return m;
}

/// Strictly below the threshold is Blurry; a tie is Sharp.
constexpr Label classify_score(double score, const ThresholdModel& model) noexcept {
  return score < model.threshold ? Label::Blurry : Label::Sharp;
}

inline Label classify_laplacian(const GrayImage& image, const ThresholdModel& model,
                                LaplacianMask mask = LaplacianMask::FourNeighbor) {
  return classify_score(laplacian_variance(image, mask), model);
}

struct ScoredSample {
  LabeledSample sample;
  double score = 0.0;
};

/// Scores every sample in dataset order. Load failures are rethrown with the offending path.
inline std::vector<ScoredSample> score_batch(const LabeledDataset& dataset,
                                             LaplacianMask mask = LaplacianMask::FourNeighbor) {
  std::vector<ScoredSample> out;
  out.reserve(dataset.size());
  for (const auto& sample : dataset) {
    try {
      out.push_back({sample, laplacian_variance(load_image(sample.path), mask)});
    } catch (const Error& e) {
      throw Error(e.code(), "while scoring " + sample.path.string() + ": " + e.message());
    }
  }
  return out;
}

/// Splits scored samples by label and calibrates.
inline ThresholdModel calibrate(std::span<const ScoredSample> scored,
                                CentreWeighting weighting = CentreWeighting::ClassCount) {
  std::vector<double> blurry;
  std::vector<double> sharp;
  for (const auto& s : scored) (s.sample.label == Label::Blurry ? blurry : sharp).push_back(s.score);
  return calibrate(blurry, sharp, weighting);
}

// ThresholdModel JSON. Reals are written with 17 significant digits.

inline std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.16e", v);
  return buf;
}

inline std::string to_json(const ThresholdModel& m) {
  std::string s = "{\n";
  s += "  \"threshold\": " + format_real(m.threshold) + ",\n";
  s += "  \"centre_blurry\": " + format_real(m.centre_blurry) + ",\n";
  s += "  \"centre_sharp\": " + format_real(m.centre_sharp) + ",\n";
  s += "  \"n_blurry\": " + std::to_string(m.n_blurry) + ",\n";
  s += "  \"n_sharp\": " + std::to_string(m.n_sharp) + "\n}\n";
  return s;
}

inline ThresholdModel threshold_model_from_json(const std::string& text) {
  ThresholdModel m;
  try {
    const auto j = nlohmann::json::parse(text);
    m.threshold = j.at("threshold").get<double>();
    m.centre_blurry = j.at("centre_blurry").get<double>();
    m.centre_sharp = j.at("centre_sharp").get<double>();
    m.n_blurry = j.at("n_blurry").get<std::size_t>();
    m.n_sharp = j.at("n_sharp").get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::BadModel, std::string("threshold model JSON: ") + e.what());
  }
  if (m.n_blurry < 1 || m.n_sharp < 1 || !(m.centre_blurry < m.threshold && m.threshold < m.centre_sharp)) {
    throw Error(ErrorCode::BadModel, "threshold model violates centre_blurry < threshold < centre_sharp");
  }
  return m;
}

inline void save_threshold_model(const ThresholdModel& m, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoFailure, path.string() + ": cannot open for writing");
  out << to_json(m);
  if (!out) throw Error(ErrorCode::IoFailure, path.string() + ": write failed");
}

inline ThresholdModel load_threshold_model(const std::filesystem::path& path) {
  const auto bytes = detail::read_file(path);
  return threshold_model_from_json(std::string(bytes.begin(), bytes.end()));
}

}  // namespace blurscope
