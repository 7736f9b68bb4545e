#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "blurscope/error.hpp"
#include "blurscope/image.hpp"

namespace blurscope {

namespace detail {

// Cursor over an in-memory netpbm file. Header tokens are whitespace separated
// and '#' starts a comment running to end of line.
class PnmReader {
 public:
  PnmReader(std::vector<unsigned char> bytes, std::string path)
      : bytes_(std::move(bytes)), path_(std::move(path)) {}

  std::string magic() {
    if (bytes_.size() < 2 || bytes_[0] != 'P') {
      throw Error(ErrorCode::UnknownMagic, path_ + ": not a netpbm file");
    }
    pos_ = 2;
    return std::string(bytes_.begin(), bytes_.begin() + 2);
  }

  // Returns false at end of input.
  bool next_uint(long long& value) {
    skip_space_and_comments();
    if (pos_ >= bytes_.size()) return false;
    if (!std::isdigit(bytes_[pos_])) {
      if (bytes_[pos_] == '-') {
        value = -1;
        ++pos_;
        while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) ++pos_;
        return true;
      }
      throw Error(ErrorCode::BadHeader, path_ + ": expected a number at byte " + std::to_string(pos_));
    }
    value = 0;
    while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
      value = value * 10 + (bytes_[pos_] - '0');
      if (value > (1LL << 40)) throw Error(ErrorCode::BadHeader, path_ + ": number too large");
      ++pos_;
    }
    return true;
  }

  long long header_uint(const char* what) {
    long long v = 0;
    if (!next_uint(v)) throw Error(ErrorCode::Truncated, path_ + ": header ends before " + what);
    return v;
  }

  // Exactly one whitespace byte separates maxval from a binary raster.
  void skip_single_whitespace() {
    if (pos_ < bytes_.size() && std::isspace(bytes_[pos_])) ++pos_;
  }

  std::size_t remaining() const { return bytes_.size() - pos_; }
  const unsigned char* cursor() const { return bytes_.data() + pos_; }
  const std::string& path() const { return path_; }

 private:
  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      if (std::isspace(bytes_[pos_])) {
        ++pos_;
      } else if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  std::vector<unsigned char> bytes_;
  std::string path_;
  std::size_t pos_ = 0;
};

inline std::vector<unsigned char> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoFailure, path.string() + ": cannot open for reading");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace detail

/// Reads a P2, P5 or P6 netpbm file. Colour input is reduced to BT.601 luma.
inline GrayImage load_image(const std::filesystem::path& path) {
  detail::PnmReader reader(detail::read_file(path), path.string());
  const std::string magic = reader.magic();
  if (magic != "P2" && magic != "P5" && magic != "P6") {
    throw Error(ErrorCode::UnknownMagic, path.string() + ": unsupported format " + magic);
  }

  const long long width = reader.header_uint("width");
  const long long height = reader.header_uint("height");
  const long long maxval = reader.header_uint("maxval");
  if (width <= 0 || height <= 0) {
    throw Error(ErrorCode::BadHeader, path.string() + ": nonpositive dimensions");
  }
  if (maxval < 1 || maxval > 255) {
    throw Error(ErrorCode::BadHeader, path.string() + ": maxval " + std::to_string(maxval) + " not in [1, 255]");
  }

  const auto w = static_cast<std::size_t>(width);
  const auto h = static_cast<std::size_t>(height);
  const double scale = static_cast<double>(maxval);
  auto sample = [&](long long v) {
    if (v < 0 || v > maxval) {
      throw Error(ErrorCode::BadSample, path.string() + ": sample " + std::to_string(v) + " exceeds maxval");
    }
    return static_cast<double>(v) / scale;
  };

  std::vector<double> pixels(w * h);
  if (magic == "P2") {
    for (std::size_t i = 0; i < pixels.size(); ++i) {
      long long v = 0;
      if (!reader.next_uint(v)) {
        throw Error(ErrorCode::Truncated, path.string() + ": " + std::to_string(i) + " of " +
                                              std::to_string(pixels.size()) + " samples present");
      }
      pixels[i] = sample(v);
    }
  } else {
    reader.skip_single_whitespace();
    const std::size_t channels = magic == "P6" ? 3 : 1;
    const std::size_t needed = pixels.size() * channels;
    if (reader.remaining() < needed) {
      throw Error(ErrorCode::Truncated, path.string() + ": " + std::to_string(reader.remaining()) +
                                            " payload bytes, header promises " + std::to_string(needed));
    }
    const unsigned char* data = reader.cursor();
    for (std::size_t i = 0; i < pixels.size(); ++i) {
      if (channels == 1) {
        pixels[i] = sample(data[i]);
      } else {
        const double r = sample(data[3 * i]);
        const double g = sample(data[3 * i + 1]);
        const double b = sample(data[3 * i + 2]);
        pixels[i] = std::clamp(to_grayscale(r, g, b), 0.0, 1.0);
      }
    }
  }
  return GrayImage(w, h, std::move(pixels));
}

/// Encodes as binary P5 with maxval 255; each pixel is round(p * 255).
inline std::vector<unsigned char> encode_pgm(const GrayImage& image) {
  const std::string header =
      "P5\n" + std::to_string(image.width()) + " " + std::to_string(image.height()) + "\n255\n";
  std::vector<unsigned char> bytes(header.begin(), header.end());
  bytes.reserve(header.size() + image.size());
  for (double p : image.pixels()) {
    bytes.push_back(static_cast<unsigned char>(std::lround(p * 255.0)));
  }
  return bytes;
}

inline void save_pgm(const GrayImage& image, const std::filesystem::path& path) {
  const auto bytes = encode_pgm(image);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoFailure, path.string() + ": cannot open for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::IoFailure, path.string() + ": write failed");
}

}  // namespace blurscope
