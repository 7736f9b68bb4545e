#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "blurscope/cnn/model.hpp"
#include "blurscope/error.hpp"
#include "blurscope/pnm.hpp"

namespace blurscope::cnn {

// Model file, little-endian:
//   "BLRCNN01" | u32 version=1 | u32 input_side | u32 layer_count
//   per layer: u8 kind | u8 activation | u32 dims[4]
//   then every layer's weights then bias as f64, in layer order.
// dims: Conv3x3 {in, out, 3, 3}; MaxPool2x2 {2, 2, 0, 0}; Dense {in, out, 0, 0}.

inline constexpr std::array<char, 8> kModelMagic = {'B', 'L', 'R', 'C', 'N', 'N', '0', '1'};
inline constexpr std::uint32_t kModelVersion = 1;

namespace detail {

inline void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>(v >> (8 * i)));
}

inline void put_f64(std::vector<unsigned char>& out, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<unsigned char>(bits >> (8 * i)));
}

class ByteCursor {
 public:
  explicit ByteCursor(const std::vector<unsigned char>& bytes) : bytes_(bytes) {}

  void need(std::size_t n, const char* what) const {
    if (bytes_.size() - pos_ < n) throw Error(ErrorCode::Truncated, std::string("model file ends inside ") + what);
  }
  std::uint8_t u8(const char* what) {
    need(1, what);
    return bytes_[pos_++];
  }
  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_++]) << (8 * i);
    return v;
  }
  double f64(const char* what) {
    need(8, what);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes_[pos_++]) << (8 * i);
    return std::bit_cast<double>(v);
  }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  const std::vector<unsigned char>& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline std::vector<unsigned char> encode_model(const CnnModel& model) {
  layer_shapes(model.layers, model.input_side);
  std::vector<unsigned char> out(kModelMagic.begin(), kModelMagic.end());
  detail::put_u32(out, kModelVersion);
  detail::put_u32(out, static_cast<std::uint32_t>(model.input_side));
  detail::put_u32(out, static_cast<std::uint32_t>(model.layers.size()));
  for (const auto& l : model.layers) {
    out.push_back(static_cast<unsigned char>(l.kind));
    out.push_back(static_cast<unsigned char>(l.activation));
    std::array<std::uint32_t, 4> dims{};
    switch (l.kind) {
      case LayerKind::Conv3x3: dims = {static_cast<std::uint32_t>(l.in), static_cast<std::uint32_t>(l.out), 3, 3}; break;
      case LayerKind::MaxPool2x2: dims = {2, 2, 0, 0}; break;
      case LayerKind::Dense: dims = {static_cast<std::uint32_t>(l.in), static_cast<std::uint32_t>(l.out), 0, 0}; break;
    }
    for (auto d : dims) detail::put_u32(out, d);
  }
  for (const auto& p : model.params) {
    for (double v : p.weights.data) detail::put_f64(out, v);
    for (double v : p.bias.data) detail::put_f64(out, v);
  }
  return out;
}

inline CnnModel decode_model(const std::vector<unsigned char>& bytes) {
  if (bytes.size() < kModelMagic.size() || std::memcmp(bytes.data(), kModelMagic.data(), kModelMagic.size()) != 0) {
    throw Error(ErrorCode::BadMagic, "not a blurscope model file");
  }
  std::vector<unsigned char> body(bytes.begin() + kModelMagic.size(), bytes.end());
  detail::ByteCursor in(body);
  const std::uint32_t version = in.u32("version");
  if (version != kModelVersion) {
    throw Error(ErrorCode::VersionMismatch, "model version " + std::to_string(version) + ", expected " +
                                                std::to_string(kModelVersion));
  }
  CnnModel model;
  model.input_side = in.u32("input_side");
  const std::uint32_t count = in.u32("layer count");
  if (count > 1024) throw Error(ErrorCode::BadModel, "implausible layer count " + std::to_string(count));
  for (std::uint32_t i = 0; i < count; ++i) {
    LayerSpec l;
    const auto kind = in.u8("layer kind");
    const auto act = in.u8("layer activation");
    if (kind > 2 || act > 2) throw Error(ErrorCode::BadModel, "unknown layer kind or activation");
    l.kind = static_cast<LayerKind>(kind);
    l.activation = static_cast<Activation>(act);
    std::array<std::uint32_t, 4> dims{};
    for (auto& d : dims) d = in.u32("layer dims");
    if (l.kind != LayerKind::MaxPool2x2) {
      l.in = dims[0];
      l.out = dims[1];
    }
    model.layers.push_back(l);
  }
  layer_shapes(model.layers, model.input_side);
  for (const auto& l : model.layers) {
    LayerParams p;
    if (l.kind != LayerKind::MaxPool2x2) {
      p.weights = l.kind == LayerKind::Conv3x3 ? Tensor({l.out, l.in, 3, 3}) : Tensor({l.out, l.in});
      p.bias = Tensor({l.out});
      in.need(8 * (p.weights.size() + p.bias.size()), "parameters");
      for (double& v : p.weights.data) v = in.f64("weights");
      for (double& v : p.bias.data) v = in.f64("bias");
    }
    model.params.push_back(std::move(p));
  }
  if (in.remaining() != 0) throw Error(ErrorCode::BadModel, "trailing bytes after parameters");
  return model;
}

inline void save_model(const CnnModel& model, const std::filesystem::path& path) {
  const auto bytes = encode_model(model);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoFailure, path.string() + ": cannot open for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::IoFailure, path.string() + ": write failed");
}

inline CnnModel load_model(const std::filesystem::path& path) {
  try {
    return decode_model(blurscope::detail::read_file(path));
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.message());
  }
}

}  // namespace blurscope::cnn
