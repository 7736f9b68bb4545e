#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "blurscope/cnn/tensor.hpp"
#include "blurscope/error.hpp"

namespace blurscope::cnn {

// Conv3x3: stride 1, zero same-padding. The tap loop is outermost so every
// inner loop is a contiguous multiply-add over one row.

inline Tensor conv3x3_forward(const Tensor& input, const Tensor& weights, const Tensor& bias) {
  if (input.rank() != 3 || weights.rank() != 4) {
    throw Error(ErrorCode::ShapeMismatch, "conv3x3 expects input [C,H,W] and weights [F,C,3,3]");
  }
  const std::size_t channels = input.dim(0), h = input.dim(1), w = input.dim(2);
  const std::size_t filters = weights.dim(0);
  require_shape(weights, {filters, channels, 3, 3}, "conv3x3 weights");
  require_shape(bias, {filters}, "conv3x3 bias");

  Tensor out({filters, h, w});
  const auto H = static_cast<std::ptrdiff_t>(h), W = static_cast<std::ptrdiff_t>(w);
  for (std::size_t f = 0; f < filters; ++f) {
    double* plane = out.data.data() + f * h * w;
    std::fill(plane, plane + h * w, bias[f]);
    for (std::size_t c = 0; c < channels; ++c) {
      const double* src_plane = input.data.data() + c * h * w;
      const double* k = weights.data.data() + (f * channels + c) * 9;
      for (std::ptrdiff_t ky = 0; ky < 3; ++ky) {
        const std::ptrdiff_t dy = ky - 1;
        const std::ptrdiff_t y_lo = std::max<std::ptrdiff_t>(0, -dy), y_hi = std::min(H, H - dy);
        for (std::ptrdiff_t kx = 0; kx < 3; ++kx) {
          const double tap = k[ky * 3 + kx];
          const std::ptrdiff_t dx = kx - 1;
          const std::ptrdiff_t x_lo = std::max<std::ptrdiff_t>(0, -dx), x_hi = std::min(W, W - dx);
          for (std::ptrdiff_t y = y_lo; y < y_hi; ++y) {
            double* dst = plane + y * W;
            const double* src = src_plane + (y + dy) * W + dx;
            for (std::ptrdiff_t x = x_lo; x < x_hi; ++x) dst[x] += tap * src[x];
          }
        }
      }
    }
  }
  return out;
}

struct ConvGrads {
  Tensor input;
  Tensor weights;
  Tensor bias;
};

inline ConvGrads conv3x3_backward(const Tensor& input, const Tensor& weights, const Tensor& grad_out) {
  const std::size_t channels = input.dim(0), h = input.dim(1), w = input.dim(2);
  const std::size_t filters = weights.dim(0);
  require_shape(grad_out, {filters, h, w}, "conv3x3 upstream gradient");

  ConvGrads g{Tensor(input.shape), Tensor(weights.shape), Tensor({filters})};
  const auto H = static_cast<std::ptrdiff_t>(h), W = static_cast<std::ptrdiff_t>(w);
  for (std::size_t f = 0; f < filters; ++f) {
    const double* go = grad_out.data.data() + f * h * w;
    double db = 0.0;
    for (std::size_t i = 0; i < h * w; ++i) db += go[i];
    g.bias[f] = db;
    for (std::size_t c = 0; c < channels; ++c) {
      const double* src_plane = input.data.data() + c * h * w;
      double* gin_plane = g.input.data.data() + c * h * w;
      const double* k = weights.data.data() + (f * channels + c) * 9;
      double* gk = g.weights.data.data() + (f * channels + c) * 9;
      for (std::ptrdiff_t ky = 0; ky < 3; ++ky) {
        const std::ptrdiff_t dy = ky - 1;
        const std::ptrdiff_t y_lo = std::max<std::ptrdiff_t>(0, -dy), y_hi = std::min(H, H - dy);
        for (std::ptrdiff_t kx = 0; kx < 3; ++kx) {
          const double tap = k[ky * 3 + kx];
          const std::ptrdiff_t dx = kx - 1;
          const std::ptrdiff_t x_lo = std::max<std::ptrdiff_t>(0, -dx), x_hi = std::min(W, W - dx);
          double acc = 0.0;
          for (std::ptrdiff_t y = y_lo; y < y_hi; ++y) {
            const double* gorow = go + y * W;
            const double* src = src_plane + (y + dy) * W + dx;
            double* gin = gin_plane + (y + dy) * W + dx;
            for (std::ptrdiff_t x = x_lo; x < x_hi; ++x) {
              acc += gorow[x] * src[x];
              gin[x] += tap * gorow[x];
            }
          }
          gk[ky * 3 + kx] = acc;
        }
      }
    }
  }
  return g;
}

struct PoolResult {
  Tensor output;
  std::vector<std::uint32_t> argmax;  // flat input index per output element
};

/// 2x2 max pooling, stride 2. Ties resolve to the smallest flat index.
inline PoolResult maxpool2x2_forward(const Tensor& input) {
  if (input.rank() != 3) throw Error(ErrorCode::ShapeMismatch, "maxpool expects [C,H,W]");
  const std::size_t channels = input.dim(0), h = input.dim(1), w = input.dim(2);
  if (h % 2 != 0 || w % 2 != 0) {
    throw Error(ErrorCode::OddExtent, "maxpool2x2 needs even extents, got " + Tensor::shape_string(input.shape));
  }
  const std::size_t oh = h / 2, ow = w / 2;
  PoolResult r{Tensor({channels, oh, ow}), std::vector<std::uint32_t>(channels * oh * ow)};
  for (std::size_t c = 0; c < channels; ++c) {
    for (std::size_t y = 0; y < oh; ++y) {
      for (std::size_t x = 0; x < ow; ++x) {
        const std::size_t base = c * h * w + 2 * y * w + 2 * x;
        const std::size_t candidates[4] = {base, base + 1, base + w, base + w + 1};
        std::size_t best = candidates[0];
        for (std::size_t i = 1; i < 4; ++i) {
          if (input[candidates[i]] > input[best]) best = candidates[i];
        }
        const std::size_t o = (c * oh + y) * ow + x;
        r.output[o] = input[best];
        r.argmax[o] = static_cast<std::uint32_t>(best);
      }
    }
  }
  return r;
}

inline Tensor maxpool2x2_backward(const std::vector<std::size_t>& input_shape, const std::vector<std::uint32_t>& argmax,
                                  const Tensor& grad_out) {
  if (grad_out.size() != argmax.size()) {
    throw Error(ErrorCode::ShapeMismatch, "maxpool upstream gradient does not match argmax table");
  }
  Tensor g(input_shape);
  for (std::size_t i = 0; i < argmax.size(); ++i) g[argmax[i]] += grad_out[i];
  return g;
}

/// out[m] = bias[m] + sum_n weights[m, n] * in[n]; input of any shape is read flat.
inline Tensor dense_forward(const Tensor& input, const Tensor& weights, const Tensor& bias) {
  if (weights.rank() != 2) throw Error(ErrorCode::ShapeMismatch, "dense weights must be [M,N]");
  const std::size_t m_out = weights.dim(0), n_in = weights.dim(1);
  if (input.size() != n_in) {
    throw Error(ErrorCode::ShapeMismatch, "dense layer expects " + std::to_string(n_in) + " inputs, got " +
                                              std::to_string(input.size()));
  }
  require_shape(bias, {m_out}, "dense bias");
  Tensor out({m_out});
  for (std::size_t m = 0; m < m_out; ++m) {
    const double* row = weights.data.data() + m * n_in;
    double acc = bias[m];
    for (std::size_t n = 0; n < n_in; ++n) acc += row[n] * input[n];
    out[m] = acc;
  }
  return out;
}

struct DenseGrads {
  Tensor input;
  Tensor weights;
  Tensor bias;
};

inline DenseGrads dense_backward(const Tensor& input, const Tensor& weights, const Tensor& grad_out) {
  const std::size_t m_out = weights.dim(0), n_in = weights.dim(1);
  require_shape(grad_out, {m_out}, "dense upstream gradient");
  DenseGrads g{Tensor(input.shape), Tensor(weights.shape), grad_out};
  for (std::size_t m = 0; m < m_out; ++m) {
    const double go = grad_out[m];
    const double* row = weights.data.data() + m * n_in;
    double* grow = g.weights.data.data() + m * n_in;
    for (std::size_t n = 0; n < n_in; ++n) {
      grow[n] = go * input[n];
      g.input[n] += go * row[n];
    }
  }
  return g;
}

inline Tensor relu(Tensor x) {
  for (double& v : x.data) v = std::max(0.0, v);
  return x;
}

/// Masks the upstream gradient where the pre-activation was not positive.
inline Tensor relu_backward(const Tensor& pre_activation, Tensor grad_out) {
  for (std::size_t i = 0; i < grad_out.size(); ++i) {
    if (!(pre_activation[i] > 0.0)) grad_out[i] = 0.0;
  }
  return grad_out;
}

inline constexpr double kSigmoidSaturation = 30.0;

/// Logistic function. Past |x| > 30 the tails are evaluated without forming
/// exp(|x|); the lower tail is floored at exp(-700) so it stays positive.
inline double sigmoid(double x) noexcept {
  if (x < -kSigmoidSaturation) return std::exp(std::max(x, -700.0));
  if (x > kSigmoidSaturation) return 1.0 / (1.0 + std::exp(-x));
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline constexpr double kProbabilityClamp = 1e-7;

struct LossValue {
  double loss;
  double grad_p;  // dL/dp at the clamped p
};

/// Binary cross-entropy on a probability clamped to [1e-7, 1 - 1e-7].
inline LossValue bce_loss(double p, int y) noexcept {
  const double q = std::clamp(p, kProbabilityClamp, 1.0 - kProbabilityClamp);
  const double t = static_cast<double>(y);
  return {-(t * std::log(q) + (1.0 - t) * std::log(1.0 - q)), -t / q + (1.0 - t) / (1.0 - q)};
}

}  // namespace blurscope::cnn
