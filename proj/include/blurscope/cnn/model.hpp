#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "blurscope/cnn/layers.hpp"
#include "blurscope/cnn/tensor.hpp"
#include "blurscope/dataset.hpp"
#include "blurscope/error.hpp"
#include "blurscope/image.hpp"
#include "blurscope/rng.hpp"

namespace blurscope::cnn {

enum class LayerKind : std::uint8_t { Conv3x3 = 0, MaxPool2x2 = 1, Dense = 2 };
enum class Activation : std::uint8_t { None = 0, ReLU = 1, Sigmoid = 2 };

/// in/out are channels for Conv3x3 and features for Dense; unused for pooling.
struct LayerSpec {
  LayerKind kind = LayerKind::Conv3x3;
  std::size_t in = 0;
  std::size_t out = 0;
  Activation activation = Activation::None;

  bool operator==(const LayerSpec&) const = default;

  static LayerSpec conv(std::size_t in_channels, std::size_t out_channels, Activation a = Activation::ReLU) {
    return {LayerKind::Conv3x3, in_channels, out_channels, a};
  }
  static LayerSpec pool() { return {LayerKind::MaxPool2x2, 0, 0, Activation::None}; }
  static LayerSpec dense(std::size_t in_features, std::size_t out_features, Activation a = Activation::ReLU) {
    return {LayerKind::Dense, in_features, out_features, a};
  }
};

/// Conv(1->8) ReLU, pool, Conv(8->16) ReLU, pool, Dense(->32) ReLU, Dense(32->1) Sigmoid.
inline std::vector<LayerSpec> default_architecture(std::size_t input_side = 64) {
  const std::size_t side = input_side / 4;
  return {LayerSpec::conv(1, 8),
          LayerSpec::pool(),
          LayerSpec::conv(8, 16),
          LayerSpec::pool(),
          LayerSpec::dense(16 * side * side, 32),
          LayerSpec::dense(32, 1, Activation::Sigmoid)};
}

/// Walks the layer stack from a [1, side, side] input and returns the output
/// shape of every layer, throwing if any two consecutive layers do not chain
/// or the network does not end in a single sigmoid unit.
inline std::vector<std::vector<std::size_t>> layer_shapes(const std::vector<LayerSpec>& layers, std::size_t input_side) {
  if (input_side == 0) throw Error(ErrorCode::ShapeMismatch, "input_side must be positive");
  if (layers.empty()) throw Error(ErrorCode::ShapeMismatch, "model has no layers");
  std::vector<std::size_t> shape{1, input_side, input_side};
  std::vector<std::vector<std::size_t>> shapes;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& l = layers[i];
    const std::string where = "layer " + std::to_string(i) + ": ";
    switch (l.kind) {
      case LayerKind::Conv3x3:
        if (shape.size() != 3 || shape[0] != l.in || l.out == 0) {
          throw Error(ErrorCode::ShapeMismatch, where + "conv input " + Tensor::shape_string(shape) +
                                                    " does not match in_channels " + std::to_string(l.in));
        }
        shape = {l.out, shape[1], shape[2]};
        break;
      case LayerKind::MaxPool2x2:
        if (shape.size() != 3) throw Error(ErrorCode::ShapeMismatch, where + "pool after flatten");
        if (shape[1] % 2 != 0 || shape[2] % 2 != 0) {
          throw Error(ErrorCode::OddExtent, where + "pool input " + Tensor::shape_string(shape));
        }
        shape = {shape[0], shape[1] / 2, shape[2] / 2};
        break;
      case LayerKind::Dense:
        if (Tensor::element_count(shape) != l.in || l.out == 0) {
          throw Error(ErrorCode::ShapeMismatch, where + "dense expects " + std::to_string(l.in) + " inputs, got " +
                                                    std::to_string(Tensor::element_count(shape)));
        }
        shape = {l.out};
        break;
      default:
        throw Error(ErrorCode::BadModel, where + "unknown layer kind");
    }
    if (l.kind == LayerKind::MaxPool2x2 && l.activation != Activation::None) {
      throw Error(ErrorCode::BadModel, where + "pooling layers take no activation");
    }
    shapes.push_back(shape);
  }
  if (shape != std::vector<std::size_t>{1} || layers.back().activation != Activation::Sigmoid) {
    throw Error(ErrorCode::ShapeMismatch, "final layer must output a single sigmoid unit");
  }
  return shapes;
}

/// Learnable tensors of one layer; both empty for pooling.
struct LayerParams {
  Tensor weights;
  Tensor bias;

  bool operator==(const LayerParams&) const = default;
};

struct CnnModel {
  std::size_t input_side = 64;
  std::vector<LayerSpec> layers;
  std::vector<LayerParams> params;

  bool operator==(const CnnModel&) const = default;

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& p : params) n += p.weights.size() + p.bias.size();
    return n;
  }
};

inline std::size_t fan_in(const LayerSpec& l) { return l.kind == LayerKind::Conv3x3 ? l.in * 9 : l.in; }

/// He initialisation: weights ~ N(0, 2 / fan_in) from a per-layer seeded
/// stream, biases zero.
inline CnnModel init_weights(const std::vector<LayerSpec>& layers, std::size_t input_side, std::uint64_t seed) {
  layer_shapes(layers, input_side);
  CnnModel model{input_side, layers, {}};
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& l = layers[i];
    LayerParams p;
    if (l.kind != LayerKind::MaxPool2x2) {
      p.weights = l.kind == LayerKind::Conv3x3 ? Tensor({l.out, l.in, 3, 3}) : Tensor({l.out, l.in});
      p.bias = Tensor({l.out});
      Rng rng(substream(seed, 0x696E6974ULL, i));
      const double std_dev = std::sqrt(2.0 / static_cast<double>(fan_in(l)));
      for (double& w : p.weights.data) w = std_dev * rng.normal();
    }
    model.params.push_back(std::move(p));
  }
  return model;
}

/// Per-layer intermediates retained for the backward pass.
struct ForwardTrace {
  std::vector<Tensor> inputs;          // input to layer i
  std::vector<Tensor> pre_activation;  // affine output of layer i
  std::vector<std::vector<std::uint32_t>> argmax;
  double logit = 0.0;
  double probability = 0.0;
};

inline ForwardTrace forward_trace(const CnnModel& model, const Tensor& input) {
  require_shape(input, {1, model.input_side, model.input_side}, "network input");
  ForwardTrace t;
  t.inputs.reserve(model.layers.size());
  t.pre_activation.reserve(model.layers.size());
  t.argmax.resize(model.layers.size());
  Tensor x = input;
  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    const auto& l = model.layers[i];
    const auto& p = model.params[i];
    Tensor z;
    switch (l.kind) {
      case LayerKind::Conv3x3: z = conv3x3_forward(x, p.weights, p.bias); break;
      case LayerKind::MaxPool2x2: {
        auto r = maxpool2x2_forward(x);
        z = std::move(r.output);
        t.argmax[i] = std::move(r.argmax);
        break;
      }
      case LayerKind::Dense: z = dense_forward(x, p.weights, p.bias); break;
    }
    t.inputs.push_back(std::move(x));
    switch (l.activation) {
      case Activation::ReLU: x = relu(z); break;
      case Activation::Sigmoid: {
        x = z;
        for (double& v : x.data) v = sigmoid(v);
        break;
      }
      case Activation::None: x = z; break;
    }
    t.pre_activation.push_back(std::move(z));
  }
  t.logit = t.pre_activation.back()[0];
  t.probability = x[0];
  return t;
}

inline double forward(const CnnModel& model, const Tensor& input) { return forward_trace(model, input).probability; }

/// Gradients with the same layout as CnnModel::params.
using Gradients = std::vector<LayerParams>;

inline Gradients zero_gradients(const CnnModel& model) {
  Gradients g;
  for (const auto& p : model.params) {
    LayerParams z;
    if (!p.weights.data.empty()) z.weights = Tensor(p.weights.shape);
    if (!p.bias.data.empty()) z.bias = Tensor(p.bias.shape);
    g.push_back(std::move(z));
  }
  return g;
}

/// Reverse-mode pass seeded with dL/d(logit) at the output unit. The final
/// sigmoid is folded into that seed, so it is skipped here.
inline Gradients backward_from_logit(const CnnModel& model, const ForwardTrace& trace, double grad_logit) {
  Gradients grads = zero_gradients(model);
  Tensor g({1}, std::vector<double>{grad_logit});
  for (std::size_t k = model.layers.size(); k-- > 0;) {
    const auto& l = model.layers[k];
    const auto& p = model.params[k];
    if (l.activation == Activation::ReLU) {
      g = relu_backward(trace.pre_activation[k], std::move(g));
    } else if (l.activation == Activation::Sigmoid && k + 1 != model.layers.size()) {
      for (std::size_t i = 0; i < g.size(); ++i) {
        const double s = sigmoid(trace.pre_activation[k][i]);
        g[i] *= s * (1.0 - s);
      }
    }
    const Tensor& in = trace.inputs[k];
    switch (l.kind) {
      case LayerKind::Conv3x3: {
        auto cg = conv3x3_backward(in, p.weights, g);
        grads[k].weights = std::move(cg.weights);
        grads[k].bias = std::move(cg.bias);
        g = std::move(cg.input);
        break;
      }
      case LayerKind::MaxPool2x2: g = maxpool2x2_backward(in.shape, trace.argmax[k], g); break;
      case LayerKind::Dense: {
        auto dg = dense_backward(in, p.weights, g);
        grads[k].weights = std::move(dg.weights);
        grads[k].bias = std::move(dg.bias);
        g = std::move(dg.input);
        break;
      }
    }
  }
  return grads;
}

struct BackwardResult {
  double loss = 0.0;
  double probability = 0.0;
  Gradients grads;
};

/// BCE loss and exact parameter gradients for one sample; sigmoid and BCE
/// combine to dL/d(logit) = p - y.
inline BackwardResult backward(const CnnModel& model, const Tensor& input, int y) {
  const ForwardTrace trace = forward_trace(model, input);
  BackwardResult r;
  r.probability = trace.probability;
  r.loss = bce_loss(trace.probability, y).loss;
  r.grads = backward_from_logit(model, trace, trace.probability - static_cast<double>(y));
  return r;
}

inline void check_gradient_layout(const CnnModel& model, const Gradients& grads) {
  if (grads.size() != model.params.size()) {
    throw Error(ErrorCode::ShapeMismatch, "gradient layer count does not match model");
  }
  for (std::size_t i = 0; i < grads.size(); ++i) {
    if (grads[i].weights.shape != model.params[i].weights.shape ||
        grads[i].bias.shape != model.params[i].bias.shape) {
      throw Error(ErrorCode::ShapeMismatch, "gradient shape mismatch at layer " + std::to_string(i));
    }
  }
}

/// theta <- theta - lr * g. No momentum, no weight decay.
inline void sgd_step(CnnModel& model, const Gradients& grads, double learning_rate) {
  check_gradient_layout(model, grads);
  for (std::size_t i = 0; i < grads.size(); ++i) {
    auto& p = model.params[i];
    for (std::size_t j = 0; j < p.weights.size(); ++j) p.weights[j] -= learning_rate * grads[i].weights[j];
    for (std::size_t j = 0; j < p.bias.size(); ++j) p.bias[j] -= learning_rate * grads[i].bias[j];
  }
}

inline void accumulate(Gradients& into, const Gradients& g, double scale = 1.0) {
  for (std::size_t i = 0; i < into.size(); ++i) {
    for (std::size_t j = 0; j < into[i].weights.size(); ++j) into[i].weights[j] += scale * g[i].weights[j];
    for (std::size_t j = 0; j < into[i].bias.size(); ++j) into[i].bias[j] += scale * g[i].bias[j];
  }
}

/// Resizes to input_side x input_side and lays the image out as [1, side, side].
inline Tensor image_to_input(const GrayImage& image, std::size_t input_side) {
  const GrayImage resized = resize_bilinear(image, input_side, input_side);
  const auto px = resized.pixels();
  return Tensor({1, input_side, input_side}, std::vector<double>(px.begin(), px.end()));
}

struct Prediction {
  double probability = 0.0;
  Label label = Label::Sharp;
};

/// p >= 0.5 is Blurry.
constexpr Label label_from_probability(double p) noexcept { return p >= 0.5 ? Label::Blurry : Label::Sharp; }

inline Prediction predict(const CnnModel& model, const GrayImage& image) {
  const double p = forward(model, image_to_input(image, model.input_side));
  return {p, label_from_probability(p)};
}

}  // namespace blurscope::cnn
