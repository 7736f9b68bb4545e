#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <random>

#include "blurscope/cnn/model.hpp"

namespace blurscope::test {

struct GradCheckResult {
  std::size_t parameters = 0;
  double max_relative_error = 0.0;
  std::size_t worst_layer = 0;
  std::size_t worst_index = 0;
  // Parameters whose +-h probes flip a ReLU sign or move a max-pool argmax.
  // Central differences are meaningless across such a kink.
  std::size_t kink_crossings = 0;
  double max_relative_error_smooth = 0.0;  // over the other parameters
};

/// ReLU on/off states and pool winners of one forward pass.
inline std::vector<std::uint32_t> activation_pattern(const cnn::CnnModel& model, const cnn::Tensor& input) {
  const auto trace = cnn::forward_trace(model, input);
  std::vector<std::uint32_t> pattern;
  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    if (model.layers[i].activation == cnn::Activation::ReLU) {
      for (double v : trace.pre_activation[i].data) pattern.push_back(v > 0.0);
    }
    pattern.insert(pattern.end(), trace.argmax[i].begin(), trace.argmax[i].end());
  }
  return pattern;
}

/// Central differences of the BCE loss with respect to every weight and bias,
/// compared with the analytic gradients from cnn::backward. The relative
/// error uses max(|a|, |b|, 1e-8) as denominator.
inline GradCheckResult gradient_check(const cnn::CnnModel& model, const cnn::Tensor& input, int y, double h = 1e-3) {
  const auto analytic = cnn::backward(model, input, y).grads;
  auto loss_at = [&](const cnn::CnnModel& m) { return cnn::bce_loss(cnn::forward(m, input), y).loss; };

  GradCheckResult r;
  const auto base_pattern = activation_pattern(model, input);
  cnn::CnnModel probe = model;
  auto check = [&](std::vector<double>& values, const std::vector<double>& grads, std::size_t layer) {
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double saved = values[i];
      values[i] = saved + h;
      const double up = loss_at(probe);
      bool kink = activation_pattern(probe, input) != base_pattern;
      values[i] = saved - h;
      const double down = loss_at(probe);
      kink = kink || activation_pattern(probe, input) != base_pattern;
      values[i] = saved;
      const double numeric = (up - down) / (2.0 * h);
      const double a = grads[i];
      const double rel = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-8});
      if (rel > r.max_relative_error) {
        r.max_relative_error = rel;
        r.worst_layer = layer;
        r.worst_index = i;
      }
      if (kink) {
        ++r.kink_crossings;
      } else {
        r.max_relative_error_smooth = std::max(r.max_relative_error_smooth, rel);
      }
      ++r.parameters;
    }
  };
  for (std::size_t k = 0; k < probe.params.size(); ++k) {
    check(probe.params[k].weights.data, analytic[k].weights.data, k);
    check(probe.params[k].bias.data, analytic[k].bias.data, k);
  }
  return r;
}

/// Default architecture at the given side with He weights and small random biases.
inline cnn::CnnModel random_model(std::size_t side, std::uint64_t seed) {
  auto model = cnn::init_weights(cnn::default_architecture(side), side, seed);
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> n(0.0, 0.1);
  for (auto& p : model.params)
    for (double& b : p.bias.data) b = n(gen);
  return model;
}

inline cnn::Tensor random_input(std::size_t side, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  cnn::Tensor t({1, side, side});
  for (double& v : t.data) v = u(gen);
  return t;
}

}  // namespace blurscope::test
