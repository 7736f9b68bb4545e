#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <numeric>
#include <vector>

#include "blurscope/cnn/model.hpp"
#include "blurscope/dataset.hpp"
#include "blurscope/error.hpp"
#include "blurscope/pnm.hpp"
#include "blurscope/rng.hpp"

namespace blurscope::cnn {

struct TrainConfig {
  std::size_t epochs = 30;
  double learning_rate = 0.005;
  std::size_t batch_size = 8;
  std::uint64_t seed = 7;
  std::size_t input_side = 64;
  std::vector<LayerSpec> layers;  // empty selects default_architecture(input_side)
};

struct EpochLog {
  std::size_t epoch = 0;  // 1-based
  double mean_loss = 0.0;
  double accuracy = 0.0;  // running train accuracy over the epoch's forward passes
};

using EpochCallback = std::function<void(const EpochLog&)>;

inline void validate(const TrainConfig& config) {
  if (config.epochs < 1) throw Error(ErrorCode::BadRange, "epochs must be >= 1");
  if (config.batch_size < 1) throw Error(ErrorCode::BadRange, "batch_size must be >= 1");
  if (!(config.learning_rate > 0.0)) throw Error(ErrorCode::BadRange, "learning_rate must be > 0");
}

/// Minibatch SGD on BCE over preprocessed inputs. Each epoch visits the
/// samples in a fresh seeded permutation; the batch gradient is the mean of
/// the per-sample gradients, accumulated in permutation order.
inline CnnModel train_tensors(const std::vector<Tensor>& inputs, const std::vector<int>& targets,
                              const TrainConfig& config, const EpochCallback& on_epoch = {}) {
  validate(config);
  if (inputs.size() != targets.size()) throw Error(ErrorCode::LengthMismatch, "inputs and targets differ in length");
  if (inputs.empty()) throw Error(ErrorCode::EmptyDataset, "nothing to train on");
  const auto positives = std::count(targets.begin(), targets.end(), 1);
  if (positives == 0 || positives == static_cast<std::ptrdiff_t>(targets.size())) {
    throw Error(ErrorCode::SingleClassDataset, "training data must contain both classes");
  }

  const auto layers = config.layers.empty() ? default_architecture(config.input_side) : config.layers;
  CnnModel model = init_weights(layers, config.input_side, substream(config.seed, 0x6D6F64656CULL));

  std::vector<std::size_t> order(inputs.size());
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(substream(config.seed, 0x73687566666CULL, epoch));
    shuffle(order, rng);

    double loss_sum = 0.0;
    std::size_t correct = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      Gradients batch = zero_gradients(model);
      for (std::size_t k = start; k < end; ++k) {
        const std::size_t idx = order[k];
        const auto r = backward(model, inputs[idx], targets[idx]);
        loss_sum += r.loss;
        if (label_target(label_from_probability(r.probability)) == targets[idx]) ++correct;
        accumulate(batch, r.grads);
      }
      sgd_step(model, batch, config.learning_rate / static_cast<double>(end - start));
    }
    if (on_epoch) {
      const double n = static_cast<double>(order.size());
      on_epoch({epoch, loss_sum / n, static_cast<double>(correct) / n});
    }
  }
  return model;
}

/// Loads and resizes every image once, then trains.
inline CnnModel train(const LabeledDataset& dataset, const TrainConfig& config, const EpochCallback& on_epoch = {}) {
  validate(config);
  if (dataset.empty()) throw Error(ErrorCode::EmptyDataset, "training dataset is empty");
  if (dataset.count(Label::Blurry) == 0 || dataset.count(Label::Sharp) == 0) {
    throw Error(ErrorCode::SingleClassDataset, "training dataset must contain both classes");
  }
  std::vector<Tensor> inputs;
  std::vector<int> targets;
  inputs.reserve(dataset.size());
  for (const auto& s : dataset) {
    inputs.push_back(image_to_input(load_image(s.path), config.input_side));
    targets.push_back(label_target(s.label));
  }
  return train_tensors(inputs, targets, config, on_epoch);
}

}  // namespace blurscope::cnn
