#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "blurscope/dataset.hpp"
#include "blurscope/error.hpp"
#include "blurscope/laplacian.hpp"
#include "blurscope/rng.hpp"

namespace blurscope {

struct Split {
  LabeledDataset train;
  LabeledDataset validation;
};

/// Seeded shuffle, then the first floor(n * fraction) samples go to train.
/// Stratified mode applies the same rule within each class and keeps the
/// shuffled order inside each class (blurry first).
inline Split split_dataset(const LabeledDataset& dataset, double train_fraction, std::uint64_t seed,
                           bool stratified = false) {
  if (dataset.empty()) throw Error(ErrorCode::EmptyDataset, "cannot split an empty dataset");
  if (!(train_fraction > 0.0 && train_fraction <= 1.0)) {
    throw Error(ErrorCode::BadRange, "train fraction must lie in (0, 1]");
  }
  auto take = [&](std::size_t n) {
    return static_cast<std::size_t>(std::floor(static_cast<double>(n) * train_fraction + 1e-9));
  };
  Split split;
  auto distribute = [&](std::vector<std::size_t> idx, std::uint64_t stream) {
    Rng rng(substream(seed, stream));
    shuffle(idx, rng);
    const std::size_t n_train = take(idx.size());
    for (std::size_t k = 0; k < idx.size(); ++k) {
      (k < n_train ? split.train : split.validation).add(dataset[idx[k]]);
    }
  };
  if (!stratified) {
    std::vector<std::size_t> idx(dataset.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    distribute(std::move(idx), 0x73706C6974ULL);
  } else {
    for (Label label : {Label::Blurry, Label::Sharp}) {
      std::vector<std::size_t> idx;
      for (std::size_t i = 0; i < dataset.size(); ++i) {
        if (dataset[i].label == label) idx.push_back(i);
      }
      distribute(std::move(idx), label == Label::Blurry ? 0x7374726174ULL : 0x7374726175ULL);
    }
  }
  return split;
}

/// Blurry is the positive class.
struct ConfusionMatrix {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::size_t tn = 0;

  std::size_t total() const noexcept { return tp + fp + fn + tn; }
  std::size_t positives() const noexcept { return tp + fn; }
  std::size_t negatives() const noexcept { return tn + fp; }

  void record(Label predicted, Label truth) noexcept {
    if (predicted == Label::Blurry) {
      ++(truth == Label::Blurry ? tp : fp);
    } else {
      ++(truth == Label::Blurry ? fn : tn);
    }
  }

  bool operator==(const ConfusionMatrix&) const = default;
};

inline ConfusionMatrix build_confusion(std::span<const Label> predictions, std::span<const Label> truths) {
  if (predictions.size() != truths.size()) {
    throw Error(ErrorCode::LengthMismatch, std::to_string(predictions.size()) + " predictions for " +
                                               std::to_string(truths.size()) + " truths");
  }
  if (predictions.empty()) throw Error(ErrorCode::EmptyInput, "no predictions");
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < predictions.size(); ++i) cm.record(predictions[i], truths[i]);
  return cm;
}

inline double sensitivity(const ConfusionMatrix& cm) {
  if (cm.positives() == 0) throw Error(ErrorCode::NoPositives, "sensitivity undefined without blurry samples");
  return static_cast<double>(cm.tp) / static_cast<double>(cm.positives());
}

inline double specificity(const ConfusionMatrix& cm) {
  if (cm.negatives() == 0) throw Error(ErrorCode::NoNegatives, "specificity undefined without sharp samples");
  return static_cast<double>(cm.tn) / static_cast<double>(cm.negatives());
}

inline double accuracy(const ConfusionMatrix& cm) {
  if (cm.total() == 0) throw Error(ErrorCode::EmptyMatrix, "accuracy of an empty confusion matrix");
  return static_cast<double>(cm.tp + cm.tn) / static_cast<double>(cm.total());
}

/// Half-away-from-zero rounding to 3 decimals, the precision used for display.
inline double round3(double v) { return std::round(v * 1000.0) / 1000.0; }

enum class Method { Laplacian, Cnn };

constexpr std::string_view to_string(Method m) noexcept { return m == Method::Laplacian ? "laplacian" : "cnn"; }

struct MetricsReport {
  Method method = Method::Laplacian;
  std::string dataset_id;
  ConfusionMatrix confusion;
  double sensitivity = 0.0;
  double specificity = 0.0;
  double accuracy = 0.0;

  bool operator==(const MetricsReport&) const = default;
};

inline MetricsReport make_report(Method method, std::string dataset_id, const ConfusionMatrix& cm) {
  return {method, std::move(dataset_id), cm, sensitivity(cm), specificity(cm), accuracy(cm)};
}

/// True when every metric field equals its formula applied to the counts.
inline bool recomputes(const MetricsReport& r) {
  return r.sensitivity == sensitivity(r.confusion) && r.specificity == specificity(r.confusion) &&
         r.accuracy == accuracy(r.confusion);
}

using Classifier = std::function<Label(const LabeledSample&)>;

/// Runs the classifier over the dataset in order and summarises the verdicts.
inline MetricsReport evaluate(const Classifier& classify, const LabeledDataset& dataset, Method method,
                              std::string dataset_id) {
  if (dataset.count(Label::Blurry) == 0 || dataset.count(Label::Sharp) == 0) {
    throw Error(ErrorCode::SingleClassDataset, "evaluation needs both classes (blurry=" +
                                                   std::to_string(dataset.count(Label::Blurry)) +
                                                   ", sharp=" + std::to_string(dataset.count(Label::Sharp)) + ")");
  }
  ConfusionMatrix cm;
  for (const auto& s : dataset) cm.record(classify(s), s.label);
  return make_report(method, std::move(dataset_id), cm);
}

inline std::string to_json(const MetricsReport& r) {
  std::string s = "{\n";
  s += "  \"method\": \"" + std::string(to_string(r.method)) + "\",\n";
  s += "  \"dataset_id\": " + nlohmann::json(r.dataset_id).dump() + ",\n";
  s += "  \"tp\": " + std::to_string(r.confusion.tp) + ",\n";
  s += "  \"fp\": " + std::to_string(r.confusion.fp) + ",\n";
  s += "  \"fn\": " + std::to_string(r.confusion.fn) + ",\n";
  s += "  \"tn\": " + std::to_string(r.confusion.tn) + ",\n";
  s += "  \"sensitivity\": " + format_real(r.sensitivity) + ",\n";
  s += "  \"specificity\": " + format_real(r.specificity) + ",\n";
  s += "  \"accuracy\": " + format_real(r.accuracy) + "\n}\n";
  return s;
}

inline MetricsReport report_from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    MetricsReport r;
    const auto method = j.at("method").get<std::string>();
    if (method != "laplacian" && method != "cnn") throw Error(ErrorCode::BadModel, "unknown method " + method);
    r.method = method == "laplacian" ? Method::Laplacian : Method::Cnn;
    r.dataset_id = j.at("dataset_id").get<std::string>();
    r.confusion = {j.at("tp").get<std::size_t>(), j.at("fp").get<std::size_t>(), j.at("fn").get<std::size_t>(),
                   j.at("tn").get<std::size_t>()};
    r.sensitivity = j.at("sensitivity").get<double>();
    r.specificity = j.at("specificity").get<double>();
    r.accuracy = j.at("accuracy").get<double>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::BadModel, std::string("report JSON: ") + e.what());
  }
}

inline void save_report(const MetricsReport& r, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoFailure, path.string() + ": cannot open for writing");
  out << to_json(r);
  if (!out) throw Error(ErrorCode::IoFailure, path.string() + ": write failed");
}

}  // namespace blurscope
