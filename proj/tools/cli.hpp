#pragma once

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "blurscope.hpp"

namespace blurscope::cli {

// Exit codes shared by every subcommand.
inline constexpr int kOk = 0;
inline constexpr int kFailure = 1;
inline constexpr int kUsage = 2;

namespace detail {

inline std::string fixed3(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", round3(v) + 0.0);
  return buf;
}

inline std::string signed3(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%+.3f", round3(v) + 0.0);
  return buf;
}

inline std::string real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Confusion table laid out as verdict rows against real-condition columns.
inline void print_report(std::ostream& out, const MetricsReport& r) {
  const auto& cm = r.confusion;
  char buf[256];
  out << "method: " << to_string(r.method) << "\n";
  out << "dataset: " << r.dataset_id << "\n";
  out << "                              Real condition\n";
  out << "                              Is blurry   Not blurry\n";
  std::snprintf(buf, sizeof buf, "%-10s verdict  Is blurry   %9zu   %10zu\n", std::string(to_string(r.method)).c_str(),
                cm.tp, cm.fp);
  out << buf;
  std::snprintf(buf, sizeof buf, "                   Not blurry  %9zu   %10zu\n", cm.fn, cm.tn);
  out << buf;
  out << "sensitivity " << fixed3(r.sensitivity) << "\n";
  out << "specificity " << fixed3(r.specificity) << "\n";
  out << "accuracy    " << fixed3(r.accuracy) << "\n";
}

struct SubsetOptions {
  std::string subset = "all";
  double train_fraction = 0.8;
  bool stratified = false;
};

inline void add_subset_options(CLI::App* cmd, SubsetOptions& opt) {
  cmd->add_option("--subset", opt.subset, "Which part of the 80/20 split to use")
      ->check(CLI::IsMember({"all", "train", "validation"}))
      ->capture_default_str();
  cmd->add_option("--train-fraction", opt.train_fraction, "Train share of the split")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  cmd->add_flag("--stratified", opt.stratified, "Split within each class");
}

inline LabeledDataset select_subset(const LabeledDataset& all, const SubsetOptions& opt, std::uint64_t seed) {
  if (opt.subset == "all") return all;
  Split split = split_dataset(all, opt.train_fraction, seed, opt.stratified);
  return opt.subset == "train" ? split.train : split.validation;
}

inline std::string dataset_id(const std::string& csv, const SubsetOptions& opt, std::uint64_t seed) {
  if (opt.subset == "all") return csv;
  return csv + "#" + opt.subset + "@seed" + std::to_string(seed);
}

inline Classifier laplacian_classifier(const ThresholdModel& model, LaplacianMask mask) {
  return [model, mask](const LabeledSample& s) { return classify_laplacian(load_image(s.path), model, mask); };
}

inline Classifier cnn_classifier(const cnn::CnnModel& model) {
  return [model](const LabeledSample& s) { return cnn::predict(model, load_image(s.path)).label; };
}

inline Classifier truth_classifier() {
  return [](const LabeledSample& s) { return s.label; };
}

inline LaplacianMask parse_mask(int neighbours) {
  return neighbours == 8 ? LaplacianMask::EightNeighbor : LaplacianMask::FourNeighbor;
}

}  // namespace detail

/// Runs the command line. argv[0] is the program name.
inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Blur detection with a variance-of-Laplacian threshold and a small CNN", "blurscope"};
  app.require_subcommand(1);

  std::uint64_t seed = 7;
  auto add_seed = [&](CLI::App* cmd) {
    cmd->add_option("--seed", seed, "Random seed")->envname("BLURSCOPE_SEED")->capture_default_str();
  };

  // synth
  SynthOptions synth_opt;
  std::string sigma_range = "2:4";
  std::string synth_out;
  auto* synth = app.add_subcommand("synth", "Generate a labelled synthetic corpus");
  add_seed(synth);
  synth->add_option("--count", synth_opt.count, "Number of images (even)")
      ->check(CLI::Validator(
          [](std::string& s) -> std::string {
            long long v = 0;
            try {
              v = std::stoll(s);
            } catch (...) {
              return "count must be an integer";
            }
            return v >= 2 && v % 2 == 0 ? "" : "count must be even and >= 2";
          },
          "EVEN"))
      ->capture_default_str();
  synth->add_option("--sigma", sigma_range, "Blur sigma range lo:hi")->capture_default_str();
  synth->add_option("--size", synth_opt.width, "Texture side length in pixels")
      ->check(CLI::Range(8, 4096))
      ->capture_default_str();
  synth->add_option("--out", synth_out, "Output directory")->required();

  // calibrate
  std::string labels_csv;
  std::string out_path;
  int mask_neighbours = 4;
  std::string weighting = "count";
  detail::SubsetOptions subset;
  auto* calibrate_cmd = app.add_subcommand("calibrate", "Fit the Laplacian threshold");
  add_seed(calibrate_cmd);
  calibrate_cmd->add_option("--labels", labels_csv, "Labels CSV")->required()->check(CLI::ExistingFile);
  calibrate_cmd->add_option("--out", out_path, "Threshold model JSON")->required();
  calibrate_cmd->add_option("--mask", mask_neighbours, "Laplacian mask neighbourhood (4 or 8)")
      ->check(CLI::IsMember({4, 8}))
      ->capture_default_str();
  calibrate_cmd->add_option("--weighting", weighting, "Centre weighting: count or midpoint")
      ->check(CLI::IsMember({"count", "midpoint"}))
      ->capture_default_str();
  detail::add_subset_options(calibrate_cmd, subset);

  // train
  cnn::TrainConfig train_cfg;
  std::string report_path;
  auto* train_cmd = app.add_subcommand("train", "Train the CNN on the train split");
  add_seed(train_cmd);
  train_cmd->add_option("--labels", labels_csv, "Labels CSV")->required()->check(CLI::ExistingFile);
  train_cmd->add_option("--out", out_path, "Model file")->required();
  train_cmd->add_option("--epochs", train_cfg.epochs, "Training epochs")
      ->check(CLI::Range(std::size_t{1}, std::size_t{100000}))
      ->capture_default_str();
  train_cmd->add_option("--lr", train_cfg.learning_rate, "SGD learning rate")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  train_cmd->add_option("--batch", train_cfg.batch_size, "Minibatch size")
      ->check(CLI::Range(std::size_t{1}, std::size_t{1} << 20))
      ->capture_default_str();
  train_cmd->add_option("--input-side", train_cfg.input_side, "Network input side (multiple of 4)")
      ->check(CLI::Validator(
          [](std::string& s) -> std::string {
            try {
              const long long v = std::stoll(s);
              return v >= 4 && v % 4 == 0 ? "" : "input side must be a positive multiple of 4";
            } catch (...) {
              return "input side must be an integer";
            }
          },
          "MULTIPLE_OF_4"))
      ->capture_default_str();
  train_cmd->add_option("--train-fraction", subset.train_fraction, "Train share of the split")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  train_cmd->add_flag("--stratified", subset.stratified, "Split within each class");
  train_cmd->add_option("--report", report_path, "Write the validation report JSON here");

  // classify
  std::string method = "laplacian";
  std::string model_path;
  std::vector<std::string> images;
  auto* classify_cmd = app.add_subcommand("classify", "Classify images as blurry or sharp");
  classify_cmd->add_option("--method", method, "laplacian or cnn")
      ->check(CLI::IsMember({"laplacian", "cnn"}))
      ->capture_default_str();
  classify_cmd->add_option("--model", model_path, "Threshold JSON or CNN model file")
      ->required()
      ->check(CLI::ExistingFile);
  classify_cmd->add_option("--mask", mask_neighbours, "Laplacian mask neighbourhood (4 or 8)")
      ->check(CLI::IsMember({4, 8}));
  classify_cmd->add_option("images", images, "Images to classify")->required();

  // evaluate
  std::string stub;
  auto* evaluate_cmd = app.add_subcommand("evaluate", "Confusion matrix and metrics on a labelled set");
  add_seed(evaluate_cmd);
  evaluate_cmd->add_option("--method", method, "laplacian or cnn")
      ->check(CLI::IsMember({"laplacian", "cnn"}))
      ->capture_default_str();
  evaluate_cmd->add_option("--model", model_path, "Threshold JSON or CNN model file")->check(CLI::ExistingFile);
  evaluate_cmd->add_option("--labels", labels_csv, "Labels CSV")->required()->check(CLI::ExistingFile);
  evaluate_cmd->add_option("--out", out_path, "Report JSON");
  evaluate_cmd->add_option("--mask", mask_neighbours, "Laplacian mask neighbourhood (4 or 8)")
      ->check(CLI::IsMember({4, 8}));
  evaluate_cmd->add_option("--stub", stub, "Replace the classifier (testing): truth")
      ->check(CLI::IsMember({"truth"}))
      ->group("");
  detail::add_subset_options(evaluate_cmd, subset);

  // compare
  std::string threshold_path;
  std::string cnn_path;
  auto* compare_cmd = app.add_subcommand("compare", "Evaluate both methods on the same set");
  add_seed(compare_cmd);
  compare_cmd->add_option("--threshold", threshold_path, "Threshold model JSON")->check(CLI::ExistingFile);
  compare_cmd->add_option("--cnn", cnn_path, "CNN model file")->check(CLI::ExistingFile);
  compare_cmd->add_option("--labels", labels_csv, "Labels CSV")->required()->check(CLI::ExistingFile);
  compare_cmd->add_option("--mask", mask_neighbours, "Laplacian mask neighbourhood (4 or 8)")
      ->check(CLI::IsMember({4, 8}));
  compare_cmd->add_option("--stub", stub, "Replace both classifiers (testing): truth")
      ->check(CLI::IsMember({"truth"}))
      ->group("");
  detail::add_subset_options(compare_cmd, subset);

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  }

  auto usage = [&](const std::string& msg) {
    err << "error: " << msg << "\n";
    return kUsage;
  };

  try {
    if (*synth) {
      const auto colon = sigma_range.find(':');
      if (colon == std::string::npos) return usage("--sigma expects lo:hi");
      try {
        synth_opt.sigma_min = std::stod(sigma_range.substr(0, colon));
        synth_opt.sigma_max = std::stod(sigma_range.substr(colon + 1));
      } catch (const std::exception&) {
        return usage("--sigma expects two numbers lo:hi");
      }
      if (!(synth_opt.sigma_min > 0.0 && synth_opt.sigma_min <= synth_opt.sigma_max)) {
        return usage("--sigma needs 0 < lo <= hi");
      }
      synth_opt.seed = seed;
      synth_opt.height = synth_opt.width;
      synth_dataset(synth_opt, synth_out);
      out << (std::filesystem::path(synth_out) / "labels.csv").string() << "\n";
      return kOk;
    }

    if (*calibrate_cmd) {
      const auto dataset = detail::select_subset(read_labels_csv(labels_csv), subset, seed);
      const auto scored = score_batch(dataset, detail::parse_mask(mask_neighbours));
      ThresholdModel model;
      try {
        model = calibrate(scored, weighting == "midpoint" ? CentreWeighting::Midpoint : CentreWeighting::ClassCount);
      } catch (const Error& e) {
        err << "error: calibration failed: " << e.message() << "\n";
        return kFailure;
      }
      save_threshold_model(model, out_path);
      out << "threshold\t" << detail::real(model.threshold) << "\n";
      out << "centre_blurry\t" << detail::real(model.centre_blurry) << "\n";
      out << "centre_sharp\t" << detail::real(model.centre_sharp) << "\n";
      return kOk;
    }

    if (*train_cmd) {
      train_cfg.seed = seed;
      const Split split = split_dataset(read_labels_csv(labels_csv), subset.train_fraction, seed, subset.stratified);
      const auto model = cnn::train(split.train, train_cfg, [&](const cnn::EpochLog& log) {
        out << "epoch\t" << log.epoch << "\tloss\t" << detail::real(log.mean_loss) << "\taccuracy\t"
            << detail::real(log.accuracy) << "\n";
      });
      cnn::save_model(model, out_path);
      if (split.validation.count(Label::Blurry) == 0 || split.validation.count(Label::Sharp) == 0) {
        err << "warning: validation split lacks a class; no validation metrics\n";
        return kOk;
      }
      detail::SubsetOptions val = subset;
      val.subset = "validation";
      const auto report = evaluate(detail::cnn_classifier(model), split.validation, Method::Cnn,
                                   detail::dataset_id(labels_csv, val, seed));
      detail::print_report(out, report);
      if (!report_path.empty()) save_report(report, report_path);
      return kOk;
    }

    if (*classify_cmd) {
      std::optional<ThresholdModel> threshold;
      std::optional<cnn::CnnModel> network;
      if (method == "laplacian") {
        threshold = load_threshold_model(model_path);
      } else {
        network = cnn::load_model(model_path);
      }
      int status = kOk;
      for (const auto& path : images) {
        try {
          const GrayImage image = load_image(path);
          if (threshold) {
            const double score = laplacian_variance(image, detail::parse_mask(mask_neighbours));
            out << path << '\t' << detail::real(score) << '\t' << to_string(classify_score(score, *threshold)) << '\n';
          } else {
            const auto p = cnn::predict(*network, image);
            out << path << '\t' << detail::real(p.probability) << '\t' << to_string(p.label) << '\n';
          }
        } catch (const Error& e) {
          err << "error: " << path << ": " << e.what() << "\n";
          status = kFailure;
        }
      }
      return status;
    }

    if (*evaluate_cmd) {
      const Method m = method == "cnn" ? Method::Cnn : Method::Laplacian;
      if (stub.empty() && model_path.empty()) return usage("--model is required unless a stub is selected");
      const auto dataset = detail::select_subset(read_labels_csv(labels_csv), subset, seed);
      Classifier classify;
      if (!stub.empty()) {
        classify = detail::truth_classifier();
      } else if (m == Method::Laplacian) {
        classify = detail::laplacian_classifier(load_threshold_model(model_path), detail::parse_mask(mask_neighbours));
      } else {
        classify = detail::cnn_classifier(cnn::load_model(model_path));
      }
      const auto report = evaluate(classify, dataset, m, detail::dataset_id(labels_csv, subset, seed));
      detail::print_report(out, report);
      if (!recomputes(report)) {
        err << "error: report metrics do not match their counts\n";
        return kFailure;
      }
      if (!out_path.empty()) save_report(report, out_path);
      return kOk;
    }

    if (*compare_cmd) {
      if (stub.empty() && (threshold_path.empty() || cnn_path.empty())) {
        return usage("--threshold and --cnn are required unless a stub is selected");
      }
      const auto dataset = detail::select_subset(read_labels_csv(labels_csv), subset, seed);
      const std::string id = detail::dataset_id(labels_csv, subset, seed);
      const Classifier lap = stub.empty() ? detail::laplacian_classifier(load_threshold_model(threshold_path),
                                                                          detail::parse_mask(mask_neighbours))
                                          : detail::truth_classifier();
      const Classifier net = stub.empty() ? detail::cnn_classifier(cnn::load_model(cnn_path)) : detail::truth_classifier();
      const auto a = evaluate(lap, dataset, Method::Laplacian, id);
      const auto b = evaluate(net, dataset, Method::Cnn, id);
      out << "== report: laplacian ==\n";
      detail::print_report(out, a);
      out << "== report: cnn ==\n";
      detail::print_report(out, b);
      out << "== delta: cnn - laplacian ==\n";
      out << "sensitivity " << detail::signed3(b.sensitivity - a.sensitivity) << "\n";
      out << "specificity " << detail::signed3(b.specificity - a.specificity) << "\n";
      out << "accuracy    " << detail::signed3(b.accuracy - a.accuracy) << "\n";
      return kOk;
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kFailure;
  }
  return kUsage;
}

}  // namespace blurscope::cli
