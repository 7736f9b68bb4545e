// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.
// Usage: acceptance <work-dir>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "gradcheck.hpp"
#include "test_util.hpp"

using namespace blurscope;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass;
  std::string detail;
};

struct CliResult {
  int code;
  std::string out;
  std::string err;
};

CliResult run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "blurscope");
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string slurp(const fs::path& p) {
  const auto bytes = test::read_bytes(p);
  return {bytes.begin(), bytes.end()};
}

Outcome table_one() {
  const ConfusionMatrix cm{111, 71, 7, 211};
  const bool ok = round3(sensitivity(cm)) == 0.941 && round3(specificity(cm)) == 0.748 &&
                  accuracy(cm) == 322.0 / 400.0 && accuracy(cm) > 0.80;
  return {ok, "sens " + fmt("%.3f", sensitivity(cm)) + " spec " + fmt("%.3f", specificity(cm)) + " acc " +
                  fmt("%.4f", accuracy(cm))};
}

Outcome table_two() {
  const ConfusionMatrix lap{111, 71, 7, 211};
  const ConfusionMatrix net{87, 65, 44, 204};
  const bool values = round3(sensitivity(net)) == 0.664 && round3(specificity(net)) == 0.758 && accuracy(net) == 0.7275;
  const bool claim = specificity(net) > specificity(lap) && sensitivity(net) < sensitivity(lap);
  return {values && claim, "sens " + fmt("%.3f", sensitivity(net)) + " spec " + fmt("%.3f", specificity(net)) +
                               " acc " + fmt("%.4f", accuracy(net)) + (claim ? ", cnn more specific and less sensitive"
                                                                             : ", ordering claim broken")};
}

Outcome laplacian_pipeline(const fs::path& work) {
  const auto t0 = std::chrono::steady_clock::now();
  const fs::path corpus = work / "corpus";
  const std::string csv = (corpus / "labels.csv").string();
  if (!fs::exists(csv)) {
    const auto s = run_cli({"synth", "--seed", "7", "--count", "200", "--sigma", "2:4", "--out", corpus.string()});
    if (s.code != 0) return {false, "synth failed: " + s.err};
  }
  const auto c = run_cli({"calibrate", "--seed", "7", "--labels", csv, "--subset", "train", "--out",
                          (work / "threshold.json").string()});
  if (c.code != 0) return {false, "calibrate failed: " + c.err};
  const auto e = run_cli({"evaluate", "--seed", "7", "--method", "laplacian", "--model",
                          (work / "threshold.json").string(), "--labels", csv, "--subset", "validation", "--out",
                          (work / "laplacian_report.json").string()});
  if (e.code != 0) return {false, "evaluate failed: " + e.err};
  const double secs = seconds_since(t0);
  const auto r = report_from_json(slurp(work / "laplacian_report.json"));
  const bool ok = r.accuracy >= 0.95 && r.sensitivity >= 0.90 && r.specificity >= 0.90 && secs <= 10.0;
  return {ok, "n " + std::to_string(r.confusion.total()) + " acc " + fmt("%.3f", r.accuracy) + " sens " +
                  fmt("%.3f", r.sensitivity) + " spec " + fmt("%.3f", r.specificity) + " in " + fmt("%.2f", secs) +
                  " s"};
}

Outcome blur_monotonicity() {
  const auto t0 = std::chrono::steady_clock::now();
  const double sigmas[] = {0.5, 1.0, 2.0, 4.0};
  std::size_t violations = 0;
  for (std::uint64_t i = 0; i < 50; ++i) {
    const auto texture = synth_texture(substream(7, 4, i), 128, 128);
    double previous = laplacian_variance(texture);
    for (double sigma : sigmas) {
      const double v = laplacian_variance(gaussian_blur(texture, sigma));
      if (!(v < previous)) ++violations;
      previous = v;
    }
  }
  const double secs = seconds_since(t0);
  return {violations == 0 && secs <= 30.0,
          std::to_string(violations) + " violations over 50 textures in " + fmt("%.2f", secs) + " s"};
}

Outcome convolution_oracle() {
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  auto dim = [&] { return static_cast<std::size_t>(1 + gen() % 16); };
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t w = dim(), h = dim();
    const auto image = test::random_image(gen, w, h);

    // Laplacian path: odd kernels of side 1, 3 or 5.
    const std::size_t k = 1 + 2 * (gen() % 3);
    std::vector<double> taps(k * k);
    for (double& t : taps) t = u(gen);
    const Kernel kernel(k, taps);
    const auto fast = convolve(image, kernel);
    const auto c = static_cast<std::ptrdiff_t>(k / 2);
    for (std::size_t y = 0; y < h; ++y) {
      for (std::size_t x = 0; x < w; ++x) {
        double acc = 0.0;
        for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(k); ++i) {
          for (std::ptrdiff_t j = 0; j < static_cast<std::ptrdiff_t>(k); ++j) {
            const auto sx = static_cast<std::ptrdiff_t>(x) + j - c, sy = static_cast<std::ptrdiff_t>(y) + i - c;
            if (sx < 0 || sy < 0 || sx >= static_cast<std::ptrdiff_t>(w) || sy >= static_cast<std::ptrdiff_t>(h)) continue;
            acc += taps[static_cast<std::size_t>(i) * k + static_cast<std::size_t>(j)] *
                   image(static_cast<std::size_t>(sx), static_cast<std::size_t>(sy));
          }
        }
        worst = std::max(worst, std::abs(acc - fast.values[y * w + x]));
      }
    }

    // CNN path: one input channel, up to four filters.
    const std::size_t filters = 1 + gen() % 4;
    cnn::Tensor input({1, h, w}, std::vector<double>(image.pixels().begin(), image.pixels().end()));
    cnn::Tensor weights({filters, 1, 3, 3});
    cnn::Tensor bias({filters});
    for (double& v : weights.data) v = u(gen);
    for (double& v : bias.data) v = u(gen);
    const auto out = cnn::conv3x3_forward(input, weights, bias);
    for (std::size_t f = 0; f < filters; ++f) {
      for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) {
          double acc = bias[f];
          for (std::ptrdiff_t ky = 0; ky < 3; ++ky) {
            for (std::ptrdiff_t kx = 0; kx < 3; ++kx) {
              const auto sx = static_cast<std::ptrdiff_t>(x) + kx - 1, sy = static_cast<std::ptrdiff_t>(y) + ky - 1;
              if (sx < 0 || sy < 0 || sx >= static_cast<std::ptrdiff_t>(w) || sy >= static_cast<std::ptrdiff_t>(h)) continue;
              acc += weights[f * 9 + static_cast<std::size_t>(ky * 3 + kx)] *
                     input[static_cast<std::size_t>(sy) * w + static_cast<std::size_t>(sx)];
            }
          }
          worst = std::max(worst, std::abs(acc - out[(f * h + y) * w + x]));
        }
      }
    }
  }
  return {worst <= 1e-6, "max abs diff " + fmt("%.3e", worst) + " over 100 inputs"};
}

Outcome gradient_check() {
  double worst = 0.0;
  std::size_t params = 0, kinks = 0;
  for (int y = 0; y <= 1; ++y) {
    const auto r = test::gradient_check(test::random_model(8, 21), test::random_input(8, 22), y);
    worst = std::max(worst, r.max_relative_error);
    params = r.parameters;
    kinks += r.kink_crossings;
  }
  return {worst < 1e-4 && params >= 1000,
          "max rel err " + fmt("%.3e", worst) + " over " + std::to_string(params) + " parameters (" + std::to_string(kinks) + " probes straddle a kink)"};
}

struct TrainRun {
  CliResult cli;
  double seconds = 0.0;
};

TrainRun cli_train(const fs::path& work, const std::string& tag) {
  const auto t0 = std::chrono::steady_clock::now();
  auto r = run_cli({"train", "--seed", "7", "--epochs", "30", "--labels", (work / "corpus" / "labels.csv").string(),
                    "--out", (work / ("model_" + tag + ".bin")).string(), "--report",
                    (work / ("cnn_report_" + tag + ".json")).string()});
  return {std::move(r), seconds_since(t0)};
}

Outcome cnn_training(const fs::path& work) {
  const auto run = cli_train(work, "a");
  if (run.cli.code != 0) return {false, "train failed: " + run.cli.err};
  double train_acc = -1.0;
  std::istringstream lines(run.cli.out);
  for (std::string line; std::getline(lines, line);) {
    if (line.rfind("epoch\t30\t", 0) != 0) continue;
    train_acc = std::stod(line.substr(line.rfind('\t') + 1));
  }
  const auto report = report_from_json(slurp(work / "cnn_report_a.json"));
  const bool ok = train_acc >= 0.90 && report.accuracy >= 0.80 && run.seconds <= 300.0;
  return {ok, "train acc " + fmt("%.3f", train_acc) + " val acc " + fmt("%.3f", report.accuracy) + " in " +
                  fmt("%.1f", run.seconds) + " s"};
}

Outcome determinism(const fs::path& work) {
  const auto run = cli_train(work, "b");
  if (run.cli.code != 0) return {false, "train failed: " + run.cli.err};
  const bool model = test::read_bytes(work / "model_a.bin") == test::read_bytes(work / "model_b.bin");
  const bool report = slurp(work / "cnn_report_a.json") == slurp(work / "cnn_report_b.json");
  return {model && report, std::string("model bytes ") + (model ? "identical" : "differ") + ", report " +
                               (report ? "identical" : "differs")};
}

Outcome calibration_algebra() {
  const std::vector<double> blurry{10, 20}, sharp{100, 110, 120};
  const auto m = calibrate(blurry, sharp);
  const std::vector<double> b2{1, 3}, s2{7, 9};
  const auto sym = calibrate(b2, s2);
  const auto mid = calibrate(blurry, sharp, CentreWeighting::Midpoint);
  const bool ok = m.threshold == 72.0 && sym.threshold == 5.0 && mid.threshold == 62.5;
  return {ok, "threshold " + fmt("%.17g", m.threshold) + ", symmetric " + fmt("%.17g", sym.threshold) +
                  ", midpoint " + fmt("%.17g", mid.threshold)};
}

Outcome round_trips(const fs::path& work) {
  std::mt19937_64 gen(9);
  double worst = 0.0;
  for (int i = 0; i < 20; ++i) {
    const auto image = test::random_image(gen, 1 + gen() % 40, 1 + gen() % 40);
    save_pgm(image, work / "roundtrip.pgm");
    const auto back = load_image(work / "roundtrip.pgm");
    for (std::size_t k = 0; k < image.size(); ++k) worst = std::max(worst, std::abs(image.pixels()[k] - back.pixels()[k]));
  }
  const auto model = test::random_model(16, 4);
  cnn::save_model(model, work / "roundtrip.bin");
  const auto loaded = cnn::load_model(work / "roundtrip.bin");
  const bool model_ok = loaded == model && cnn::encode_model(loaded) == test::read_bytes(work / "roundtrip.bin");
  return {worst <= 1.0 / 510.0 && model_ok,
          "max pixel err " + fmt("%.3e", worst) + ", model " + (model_ok ? "bit-exact" : "differs")};
}

}  // namespace

int main(int argc, char** argv) {
  const fs::path work = argc > 1 ? fs::path(argv[1]) : fs::temp_directory_path() / "blurscope_acceptance";
  fs::remove_all(work);
  fs::create_directories(work);

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"table-1 oracle", table_one},
      {"table-2 oracle", table_two},
      {"laplacian pipeline", [&] { return laplacian_pipeline(work); }},
      {"blur monotonicity", blur_monotonicity},
      {"convolution oracle", convolution_oracle},
      {"gradient check", gradient_check},
      {"cnn training", [&] { return cnn_training(work); }},
      {"determinism", [&] { return determinism(work); }},
      {"calibration algebra", calibration_algebra},
      {"round-trips", [&] { return round_trips(work); }},
  };

  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::cout << (o.pass ? "PASS " : "FAIL ") << (i + 1) << " " << criteria[i].first << ": " << o.detail << std::endl;
  }
  std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria passed" << std::endl;
  return failed == 0 ? 0 : 1;
}
