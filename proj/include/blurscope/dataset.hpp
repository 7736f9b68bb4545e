#pragma once

#include <algorithm>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "blurscope/error.hpp"

namespace blurscope {

enum class Label { Blurry, Sharp };

constexpr std::string_view to_string(Label label) noexcept {
  return label == Label::Blurry ? "blurry" : "sharp";
}

inline Label parse_label(std::string_view text) {
  if (text == "blurry") return Label::Blurry;
  if (text == "sharp") return Label::Sharp;
  throw Error(ErrorCode::BadCsv, "unknown label '" + std::string(text) + "'");
}

/// Positive class is Blurry.
constexpr int label_target(Label label) noexcept { return label == Label::Blurry ? 1 : 0; }

struct LabeledSample {
  std::filesystem::path path;
  Label label = Label::Sharp;

  bool operator==(const LabeledSample&) const = default;
};

/// Ordered sample list with unique paths.
class LabeledDataset {
 public:
  LabeledDataset() = default;

  explicit LabeledDataset(std::vector<LabeledSample> samples) {
    samples_.reserve(samples.size());
    for (auto& s : samples) add(std::move(s));
  }

  void add(LabeledSample sample) {
    const std::string key = sample.path.lexically_normal().string();
    if (!keys_.insert(key).second) {
      throw Error(ErrorCode::DuplicatePath, "duplicate dataset path " + key);
    }
    samples_.push_back(std::move(sample));
  }

  const std::vector<LabeledSample>& samples() const noexcept { return samples_; }
  std::size_t size() const noexcept { return samples_.size(); }
  bool empty() const noexcept { return samples_.empty(); }
  const LabeledSample& operator[](std::size_t i) const { return samples_[i]; }
  auto begin() const noexcept { return samples_.begin(); }
  auto end() const noexcept { return samples_.end(); }

  std::size_t count(Label label) const {
    return static_cast<std::size_t>(std::count_if(
        samples_.begin(), samples_.end(), [&](const LabeledSample& s) { return s.label == label; }));
  }

  bool operator==(const LabeledDataset& other) const { return samples_ == other.samples_; }

 private:
  std::vector<LabeledSample> samples_;
  std::unordered_set<std::string> keys_;
};

/// Reads a "path,label" CSV. Relative paths resolve against the CSV's directory.
inline LabeledDataset read_labels_csv(const std::filesystem::path& csv_path) {
  std::ifstream in(csv_path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoFailure, csv_path.string() + ": cannot open labels CSV");

  const std::filesystem::path base = csv_path.parent_path();
  LabeledDataset dataset;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line_no == 1) {
      if (line != "path,label") {
        throw Error(ErrorCode::BadCsv, csv_path.string() + ": header must be 'path,label'");
      }
      continue;
    }
    if (line.empty()) continue;
    const auto comma = line.rfind(',');
    if (comma == std::string::npos || comma == 0) {
      throw Error(ErrorCode::BadCsv, csv_path.string() + ":" + std::to_string(line_no) + ": malformed record");
    }
    std::filesystem::path p = line.substr(0, comma);
    if (p.is_relative()) p = base / p;
    try {
      dataset.add({p, parse_label(std::string_view(line).substr(comma + 1))});
    } catch (const Error& e) {
      throw Error(e.code(), csv_path.string() + ":" + std::to_string(line_no) + ": " + e.message());
    }
  }
  if (line_no == 0) throw Error(ErrorCode::BadCsv, csv_path.string() + ": empty file");
  return dataset;
}

/// Writes a labels CSV with LF endings; paths are written relative to the CSV's directory.
inline void write_labels_csv(const LabeledDataset& dataset, const std::filesystem::path& csv_path) {
  std::ofstream out(csv_path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoFailure, csv_path.string() + ": cannot open for writing");
  const std::filesystem::path base = csv_path.parent_path();
  out << "path,label\n";
  for (const auto& s : dataset) {
    std::filesystem::path rel = s.path.is_absolute() || !base.empty() ? s.path.lexically_relative(base) : s.path;
    if (rel.empty()) rel = s.path;
    out << rel.generic_string() << ',' << to_string(s.label) << '\n';
  }
  if (!out) throw Error(ErrorCode::IoFailure, csv_path.string() + ": write failed");
}

}  // namespace blurscope
