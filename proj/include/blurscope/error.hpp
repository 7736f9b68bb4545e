#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace blurscope {

enum class ErrorCode {
  // imageio
  UnknownMagic,
  Truncated,
  BadHeader,
  BadSample,
  IoFailure,
  NonpositiveSigma,
  BadRange,
  DuplicatePath,
  BadCsv,
  // laplacian
  EvenKernel,
  EmptyInput,
  EmptyClass,
  InvertedCentres,
  BadModel,
  // cnn
  ShapeMismatch,
  OddExtent,
  SingleClassDataset,
  BadMagic,
  VersionMismatch,
  // eval
  EmptyDataset,
  LengthMismatch,
  NoPositives,
  NoNegatives,
  EmptyMatrix,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::UnknownMagic: return "UnknownMagic";
    case ErrorCode::Truncated: return "Truncated";
    case ErrorCode::BadHeader: return "BadHeader";
    case ErrorCode::BadSample: return "BadSample";
    case ErrorCode::IoFailure: return "IoFailure";
    case ErrorCode::NonpositiveSigma: return "NonpositiveSigma";
    case ErrorCode::BadRange: return "BadRange";
    case ErrorCode::DuplicatePath: return "DuplicatePath";
    case ErrorCode::BadCsv: return "BadCsv";
    case ErrorCode::EvenKernel: return "EvenKernel";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::EmptyClass: return "EmptyClass";
    case ErrorCode::InvertedCentres: return "InvertedCentres";
    case ErrorCode::BadModel: return "BadModel";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::OddExtent: return "OddExtent";
    case ErrorCode::SingleClassDataset: return "SingleClassDataset";
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::VersionMismatch: return "VersionMismatch";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::NoPositives: return "NoPositives";
    case ErrorCode::NoNegatives: return "NoNegatives";
    case ErrorCode::EmptyMatrix: return "EmptyMatrix";
  }
  return "Unknown";
}

/// The single exception type thrown by the library. Callers branch on code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code), message_(what) {}

  ErrorCode code() const noexcept { return code_; }
  /// what() without the code prefix, for rethrowing with added context.
  const std::string& message() const noexcept { return message_; }

 private:
  ErrorCode code_;
  std::string message_;
};

}  // namespace blurscope
