#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <stdexcept>
#include <string>
#include <vector>

namespace qe {

using Scalar = double;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Word tokens after normalization. Tokens are never empty and never contain
// internal whitespace.
using TokenSeq = std::vector<std::string>;

enum class Split { Train, Dev, Test, Blind };

// The three fine-tuning input constructions, in the fixed feature order used
// by the ensemble.
enum class InputSetting { SrcMt = 0, Mt = 1, MtMt = 2 };

inline const char* to_string(InputSetting s) {
  switch (s) {
    case InputSetting::SrcMt: return "SRC_MT";
    case InputSetting::Mt: return "MT";
    case InputSetting::MtMt: return "MT_MT";
  }
  return "?";
}

inline const char* to_string(Split s) {
  switch (s) {
    case Split::Train: return "train";
    case Split::Dev: return "dev";
    case Split::Test: return "test";
    case Split::Blind: return "blind";
  }
  return "?";
}

enum class ErrorCode {
  LineCountMismatch,
  ParseError,
  MissingColumn,
  MissingPostEdit,
  NoCandidate,
  SettingMismatch,
  ShapeMismatch,
  LengthMismatch,
  EmptyBatch,
  EmptyInput,
  ConstantInput,
  NoLabels,
  TooFewRows,
  FoldTooSmall,
  NotFitted,
  NoRelevantPairs,
  TargetLangMismatch,
  ClientFailure,
  InvalidConfig,
  IoError,
};

inline const char* to_string(ErrorCode c) {
  switch (c) {
    case ErrorCode::LineCountMismatch: return "LineCountMismatch";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::MissingColumn: return "MissingColumn";
    case ErrorCode::MissingPostEdit: return "MissingPostEdit";
    case ErrorCode::NoCandidate: return "NoCandidate";
    case ErrorCode::SettingMismatch: return "SettingMismatch";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::EmptyBatch: return "EmptyBatch";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::ConstantInput: return "ConstantInput";
    case ErrorCode::NoLabels: return "NoLabels";
    case ErrorCode::TooFewRows: return "TooFewRows";
    case ErrorCode::FoldTooSmall: return "FoldTooSmall";
    case ErrorCode::NotFitted: return "NotFitted";
    case ErrorCode::NoRelevantPairs: return "NoRelevantPairs";
    case ErrorCode::TargetLangMismatch: return "TargetLangMismatch";
    case ErrorCode::ClientFailure: return "ClientFailure";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::IoError: return "IoError";
  }
  return "?";
}

// Data/usage errors carry a code so callers (and the CLI exit-code mapping)
// can dispatch without string matching.
class QEError : public std::runtime_error {
 public:
  QEError(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

struct LanguagePair {
  std::string source_lang;
  std::string target_lang;

  void validate() const {
    if (source_lang.empty() || target_lang.empty())
      throw QEError(ErrorCode::InvalidConfig, "language codes must be non-empty");
    if (source_lang == target_lang)
      throw QEError(ErrorCode::InvalidConfig, "language codes must be distinct: " + source_lang);
  }

  std::string name() const { return source_lang + "-" + target_lang; }

  bool operator==(const LanguagePair& other) const {
    return source_lang == other.source_lang && target_lang == other.target_lang;
  }
};

// Sentence-level label, always inside [0, 1]. TER scores above 1 are clamped
// so labels live in the same range as the sigmoid head's predictions.
struct HTERLabel {
  double value = 0.0;

  static HTERLabel clamped(double raw) {
    return HTERLabel{std::min(1.0, std::max(0.0, raw))};
  }
};

}  // namespace qe
