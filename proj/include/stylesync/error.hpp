#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace stylesync {

enum class ErrorKind {
  // corpus ingestion
  MalformedRecord,
  OrphanUtterance,
  CycleDetected,
  DuplicateId,
  TimestampOrder,
  // lexicon
  EmptyCategory,
  DuplicateCategoryName,
  InvalidEntry,
  TooManyCategories,
  // coordination / roles
  EmptyExchangeSet,
  NoDefinedSpeakers,
  UnknownScope,
  DeltasNotDetected,
  // statistics
  DegenerateSample,
  // synth
  InvalidConfig,
  CorpusTooLarge,
  // generic
  IoError,
};

inline const char* to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::MalformedRecord: return "MALFORMED_RECORD";
    case ErrorKind::OrphanUtterance: return "ORPHAN_UTTERANCE";
    case ErrorKind::CycleDetected: return "CYCLE_DETECTED";
    case ErrorKind::DuplicateId: return "DUPLICATE_ID";
    case ErrorKind::TimestampOrder: return "TIMESTAMP_ORDER";
    case ErrorKind::EmptyCategory: return "EMPTY_CATEGORY";
    case ErrorKind::DuplicateCategoryName: return "DUPLICATE_CATEGORY_NAME";
    case ErrorKind::InvalidEntry: return "INVALID_ENTRY";
    case ErrorKind::TooManyCategories: return "TOO_MANY_CATEGORIES";
    case ErrorKind::EmptyExchangeSet: return "EMPTY_EXCHANGE_SET";
    case ErrorKind::NoDefinedSpeakers: return "NO_DEFINED_SPEAKERS";
    case ErrorKind::UnknownScope: return "UNKNOWN_SCOPE";
    case ErrorKind::DeltasNotDetected: return "DELTAS_NOT_DETECTED";
    case ErrorKind::DegenerateSample: return "DEGENERATE_SAMPLE";
    case ErrorKind::InvalidConfig: return "INVALID_CONFIG";
    case ErrorKind::CorpusTooLarge: return "CORPUS_TOO_LARGE";
    case ErrorKind::IoError: return "IO_ERROR";
  }
  return "UNKNOWN";
}

// Data-level failure. `line` is 1-based when the error is tied to an input
// line, 0 otherwise.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string message, std::size_t line = 0)
      : std::runtime_error(format(kind, message, line)),
        kind_(kind),
        line_(line) {}

  ErrorKind kind() const { return kind_; }
  std::size_t line() const { return line_; }

 private:
  static std::string format(ErrorKind kind, const std::string& message,
                            std::size_t line) {
    std::string s = to_string(kind);
    if (line > 0) s += " at line " + std::to_string(line);
    if (!message.empty()) s += ": " + message;
    return s;
  }

  ErrorKind kind_;
  std::size_t line_;
};

}  // namespace stylesync
