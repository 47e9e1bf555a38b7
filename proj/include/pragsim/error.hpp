#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace pragsim {

/// Broad failure class; maps one-to-one onto CLI exit codes.
enum class ErrorKind {
  Usage,        // exit 2
  Validation,   // exit 3
  Computation,  // exit 4
};

/// Named failure reasons. Every dataset invariant has its own code so a
/// mutated file can be traced back to the rule it broke.
enum class ErrorCode {
  // dataset / file validation
  MissingFile,
  InvalidManifest,
  LayerSizeMismatch,
  NonFiniteValue,
  DuplicateUtteranceId,
  RowIndexNotBijection,
  InvalidDuration,
  EmptyDataset,
  EmptySpeakerId,
  InvalidLayerIndex,
  WriteFailed,
  EmptySelection,
  // configuration / arguments
  InvalidMask,
  InvalidConfig,
  UnknownUtterance,
  UnknownSpeaker,
  MissingLabel,
  InconsistentSpeakerLabel,
  InvalidArgument,
  MalformedJudgments,
  MalformedCsv,
  // numerical
  ZeroNorm,
  LengthMismatch,
  DegenerateInput,
  PoolTooSmall,
};

std::string_view to_string(ErrorCode code) noexcept;
ErrorKind kind_of(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }
  ErrorKind kind() const noexcept { return kind_of(code_); }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace pragsim
