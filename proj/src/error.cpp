#include "pragsim/error.hpp"

namespace pragsim {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::MissingFile: return "missing_file";
    case ErrorCode::InvalidManifest: return "invalid_manifest";
    case ErrorCode::LayerSizeMismatch: return "layer_size_mismatch";
    case ErrorCode::NonFiniteValue: return "non_finite_value";
    case ErrorCode::DuplicateUtteranceId: return "duplicate_utterance_id";
    case ErrorCode::RowIndexNotBijection: return "row_index_not_bijection";
    case ErrorCode::InvalidDuration: return "invalid_duration";
    case ErrorCode::EmptyDataset: return "empty_dataset";
    case ErrorCode::EmptySpeakerId: return "empty_speaker_id";
    case ErrorCode::InvalidLayerIndex: return "invalid_layer_index";
    case ErrorCode::WriteFailed: return "write_failed";
    case ErrorCode::EmptySelection: return "empty_selection";
    case ErrorCode::InvalidMask: return "invalid_mask";
    case ErrorCode::InvalidConfig: return "invalid_config";
    case ErrorCode::UnknownUtterance: return "unknown_utterance";
    case ErrorCode::UnknownSpeaker: return "unknown_speaker";
    case ErrorCode::MissingLabel: return "missing_label";
    case ErrorCode::InconsistentSpeakerLabel: return "inconsistent_speaker_label";
    case ErrorCode::InvalidArgument: return "invalid_argument";
    case ErrorCode::MalformedJudgments: return "malformed_judgments";
    case ErrorCode::MalformedCsv: return "malformed_csv";
    case ErrorCode::ZeroNorm: return "zero_norm";
    case ErrorCode::LengthMismatch: return "length_mismatch";
    case ErrorCode::DegenerateInput: return "degenerate_input";
    case ErrorCode::PoolTooSmall: return "pool_too_small";
  }
  return "unknown";
}

ErrorKind kind_of(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument:
    case ErrorCode::InvalidConfig:
      return ErrorKind::Usage;
    case ErrorCode::ZeroNorm:
    case ErrorCode::LengthMismatch:
    case ErrorCode::DegenerateInput:
    case ErrorCode::PoolTooSmall:
      return ErrorKind::Computation;
    default:
      return ErrorKind::Validation;
  }
}

}  // namespace pragsim
