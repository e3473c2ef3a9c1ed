#include "seqlab/error.hpp"

namespace seqlab {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::MalformedLine: return "MalformedLine";
    case ErrorCode::SchemaViolation: return "SchemaViolation";
    case ErrorCode::UnsortedEvents: return "UnsortedEvents";
    case ErrorCode::UnknownPlayer: return "UnknownPlayer";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::NoPositions: return "NoPositions";
    case ErrorCode::PlayerAbsent: return "PlayerAbsent";
    case ErrorCode::EmptyCorpus: return "EmptyCorpus";
    case ErrorCode::EmptyTable: return "EmptyTable";
    case ErrorCode::EmptySequence: return "EmptySequence";
    case ErrorCode::BadK: return "BadK";
    case ErrorCode::DuplicateLabel: return "DuplicateLabel";
    case ErrorCode::DuplicateTag: return "DuplicateTag";
    case ErrorCode::Malformed: return "Malformed";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::Empty: return "Empty";
    case ErrorCode::UnknownLabel: return "UnknownLabel";
    case ErrorCode::MissingBoundaries: return "MissingBoundaries";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::Conflict: return "Conflict";
    case ErrorCode::NotFound: return "NotFound";
    case ErrorCode::StorageFailure: return "StorageFailure";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message,
             std::optional<std::size_t> index)
    : std::runtime_error(std::string(to_string(code)) + ": " + message),
      code_(code),
      index_(index) {}

}  // namespace seqlab
