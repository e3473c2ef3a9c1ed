#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace seqlab {

enum class ErrorCode {
  MalformedLine,
  SchemaViolation,
  UnsortedEvents,
  UnknownPlayer,
  InvalidConfig,
  NoPositions,
  PlayerAbsent,
  EmptyCorpus,
  EmptyTable,
  EmptySequence,
  BadK,
  DuplicateLabel,
  DuplicateTag,
  Malformed,
  LengthMismatch,
  Empty,
  UnknownLabel,
  MissingBoundaries,
  InvalidArgument,
  Conflict,
  NotFound,
  StorageFailure,
};

std::string_view to_string(ErrorCode code);

// Every failure raised by the library. `index` carries the offending line
// number, event index or similar position when one exists.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message,
        std::optional<std::size_t> index = std::nullopt);

  ErrorCode code() const noexcept { return code_; }
  std::optional<std::size_t> index() const noexcept { return index_; }

 private:
  ErrorCode code_;
  std::optional<std::size_t> index_;
};

}  // namespace seqlab
