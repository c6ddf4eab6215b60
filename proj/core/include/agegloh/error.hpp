#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace agegloh {

enum class ErrorCode {
  MissingFile,
  IoError,
  MalformedHeader,
  MalformedPixelData,
  TruncatedPixelData,
  UnsupportedMaxval,
  DimensionMismatch,
  InvalidParams,
  ImageTooSmall,
  PatchOutOfBounds,
  NegativeEntry,
  MalformedFile,
  ShapeMismatch,
  NegativeLambda,
  NonFiniteEncountered,
  BudgetOutOfRange,
  SingularSystem,
  GridEmpty,
  TooFewSamples,
  UnknownTask,
  FeatureTooShort,
  MalformedRow,
  DuplicatePath,
  SinglePerson,
  EmptyTask,
  LengthMismatch,
  Empty,
  RowCountMismatch,
  InvalidSpec,
};

std::string_view to_string(ErrorCode code) noexcept;

// Every failure in the library surfaces as this exception; `code()` is the
// machine-readable part, `what()` the human detail.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail)
      : std::runtime_error(detail), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace agegloh
