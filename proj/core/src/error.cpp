#include "agegloh/error.hpp"

namespace agegloh {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::MissingFile: return "MissingFile";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::MalformedHeader: return "MalformedHeader";
    case ErrorCode::MalformedPixelData: return "MalformedPixelData";
    case ErrorCode::TruncatedPixelData: return "TruncatedPixelData";
    case ErrorCode::UnsupportedMaxval: return "UnsupportedMaxval";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::InvalidParams: return "InvalidParams";
    case ErrorCode::ImageTooSmall: return "ImageTooSmall";
    case ErrorCode::PatchOutOfBounds: return "PatchOutOfBounds";
    case ErrorCode::NegativeEntry: return "NegativeEntry";
    case ErrorCode::MalformedFile: return "MalformedFile";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::NegativeLambda: return "NegativeLambda";
    case ErrorCode::NonFiniteEncountered: return "NonFiniteEncountered";
    case ErrorCode::BudgetOutOfRange: return "BudgetOutOfRange";
    case ErrorCode::SingularSystem: return "SingularSystem";
    case ErrorCode::GridEmpty: return "GridEmpty";
    case ErrorCode::TooFewSamples: return "TooFewSamples";
    case ErrorCode::UnknownTask: return "UnknownTask";
    case ErrorCode::FeatureTooShort: return "FeatureTooShort";
    case ErrorCode::MalformedRow: return "MalformedRow";
    case ErrorCode::DuplicatePath: return "DuplicatePath";
    case ErrorCode::SinglePerson: return "SinglePerson";
    case ErrorCode::EmptyTask: return "EmptyTask";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::Empty: return "Empty";
    case ErrorCode::RowCountMismatch: return "RowCountMismatch";
    case ErrorCode::InvalidSpec: return "InvalidSpec";
  }
  return "Unknown";
}

}  // namespace agegloh
