#include "wsbert/error.hpp"

namespace wsbert {

std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kEmptyTarget: return "EmptyTarget";
    case ErrorCode::kUpstreamUnavailable: return "UpstreamUnavailable";
    case ErrorCode::kCorruptCacheLine: return "CorruptCacheLine";
    case ErrorCode::kMissingFile: return "MissingFile";
    case ErrorCode::kSchemaMismatch: return "SchemaMismatch";
    case ErrorCode::kUnknownTarget: return "UnknownTarget";
    case ErrorCode::kEmptySplit: return "EmptySplit";
    case ErrorCode::kEmptyField: return "EmptyField";
    case ErrorCode::kBudgetImpossible: return "BudgetImpossible";
    case ErrorCode::kShapeMismatch: return "ShapeMismatch";
    case ErrorCode::kInvalidLayerCount: return "InvalidLayerCount";
    case ErrorCode::kLabelOutOfRange: return "LabelOutOfRange";
    case ErrorCode::kNonFiniteLoss: return "NonFiniteLoss";
    case ErrorCode::kLengthMismatch: return "LengthMismatch";
    case ErrorCode::kPartitionMismatch: return "PartitionMismatch";
    case ErrorCode::kConfigInvalid: return "ConfigInvalid";
    case ErrorCode::kInconsistentReports: return "InconsistentReports";
    case ErrorCode::kIo: return "IoError";
  }
  return "Unknown";
}

}  // namespace wsbert
