#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace wsbert {

enum class ErrorCode {
  kEmptyTarget,
  kUpstreamUnavailable,
  kCorruptCacheLine,
  kMissingFile,
  kSchemaMismatch,
  kUnknownTarget,
  kEmptySplit,
  kEmptyField,
  kBudgetImpossible,
  kShapeMismatch,
  kInvalidLayerCount,
  kLabelOutOfRange,
  kNonFiniteLoss,
  kLengthMismatch,
  kPartitionMismatch,
  kConfigInvalid,
  kInconsistentReports,
  kIo,
};

std::string_view ErrorCodeName(ErrorCode code);

// All toolkit failures are reported through this type; callers switch on
// code() rather than on distinct exception classes.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(ErrorCodeName(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace wsbert
