#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace covis {

enum class ErrorCode {
  kInvalidArgument,
  kInsufficientData,
  kDegenerateConfiguration,
  kEstimationFailed,
  kMatcherUnavailable,
  kProtocolError,
  kTimeout,
  kStageFailed,
  kUnsupportedMetric,
  kInfeasibleScene,
  kNotImplemented,
  kIo,
  kConfig,
};

std::string_view to_string(ErrorCode code);

// Every failure raised by the library carries one of the codes above so that
// callers (the benchmark loop, the CLI exit-code mapping) can branch on class.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code),
        message_(message) {}

  ErrorCode code() const noexcept { return code_; }
  // The message without the code prefix.
  const std::string& message() const noexcept { return message_; }

 private:
  ErrorCode code_;
  std::string message_;
};

}  // namespace covis
