#include "covis/error.hpp"

namespace covis {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid-argument";
    case ErrorCode::kInsufficientData: return "insufficient-data";
    case ErrorCode::kDegenerateConfiguration: return "degenerate-configuration";
    case ErrorCode::kEstimationFailed: return "estimation-failed";
    case ErrorCode::kMatcherUnavailable: return "matcher-unavailable";
    case ErrorCode::kProtocolError: return "protocol-error";
    case ErrorCode::kTimeout: return "timeout";
    case ErrorCode::kStageFailed: return "stage-failed";
    case ErrorCode::kUnsupportedMetric: return "unsupported-metric";
    case ErrorCode::kInfeasibleScene: return "infeasible-scene";
    case ErrorCode::kNotImplemented: return "not-implemented";
    case ErrorCode::kIo: return "io-error";
    case ErrorCode::kConfig: return "config-error";
  }
  return "unknown";
}

}  // namespace covis
