#include "provgraph/error.hpp"

namespace provgraph {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kMalformedInput: return "MalformedInput";
    case ErrorCode::kDanglingEndpoint: return "DanglingEndpoint";
    case ErrorCode::kCorruptPayload: return "CorruptPayload";
    case ErrorCode::kIdCollision: return "IdCollision";
    case ErrorCode::kUnknownRelation: return "UnknownRelation";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kBreakdown: return "BreakdownError";
    case ErrorCode::kInvalidBlock: return "InvalidBlock";
    case ErrorCode::kSchemaMismatch: return "SchemaMismatch";
    case ErrorCode::kNonFiniteLoss: return "NonFiniteLoss";
    case ErrorCode::kInvalidFoldCount: return "InvalidFoldCount";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kIOFailure: return "IOFailure";
    case ErrorCode::kManifestMismatch: return "ManifestMismatch";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message),
      code_(code) {}

CorruptPayload::CorruptPayload(const std::string& message, std::size_t offset)
    : Error(ErrorCode::kCorruptPayload,
            message + " (at byte offset " + std::to_string(offset) + ")"),
      offset_(offset) {}

}  // namespace provgraph
