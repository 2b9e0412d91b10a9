#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace provgraph {

enum class ErrorCode {
  kMalformedInput,
  kDanglingEndpoint,
  kCorruptPayload,
  kIdCollision,
  kUnknownRelation,
  kDimensionMismatch,
  kBreakdown,
  kInvalidBlock,
  kSchemaMismatch,
  kNonFiniteLoss,
  kInvalidFoldCount,
  kInvalidArgument,
  kIOFailure,
  kManifestMismatch,
};

std::string_view to_string(ErrorCode code);

// Base class for every error raised by the library. The code lets callers
// (the CLI in particular) map failures onto exit statuses without string
// matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

class MalformedInput : public Error {
 public:
  explicit MalformedInput(const std::string& message)
      : Error(ErrorCode::kMalformedInput, message) {}
};

class CorruptPayload : public Error {
 public:
  CorruptPayload(const std::string& message, std::size_t offset);

  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

#define PROVGRAPH_DEFINE_ERROR(Name, Code)            \
  class Name : public Error {                         \
   public:                                            \
    explicit Name(const std::string& message)         \
        : Error(ErrorCode::Code, message) {}          \
  };

PROVGRAPH_DEFINE_ERROR(DanglingEndpoint, kDanglingEndpoint)
PROVGRAPH_DEFINE_ERROR(IdCollision, kIdCollision)
PROVGRAPH_DEFINE_ERROR(UnknownRelation, kUnknownRelation)
PROVGRAPH_DEFINE_ERROR(DimensionMismatch, kDimensionMismatch)
PROVGRAPH_DEFINE_ERROR(BreakdownError, kBreakdown)
PROVGRAPH_DEFINE_ERROR(InvalidBlock, kInvalidBlock)
PROVGRAPH_DEFINE_ERROR(SchemaMismatch, kSchemaMismatch)
PROVGRAPH_DEFINE_ERROR(NonFiniteLoss, kNonFiniteLoss)
PROVGRAPH_DEFINE_ERROR(InvalidFoldCount, kInvalidFoldCount)
PROVGRAPH_DEFINE_ERROR(InvalidArgument, kInvalidArgument)
PROVGRAPH_DEFINE_ERROR(IOFailure, kIOFailure)
PROVGRAPH_DEFINE_ERROR(ManifestMismatch, kManifestMismatch)

#undef PROVGRAPH_DEFINE_ERROR

}  // namespace provgraph
