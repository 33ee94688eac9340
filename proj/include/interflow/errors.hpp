#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace interflow {

enum class ErrorCode {
  GrammarError,
  EmptyScript,
  SchemaError,
  GatewayError,
  BackendUnavailable,
  Timeout,
  UnknownId,
  IndexOutOfRange,
  OutOfOrder,
  EmptyBuffer,
  DimensionMismatch,
  UnknownStage,
  EmptyText,
  UnknownRequest,
  AlreadyFulfilled,
  InsufficientContext,
  NonMonotonicTime,
  ConfigError,
  CorruptLog,
  MalformedEvent,
  ParseError,
};

std::string_view to_string(ErrorCode code);

/// Base exception for every engine error. `location()` carries a line
/// number (script grammar, replay files) or a sequence number (event logs)
/// when one applies.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message,
        std::optional<std::int64_t> location = std::nullopt)
      : std::runtime_error(message), code_(code), location_(location) {}

  ErrorCode code() const noexcept { return code_; }
  std::optional<std::int64_t> location() const noexcept { return location_; }

 private:
  ErrorCode code_;
  std::optional<std::int64_t> location_;
};

}  // namespace interflow
