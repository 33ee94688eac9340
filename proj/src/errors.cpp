#include "interflow/errors.hpp"

namespace interflow {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::GrammarError: return "GrammarError";
    case ErrorCode::EmptyScript: return "EmptyScript";
    case ErrorCode::SchemaError: return "SchemaError";
    case ErrorCode::GatewayError: return "GatewayError";
    case ErrorCode::BackendUnavailable: return "BackendUnavailable";
    case ErrorCode::Timeout: return "Timeout";
    case ErrorCode::UnknownId: return "UnknownId";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::OutOfOrder: return "OutOfOrder";
    case ErrorCode::EmptyBuffer: return "EmptyBuffer";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::UnknownStage: return "UnknownStage";
    case ErrorCode::EmptyText: return "EmptyText";
    case ErrorCode::UnknownRequest: return "UnknownRequest";
    case ErrorCode::AlreadyFulfilled: return "AlreadyFulfilled";
    case ErrorCode::InsufficientContext: return "InsufficientContext";
    case ErrorCode::NonMonotonicTime: return "NonMonotonicTime";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::CorruptLog: return "CorruptLog";
    case ErrorCode::MalformedEvent: return "MalformedEvent";
    case ErrorCode::ParseError: return "ParseError";
  }
  return "Unknown";
}

}  // namespace interflow
