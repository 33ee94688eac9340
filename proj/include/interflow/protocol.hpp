#pragma once

#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

namespace interflow {

/// A client message translated into a session input event.
struct ClientCommand {
  std::string kind;
  nlohmann::json payload;
};

/// Decodes one text frame of protocol version 1. Segment records may omit
/// the `type` field. Throws MalformedEvent.
ClientCommand decode_client_message(std::string_view text, const std::string& client = "");
ClientCommand decode_client_message(const nlohmann::json& message, const std::string& client = "");

}  // namespace interflow
