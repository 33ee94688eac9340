#include "interflow/protocol.hpp"

#include "interflow/errors.hpp"
#include "interflow/session.hpp"
#include "interflow/transcript.hpp"

namespace interflow {

using nlohmann::json;

namespace {

std::string required_string(const json& m, const char* key) {
  auto it = m.find(key);
  if (it == m.end() || !it->is_string())
    throw Error(ErrorCode::MalformedEvent, std::string("field '") + key + "' must be a string");
  return it->get<std::string>();
}

}  // namespace

ClientCommand decode_client_message(const json& m, const std::string& client) {
  if (!m.is_object()) throw Error(ErrorCode::MalformedEvent, "message must be an object");
  std::string type = m.contains("type") ? required_string(m, "type") : "segment";

  if (type == "hello") {
    int version = m.value("protocol", kProtocolVersion);
    if (version != kProtocolVersion)
      throw Error(ErrorCode::MalformedEvent, "unsupported protocol version " + std::to_string(version));
    return {"client_connect", {{"client", client}, {"protocol", version}}};
  }
  if (type == "segment") {
    json body = m.contains("segment") ? m.at("segment") : m;
    return {"segment", to_json(segment_from_json(body))};
  }
  if (type == "manual_select") return {"manual_select", {{"question_id", required_string(m, "question_id")}}};
  if (type == "reorder") {
    auto it = m.find("index");
    if (it == m.end() || !it->is_number_unsigned())
      throw Error(ErrorCode::MalformedEvent, "field 'index' must be a non-negative integer");
    return {"reorder", {{"question_id", required_string(m, "question_id")}, {"index", it->get<std::size_t>()}}};
  }
  if (type == "create_tag")
    return {"create_tag", {{"question_id", required_string(m, "question_id")}, {"text", required_string(m, "text")}}};
  if (type == "delete_tag") return {"delete_tag", {{"tag_id", required_string(m, "tag_id")}}};
  if (type == "request_summary") {
    json payload = {{"focus_question", nullptr}};
    if (auto it = m.find("focus_question"); it != m.end() && !it->is_null())
      payload["focus_question"] = required_string(m, "focus_question");
    return {"request_summary", payload};
  }
  if (type == "hover_expand") return {"hover_expand", {{"suggestion_id", required_string(m, "suggestion_id")}}};
  throw Error(ErrorCode::MalformedEvent, "unknown message type '" + type + "'");
}

ClientCommand decode_client_message(std::string_view text, const std::string& client) {
  json m;
  try {
    m = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::MalformedEvent, std::string("invalid JSON: ") + e.what());
  }
  return decode_client_message(m, client);
}

ApplyResult Session::handle_client_message(const std::string& client, std::string_view text, Seconds t) {
  ClientCommand cmd;
  try {
    cmd = decode_client_message(text, client);
  } catch (const Error& e) {
    return apply("rejected",
                 {{"client", client}, {"code", to_string(e.code())}, {"message", e.what()}}, t, client);
  }
  return apply(cmd.kind, cmd.payload, t, client);
}

}  // namespace interflow
