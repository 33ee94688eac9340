#include <doctest.h>

#include "interflow/errors.hpp"
#include "interflow/mock_backend.hpp"
#include "interflow/protocol.hpp"
#include "interflow/session.hpp"

using namespace interflow;
using nlohmann::json;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error thrown");
  return ErrorCode::ParseError;
}

ClientCommand decode(std::string_view text, const std::string& client = "") {
  return decode_client_message(text, client);
}

const char* kScript = "---\nplanned_minutes: 5\n---\n# A\n- Where do you live?\n- What do you do?\n";

}  // namespace

TEST_CASE("client messages decode to input events") {
  auto hello = decode(R"({"type": "hello", "protocol": 1})", "c7");
  CHECK(hello.kind == "client_connect");
  CHECK(hello.payload == json{{"client", "c7"}, {"protocol", 1}});

  auto bare = decode(R"({"start": 1, "end": 2, "speaker": "interviewee", "text": "hi"})");
  CHECK(bare.kind == "segment");
  CHECK(bare.payload["final"] == true);
  auto nested = decode(
      R"({"type": "segment", "segment": {"start": 1, "end": 2, "speaker": "interviewer", "text": "x", "final": false}})");
  CHECK(nested.payload["final"] == false);

  CHECK(decode(R"({"type": "manual_select", "question_id": "q2"})").payload["question_id"] == "q2");
  CHECK(decode(R"({"type": "reorder", "question_id": "q2", "index": 0})").payload["index"] == 0);
  CHECK(decode(R"({"type": "create_tag", "question_id": "q1", "text": "t"})").kind == "create_tag");
  CHECK(decode(R"({"type": "delete_tag", "tag_id": "tag-1"})").kind == "delete_tag");
  CHECK(decode(R"({"type": "request_summary"})").payload["focus_question"].is_null());
  CHECK(decode(R"({"type": "request_summary", "focus_question": "q1"})").payload["focus_question"] ==
        "q1");
  CHECK(decode(R"({"type": "hover_expand", "suggestion_id": "tag-2"})").kind == "hover_expand");
}

TEST_CASE("malformed messages are MalformedEvent") {
  for (const auto* text : {"", "{", "[]", R"({"type": 3})", R"({"type": "hello", "protocol": 2})",
                           R"({"type": "reorder", "question_id": "q1", "index": "0"})",
                           R"({"type": "create_tag", "question_id": "q1"})",
                           R"({"start": 2, "end": 1, "speaker": "interviewee", "text": "x"})",
                           R"({"type": "segment", "speaker": "nobody"})"}) {
    CHECK(code_of([&] { decode_client_message(std::string_view(text)); }) == ErrorCode::MalformedEvent);
  }
}

TEST_CASE("hello is answered with a snapshot for that client only") {
  auto s = Session::create(kScript, Config{}, make_gateway(Config{}));
  auto res = s->handle_client_message("c1", R"({"type": "hello"})", 0.5);
  bool snapshot = false;
  for (const auto& m : res.messages) {
    CHECK(m.message["protocol"] == kProtocolVersion);
    if (m.message["type"] == "snapshot") {
      snapshot = true;
      CHECK(m.client == std::optional<std::string>("c1"));
      CHECK(m.message["state"]["script"].is_object());
    }
  }
  CHECK(snapshot);
}

TEST_CASE("every logged event is broadcast as a delta except ticks") {
  auto s = Session::create(kScript, Config{}, make_gateway(Config{}));
  auto res = s->handle_client_message("c1", R"({"type": "manual_select", "question_id": "q2"})", 1);
  std::size_t deltas = 0;
  for (const auto& m : res.messages) {
    if (m.message["type"] != "delta") continue;
    CHECK_FALSE(m.client);
    CHECK(m.message["event"] == to_json(res.events[deltas]));
    ++deltas;
  }
  CHECK(deltas == res.events.size());
  CHECK(res.state_changed);
  auto tick = s->apply("tick", json::object(), 2);
  for (const auto& m : tick.messages) CHECK(m.message["event"]["kind"] != "tick");
}

TEST_CASE("snapshot carries the documented top-level fields") {
  auto s = Session::create(kScript, Config{}, make_gateway(Config{}));
  auto snap = s->snapshot();
  for (const auto* key : {"protocol", "seq", "at", "script", "highlight", "suspended_until", "timer", "tags",
                          "summary_requests", "pending_candidates", "suggestions", "agent_enabled", "config"})
    CHECK(snap.contains(key));
  CHECK(snap["highlight"]["question_id"].is_null());
  CHECK(snap["script"]["stages"][0]["questions"][0]["status"] == "unvisited");
}
