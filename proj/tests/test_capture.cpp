#include <doctest.h>

#include "interflow/capture.hpp"
#include "interflow/errors.hpp"

using namespace interflow;

namespace {

ScriptHierarchy sample() { return parse_structured_script("# A\n- First?\n- Second?\n"); }

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error thrown");
  return ErrorCode::ParseError;
}

}  // namespace

TEST_CASE("manual tags need a known question and some text") {
  Capture c;
  auto h = sample();
  const auto& t = c.create_manual_tag(h, "q2", "likes the bus", 3.0);
  CHECK(t.kind == TagKind::Manual);
  CHECK(t.question_id == std::optional<std::string>("q2"));
  CHECK(code_of([&] { c.create_manual_tag(h, "q9", "x", 4.0); }) == ErrorCode::UnknownId);
  CHECK(code_of([&] { c.create_manual_tag(h, "q1", "  ", 4.0); }) == ErrorCode::EmptyText);
  CHECK(c.tags().size() == 1);
}

TEST_CASE("summary window is frozen at issue time") {
  Capture c;
  TranscriptIngest in;
  CHECK(code_of([&] { c.request_summary(in, 30, std::nullopt, 0); }) == ErrorCode::EmptyBuffer);
  in.push_segment({0, 4, Speaker::Interviewee, "I moved to the city last year.", true});
  const auto id = c.request_summary(in, 30, std::string("q1"), 5).id;
  auto before = c.find_request(id)->window;
  in.push_segment({6, 9, Speaker::Interviewee, "And I bought a bike.", true});
  in.tick(100);
  CHECK(c.find_request(id)->window == before);
  CHECK(before.segments.size() == 1);
}

TEST_CASE("fulfilled requests yield one tag, failed ones none") {
  Capture c;
  TranscriptIngest in;
  in.push_segment({0, 4, Speaker::Interviewee, "words here.", true});
  auto a = c.request_summary(in, 30, std::string("q1"), 5).id;
  auto b = c.request_summary(in, 30, std::nullopt, 6).id;
  const auto& tag = c.fulfill_summary(a, "moved to city for work", 8);
  CHECK(tag.kind == TagKind::Summary);
  CHECK(tag.question_id == std::optional<std::string>("q1"));
  CHECK_FALSE(tag.over_limit);
  c.fail_summary(b, "Timeout", 9);
  CHECK(c.tags().size() == 1);
  CHECK(c.find_request(b)->state == RequestState::Failed);
  CHECK(code_of([&] { c.fulfill_summary(a, "again", 10); }) == ErrorCode::AlreadyFulfilled);
  CHECK(code_of([&] { c.fail_summary(b, "x", 10); }) == ErrorCode::AlreadyFulfilled);
  CHECK(code_of([&] { c.fulfill_summary("sum-99", "x", 10); }) == ErrorCode::UnknownRequest);
}

TEST_CASE("summaries over seven words are flagged, not truncated") {
  Capture c;
  TranscriptIngest in;
  in.push_segment({0, 4, Speaker::Interviewee, "words here.", true});
  auto a = c.request_summary(in, 30, std::nullopt, 5).id;
  auto b = c.request_summary(in, 30, std::nullopt, 5).id;
  CHECK_FALSE(c.fulfill_summary(a, "one two three four five six seven", 6).over_limit);
  const auto& long_tag = c.fulfill_summary(b, "one two three four five six seven eight", 6);
  CHECK(long_tag.over_limit);
  CHECK(long_tag.text == "one two three four five six seven eight");
}

TEST_CASE("deletion leaves a tombstone") {
  Capture c;
  auto h = sample();
  auto id = c.create_manual_tag(h, "q1", "note", 1).id;
  c.add_suggestion(std::nullopt, SituationCode::Hesitation, "hesitates", 2);
  c.delete_tag(id);
  CHECK(c.tags().size() == 2);
  CHECK(c.find_tag(id)->deleted);
  CHECK(to_json(*c.find_tag(id))["deleted"] == true);
  CHECK(to_json(c.tags()[1])["code"] == "1.2");
  CHECK(code_of([&] { c.delete_tag("nope"); }) == ErrorCode::UnknownId);
}
