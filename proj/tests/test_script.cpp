#include <doctest.h>

#include <algorithm>
#include <random>

#include "interflow/config.hpp"
#include "interflow/errors.hpp"
#include "interflow/gateway.hpp"
#include "interflow/mock_backend.hpp"
#include "interflow/script.hpp"

using namespace interflow;

namespace {

const char* kScript = R"(---
research_question: How do people plan trips?
background: Pilot study.
planned_minutes: 30
---
# Warm-up
> Get comfortable.
- How often do you travel?
  - For work or leisure?
- Where did you go last?

# Planning
- How do you pick a hotel?
  - Do reviews matter?
  - What about price?
)";

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

TEST_CASE("grammar builds the hierarchy with display-order ids") {
  auto h = parse_structured_script(kScript);
  CHECK(h.meta().research_question == "How do people plan trips?");
  CHECK(h.meta().planned_minutes == 30.0);
  REQUIRE(h.stages().size() == 2);
  CHECK(h.stages()[0].intro == std::optional<std::string>("Get comfortable."));
  CHECK(h.question_count() == 6);
  CHECK(h.ordered_ids() == std::vector<std::string>{"q1", "q2", "q3", "q4", "q5", "q6"});
  CHECK(h.question("q2").kind == QuestionKind::Sub);
  CHECK(h.question("q2").parent == std::optional<std::string>("q1"));
  CHECK(h.stage_of("q6") == 1);
  CHECK_FALSE(h.ongoing());
}

TEST_CASE("grammar errors carry the line number") {
  try {
    parse_structured_script("# A\n- ok\n  weird line\n");
    FAIL("expected GrammarError");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::GrammarError);
    CHECK(e.location() == 3);
  }
  CHECK(code_of([] { parse_structured_script("- orphan\n"); }) == ErrorCode::GrammarError);
  CHECK(code_of([] { parse_structured_script("# A\n# B\n- q\n"); }) == ErrorCode::GrammarError);
  CHECK(code_of([] { parse_structured_script("# A\n- q\n# A\n- r\n"); }) == ErrorCode::GrammarError);
  CHECK(code_of([] { parse_structured_script("   \n\n"); }) == ErrorCode::EmptyScript);
}

TEST_CASE("front matter line numbers count toward body errors") {
  try {
    parse_structured_script("---\nplanned_minutes: 5\n---\n# A\n?? nope\n");
    FAIL("expected GrammarError");
  } catch (const Error& e) {
    CHECK(e.location() == 5);
  }
}

TEST_CASE("serialize then parse is the identity") {
  auto h = parse_structured_script(kScript);
  auto again = parse_structured_script(serialize_script(h));
  CHECK(again == h);
  CHECK(serialize_script(again) == serialize_script(h));
}

TEST_CASE("only one question is ongoing and the previous one becomes visited") {
  auto h = parse_structured_script(kScript);
  auto c1 = h.set_status("q1", QuestionStatus::Ongoing, StatusSource::Manual);
  CHECK(c1.changed);
  CHECK_FALSE(c1.displaced);
  auto c2 = h.set_status("q6", QuestionStatus::Ongoing, StatusSource::Auto);
  CHECK(c2.displaced == std::optional<std::string>("q1"));
  CHECK(h.question("q1").status == QuestionStatus::Visited);
  CHECK(h.ongoing() == std::optional<std::string>("q6"));
  // Circling back to a visited question is allowed.
  h.set_status("q1", QuestionStatus::Ongoing, StatusSource::Manual);
  CHECK(h.question("q6").status == QuestionStatus::Visited);
  CHECK(h.ongoing() == std::optional<std::string>("q1"));
  CHECK(code_of([&] { h.set_status("q99", QuestionStatus::Ongoing, StatusSource::Manual); }) ==
        ErrorCode::UnknownId);
}

TEST_CASE("reorder keeps subquestions with their parent") {
  auto h = parse_structured_script(kScript);
  h.reorder("q3", 0);
  CHECK(h.ordered_ids() == std::vector<std::string>{"q3", "q1", "q2", "q4", "q5", "q6"});
  h.reorder("q6", 0);
  CHECK(h.ordered_ids() == std::vector<std::string>{"q3", "q1", "q2", "q4", "q6", "q5"});
  CHECK(h.question("q6").parent == std::optional<std::string>("q4"));
  CHECK(code_of([&] { h.reorder("q1", 2); }) == ErrorCode::IndexOutOfRange);
  CHECK(code_of([&] { h.reorder("nope", 0); }) == ErrorCode::UnknownId);
}

TEST_CASE("random reorders and status changes preserve ids, links and the ongoing bound") {
  std::mt19937_64 rng(7);
  auto h = parse_structured_script(kScript);
  auto ids = h.ordered_ids();
  auto sorted = ids;
  std::sort(sorted.begin(), sorted.end());
  for (int step = 0; step < 2000; ++step) {
    const auto& id = ids[rng() % ids.size()];
    if (rng() % 2) {
      auto ref = h.locate(id);
      const auto& stage = h.stages()[ref.stage];
      std::size_t n = ref.sub ? stage.questions[ref.main].subquestions.size() : stage.questions.size();
      h.reorder(id, rng() % n);
    } else {
      auto st = static_cast<QuestionStatus>(rng() % 3);
      h.set_status(id, st, StatusSource::Manual);
    }
    auto now = h.ordered_ids();
    std::sort(now.begin(), now.end());
    REQUIRE(now == sorted);
    std::size_t ongoing = 0;
    for (const auto& q : ids) {
      if (h.question(q).status == QuestionStatus::Ongoing) ++ongoing;
      if (h.question(q).kind == QuestionKind::Sub) REQUIRE(h.contains(*h.question(q).parent));
    }
    REQUIRE(ongoing <= 1);
  }
}

TEST_CASE("free-form scripts fall back to the gateway") {
  Config c;
  auto gateway = make_gateway(c);
  auto h = load_script("---\nplanned_minutes: 10\n---\nStage one: warm up.\n1. How are you today?\n2. What do you do?\n",
                       gateway.get());
  CHECK(h.question_count() >= 1);
  CHECK(h.meta().planned_minutes == 10.0);
  CHECK(code_of([] { load_script("no grammar here", nullptr); }) == ErrorCode::GrammarError);
}
