#include <doctest.h>

#include <random>

#include "interflow/co_interviewer.hpp"
#include "interflow/errors.hpp"
#include "oracles.hpp"

using namespace interflow;

namespace {

SituationTag tag_at(double t, std::string excerpt = "x", SituationCode code = SituationCode::Hesitation) {
  return {std::move(excerpt), code, t, t - 1, t};
}

Candidate cand(std::uint64_t window, double ready, std::string excerpt = "x") {
  return {window, tag_at(ready, std::move(excerpt)), {}, ready};
}

}  // namespace

TEST_CASE("a gap of exactly ten seconds closes the window") {
  SuggestionAggregator a(10);
  CHECK_FALSE(a.add(tag_at(0.0), 0.0));
  CHECK_FALSE(a.add(tag_at(9.9), 9.9));
  auto closed = a.add(tag_at(19.9), 19.9);
  REQUIRE(closed);
  CHECK(closed->tags.size() == 2);
  CHECK(closed->id == 1);
  CHECK(closed->closed_at == 19.9);
  CHECK(a.open_window()->id == 2);
  CHECK_FALSE(a.tick(29.8));
  auto lone = a.tick(29.9);
  REQUIRE(lone);
  CHECK(lone->tags.size() == 1);
  CHECK_FALSE(a.has_open());
  CHECK_FALSE(a.flush(40));
}

TEST_CASE("arrivals must not go backwards") {
  SuggestionAggregator a;
  a.add(tag_at(5), 5);
  try {
    a.add(tag_at(4.9), 5);
    FAIL("expected NonMonotonicTime");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NonMonotonicTime);
  }
}

TEST_CASE("grouping matches the oracle with interleaved ticks") {
  std::mt19937_64 rng(21);
  for (int round = 0; round < 300; ++round) {
    std::vector<std::int64_t> tenths;
    std::int64_t t = 0;
    int n = static_cast<int>(rng() % 12);
    for (int i = 0; i < n; ++i) {
      std::int64_t step = (rng() % 3 == 0) ? 100 : static_cast<std::int64_t>(rng() % 250);
      t += step;
      tenths.push_back(t);
    }
    SuggestionAggregator a(10);
    std::vector<std::vector<std::int64_t>> got;
    auto take = [&](const std::optional<ClosedWindow>& w) {
      if (!w) return;
      got.emplace_back();
      for (const auto& tag : w->tags) got.back().push_back(std::llround(tag.arrival * 10));
    };
    std::int64_t now = 0;
    for (auto x : tenths) {
      while (now + 10 < x && rng() % 2) {
        now += 10;
        take(a.tick(now / 10.0));
      }
      now = x;
      take(a.add(tag_at(x / 10.0), x / 10.0));
    }
    take(a.flush(now / 10.0 + 1));
    REQUIRE(got == interflow::testing::oracle_groups(tenths, 100));
  }
}

TEST_CASE("candidate selection takes the best total and the earliest among ties") {
  std::vector<SituationTag> tags = {tag_at(1), tag_at(2), tag_at(3)};
  std::vector<CriterionScores> scores = {{3, 3, 3}, {5, 2, 2}, {4, 4, 4}};
  CHECK(select_candidate(tags, scores) == 2);
  scores[2] = {1, 1, 1};
  CHECK(select_candidate(tags, scores) == 0);
  std::vector<SituationTag> same = {tag_at(4), tag_at(4)};
  std::vector<CriterionScores> even = {{2, 2, 2}, {2, 2, 2}};
  CHECK(select_candidate(same, even) == 0);
  std::vector<CriterionScores> wrong = {{1, 1, 1}};
  CHECK_THROWS_AS(select_candidate(tags, wrong), Error);
}

TEST_CASE("one candidate per pause, newest window first, stale ones expire") {
  CandidateQueue q(120);
  q.push(cand(1, 10));
  q.push(cand(2, 20));
  q.push(cand(3, 30));
  CHECK(q.pop_for_pause(31)->window_id == 3);
  CHECK(q.pending().size() == 2);
  auto gone = q.expire(130);
  REQUIRE(gone.size() == 1);
  CHECK(gone[0].window_id == 1);
  CHECK(q.pop_for_pause(139.9)->window_id == 2);
  CHECK_FALSE(q.pop_for_pause(200));
}

TEST_CASE("token overlap and duplicate suppression") {
  CHECK(token_overlap("the budget was tight", "a tight budget") == 1.0);
  CHECK(token_overlap("budget travel", "budget") == 0.5);
  CHECK(token_overlap("", "anything") == 0.0);
  CoInterviewer agent({}, "rq", "bg", {});
  agent.add_note("budget was tight this year");
  CHECK(agent.is_duplicate("tight budget this year"));
  CHECK_FALSE(agent.is_duplicate("new apartment downtown"));
  agent.surface("tag-1", cand(1, 5, "new apartment downtown"));
  CHECK(agent.is_duplicate("downtown apartment"));
  CHECK(agent.find("tag-1"));
  CHECK_FALSE(agent.find("tag-2"));
}

TEST_CASE("forwarded notes and bounded history reach the observe context") {
  CoInterviewer::Options o;
  o.history_limit = 3;
  CoInterviewer agent(o, "rq", "bg", {"term"});
  for (int i = 0; i < 5; ++i) agent.remember_utterance("u" + std::to_string(i));
  agent.add_note("note");
  auto ctx = agent.context_for("interviewee", "now");
  CHECK(ctx.history == std::vector<std::string>{"u2", "u3", "u4"});
  CHECK(ctx.notes == std::vector<std::string>{"note"});
  CHECK(ctx.known_terms == std::vector<std::string>{"term"});
  CHECK(ctx.research_question == "rq");
  CHECK(agent.enabled());
  agent.disable();
  CHECK_FALSE(agent.enabled());
}

TEST_CASE("situation tags round trip through JSON") {
  auto t = tag_at(3.5, "vague", SituationCode::VagueGeneral);
  auto back = situation_tag_from_json(to_json(t));
  CHECK(back.excerpt == t.excerpt);
  CHECK(back.code == t.code);
  CHECK(back.arrival == t.arrival);
  CHECK_THROWS_AS(situation_tag_from_json({{"excerpt", "x"}, {"code", "9.9"}, {"arrival", 1}}), Error);
}
