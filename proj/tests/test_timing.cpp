#include <doctest.h>

#include <random>

#include "interflow/errors.hpp"
#include "interflow/timing.hpp"

using namespace interflow;

TEST_CASE("stage clocks split wall time at stage switches") {
  TalkStats t({"a", "b", "c"}, 30, 0);
  t.enter_stage(1, 60);
  t.enter_stage(0, 90);
  auto v = t.snapshot(100);
  CHECK(v.stages[0].elapsed == 70'000'000);
  CHECK(v.stages[1].elapsed == 30'000'000);
  CHECK(v.stages[2].elapsed == 0);
  CHECK(v.overall_elapsed == 100'000'000);
  CHECK(v.current_stage == 0);
  CHECK_THROWS_AS(t.enter_stage(3, 100), Error);
}

TEST_CASE("shares are absent without speech and unknown speakers stay out of the ratio") {
  TalkStats t({"a"}, 10, 0);
  CHECK_FALSE(t.snapshot(1).stages[0].interviewer_share);
  t.record_speech({0, 3, Speaker::Unknown, "x", true});
  CHECK_FALSE(t.snapshot(3).stages[0].interviewer_share);
  t.record_speech({3, 4, Speaker::Interviewer, "x", true});
  t.record_speech({4, 7, Speaker::Interviewee, "x", true});
  t.record_speech({7, 9, Speaker::Interviewee, "x", false});
  auto s = t.snapshot(9).stages[0];
  CHECK(s.interviewer_share == 0.25);
  CHECK(s.interviewee_share == 0.75);
  CHECK(s.unknown == 3'000'000);
}

TEST_CASE("overlapping speech counts for both speakers") {
  TalkStats t({"a"}, 10, 0);
  t.record_speech({0, 4, Speaker::Interviewer, "x", true});
  t.record_speech({2, 4, Speaker::Interviewee, "x", true});
  auto s = t.snapshot(4).stages[0];
  CHECK(s.interviewer == 4'000'000);
  CHECK(s.interviewee == 2'000'000);
}

TEST_CASE("recent speech honours the cut-off and snapshots are pure") {
  TalkStats t({"a", "b"}, 10, 0);
  t.record_speech({0, 1, Speaker::Interviewer, "x", true});
  t.enter_stage(1, 5);
  t.record_speech({5, 8, Speaker::Interviewee, "x", true});
  auto v = t.snapshot(10, 4.0);
  REQUIRE(v.recent_speech.size() == 1);
  CHECK(v.recent_speech[0].stage == 1);
  CHECK(t.snapshot(10) == t.snapshot(10));
  CHECK(to_json(t.snapshot(10)).dump() == to_json(t.snapshot(10)).dump());
}

TEST_CASE("random diarized streams: exact totals and shares summing to one") {
  std::mt19937_64 rng(3);
  for (int round = 0; round < 300; ++round) {
    std::size_t stages = 1 + rng() % 4;
    std::vector<std::string> names;
    for (std::size_t i = 0; i < stages; ++i) names.push_back("s" + std::to_string(i));
    TalkStats t(names, 20, 0);
    std::vector<std::int64_t> er(stages), ee(stages);
    std::int64_t ms = 0;
    std::size_t cur = 0;
    for (int k = 0; k < 200; ++k) {
      if (rng() % 10 == 0) {
        cur = rng() % stages;
        t.enter_stage(cur, ms / 1000.0);
      }
      std::int64_t start = ms + static_cast<std::int64_t>(rng() % 2000);
      std::int64_t end = start + static_cast<std::int64_t>(rng() % 5000);
      auto who = static_cast<Speaker>(rng() % 3);
      t.record_speech({start / 1000.0, end / 1000.0, who, "w", true});
      if (who == Speaker::Interviewer) er[cur] += end - start;
      if (who == Speaker::Interviewee) ee[cur] += end - start;
      ms = end;
    }
    auto v = t.snapshot(ms / 1000.0);
    Micros sum_elapsed = 0;
    for (std::size_t i = 0; i < stages; ++i) {
      const auto& s = v.stages[i];
      REQUIRE(s.interviewer == er[i] * 1000);
      REQUIRE(s.interviewee == ee[i] * 1000);
      if (er[i] + ee[i] > 0) {
        REQUIRE(s.interviewer_share);
        REQUIRE(*s.interviewer_share + *s.interviewee_share == 1.0);
      } else {
        REQUIRE_FALSE(s.interviewer_share);
      }
      sum_elapsed += s.elapsed;
    }
    REQUIRE(sum_elapsed == v.overall_elapsed);
  }
}
