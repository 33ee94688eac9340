#include <doctest.h>

#include <cmath>

#include "interflow/errors.hpp"
#include "interflow/gateway.hpp"
#include "interflow/mock_backend.hpp"

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

// Replies with a fixed sequence of raw outputs.
class Scripted : public Backend {
 public:
  explicit Scripted(std::vector<std::string> replies) : replies_(std::move(replies)) {}
  std::string name() const override { return "scripted"; }
  std::vector<Embedding> embed(const std::vector<std::string>& texts) override {
    return std::vector<Embedding>(texts.size(), Embedding{1.0, 0.0});
  }
  std::string complete(const CompletionRequest& r) override {
    prompts.push_back(r.prompt);
    return replies_.at(std::min(prompts.size() - 1, replies_.size() - 1));
  }
  std::vector<std::string> prompts;

 private:
  std::vector<std::string> replies_;
};

ObserveContext ctx_for(std::string utterance, std::vector<std::string> history = {}) {
  ObserveContext c;
  c.research_question = "How do people commute?";
  c.speaker = "interviewee";
  c.utterance = std::move(utterance);
  c.history = std::move(history);
  return c;
}

}  // namespace

TEST_CASE("vector helpers") {
  std::vector<double> a = {3, 4}, b = {4, 3}, z = {0, 0};
  CHECK(norm(a) == 5.0);
  CHECK(cosine(a, b) == doctest::Approx(24.0 / 25.0));
  CHECK(cosine(a, z) == 0.0);
  std::vector<double> c = {1, 2, 3};
  CHECK(code_of([&] { cosine(a, c); }) == ErrorCode::DimensionMismatch);
  Embedding v = {3, 4};
  normalize(v);
  CHECK(norm(v) == doctest::Approx(1.0));
}

TEST_CASE("rendering fills every slot or refuses") {
  PromptTemplate t{TemplateId::Summary, {{"transcript", "A: hi"}, {"focus", ""}}};
  auto text = render(t);
  CHECK(text.find("A: hi") != std::string::npos);
  CHECK(text.find("${") == std::string::npos);
  PromptTemplate missing{TemplateId::Summary, {{"focus", ""}}};
  CHECK(code_of([&] { render(missing); }) == ErrorCode::ConfigError);
  for (auto id : {TemplateId::ScriptParse, TemplateId::Summary, TemplateId::SituationDetect, TemplateId::ExpandProbe,
                  TemplateId::ExpandFollowup, TemplateId::Judge}) {
    CHECK_FALSE(template_body(id).empty());
    CHECK(template_from_string(to_string(id)) == id);
  }
}

TEST_CASE("situation schema") {
  auto p = validate_situation_schema(R"({"situation": "vague answer", "number": "1.1"})");
  REQUIRE(p);
  CHECK(p->code == SituationCode::VagueGeneral);
  CHECK(validate_situation_schema(R"({"situation": "x", "number": 2.2})")->code == SituationCode::Inconsistency);
  CHECK(validate_situation_schema("```json\n{\"situation\": \"x\", \"number\": \"2.1\"}\n```")->code ==
        SituationCode::NewTheme);
  CHECK_FALSE(validate_situation_schema("{}"));
  CHECK_FALSE(validate_situation_schema(""));
  CHECK(code_of([] { validate_situation_schema(R"({"situation": "x", "number": "3.1"})"); }) == ErrorCode::SchemaError);
  CHECK(code_of([] { validate_situation_schema(R"({"situation": "", "number": "1.1"})"); }) == ErrorCode::SchemaError);
  CHECK(code_of([] { validate_situation_schema("not json"); }) == ErrorCode::SchemaError);
}

TEST_CASE("judge schema accepts the salience alias and checks ranges") {
  auto s = validate_judge_schema(R"({"ratings": [{"correctness": 5, "specificity": "4", "salience": 3}]})", 1);
  CHECK(s[0] == CriterionScores{5, 4, 3});
  CHECK(s[0].total() == 12);
  CHECK(validate_judge_schema(R"([{"correctness": 1, "specificity": 1, "coverage": 2.0}])", 1)[0].coverage == 2);
  CHECK(code_of([] { validate_judge_schema(R"([{"correctness": 6, "specificity": 1, "coverage": 1}])", 1); }) ==
        ErrorCode::SchemaError);
  CHECK(code_of([] { validate_judge_schema(R"([{"correctness": 1, "specificity": 1}])", 1); }) ==
        ErrorCode::SchemaError);
  CHECK(code_of([] { validate_judge_schema(R"([])", 1); }) == ErrorCode::SchemaError);
  CHECK(code_of([] { validate_judge_schema(R"([{"correctness": 1.5, "specificity": 1, "coverage": 1}])", 1); }) ==
        ErrorCode::SchemaError);
}

TEST_CASE("script schema") {
  auto st = validate_script_schema(
      R"([{"category": "Intro", "questions": [{"main_question": "Hi?", "sub_questions": [{"sub_question": "Why?"}]}]}])");
  REQUIRE(st.size() == 1);
  CHECK(st[0].questions[0].subquestions.size() == 1);
  CHECK(code_of([] { validate_script_schema(R"([{"category": "A", "questions": [{"main_question": "x"}]}])"); }) ==
        ErrorCode::SchemaError);
  CHECK(code_of([] {
          validate_script_schema(R"([{"category": "A", "questions": []}, {"category": "A", "questions": []}])");
        }) == ErrorCode::SchemaError);
}

TEST_CASE("one reprompt on schema failure, then SchemaError") {
  auto good = std::make_shared<Scripted>(std::vector<std::string>{"{oops", R"({"situation": "x", "number": "1.2"})"});
  Gateway g(good);
  auto p = g.detect_situation(ctx_for("um"));
  REQUIRE(p);
  CHECK(p->code == SituationCode::Hesitation);
  REQUIRE(good->prompts.size() == 2);
  CHECK(good->prompts[1].size() > good->prompts[0].size());
  CHECK(g.calls() == 2);

  auto bad = std::make_shared<Scripted>(std::vector<std::string>{"{oops"});
  Gateway g2(bad);
  CHECK(code_of([&] { g2.detect_situation(ctx_for("um")); }) == ErrorCode::SchemaError);
  CHECK(bad->prompts.size() == 2);
}

TEST_CASE("parsed payload is present iff validation passed") {
  auto b = std::make_shared<Scripted>(std::vector<std::string>{"  short summary  "});
  Gateway g(b);
  auto r = g.summarize("A: hello", json::array(), std::nullopt);
  REQUIRE(r.parsed);
  CHECK(*r.parsed == "short summary");
  CHECK(r.request_id >= 1);
  auto empty = std::make_shared<Scripted>(std::vector<std::string>{"   "});
  Gateway g2(empty);
  CHECK(code_of([&] { g2.summarize("A: hello", json::array(), std::nullopt); }) == ErrorCode::SchemaError);
}

TEST_CASE("the focus question reaches the summary prompt only when given") {
  auto b = std::make_shared<Scripted>(std::vector<std::string>{"ok"});
  Gateway g(b);
  g.summarize("A: hi", json::array(), std::string("Which bus do you take?"));
  g.summarize("A: hi", json::array(), std::nullopt);
  CHECK(b->prompts[0].find("Which bus do you take?") != std::string::npos);
  CHECK(b->prompts[1].find("Focus on") == std::string::npos);
}

TEST_CASE("mock embeddings are deterministic hashed bags of words") {
  MockBackend m;
  auto a = m.embed_one("The bus was late again");
  auto b = m.embed_one("late bus");
  CHECK(a == m.embed_one("The bus was late again"));
  CHECK(a.size() == 512);
  CHECK(cosine(a, b) > 0.5);
  CHECK(cosine(a, m.embed_one("chocolate recipes")) < 0.2);
  Config c;
  auto g = make_gateway(c);
  auto v = g->embed({"one", "two words"});
  CHECK(v.size() == 2);
  CHECK(code_of([&] { g->embed({}); }) == ErrorCode::ConfigError);
}

TEST_CASE("mock fixtures by prompt hash and by substring") {
  auto m = std::make_shared<MockBackend>();
  Gateway g(m);
  PromptTemplate t{TemplateId::ExpandProbe, {{"code", "1.1"}, {"excerpt", "vague"}, {"transcript", "T"}}};
  m->add_fixture({TemplateId::ExpandProbe, MockBackend::prompt_key(render(t)), std::nullopt, "exact hit"});
  m->add_fixture({TemplateId::ExpandProbe, std::nullopt, std::string("other"), "substring hit"});
  CHECK(g.expand(SituationCode::VagueGeneral, "vague", "T").raw == "exact hit");
  CHECK(g.expand(SituationCode::VagueGeneral, "other thing", "T").raw == "substring hit");
  CHECK(m->calls(TemplateId::ExpandProbe) == 2);
  CHECK(g.expand(SituationCode::Inconsistency, "x", "T").template_id == TemplateId::ExpandFollowup);
}

TEST_CASE("mock failure injection, malformed output and virtual latency") {
  Config c;
  c.mock.fail = {"summary"};
  c.mock.malformed = {"judge"};
  c.mock.latency = {{"situation_detect", 1.5}};
  auto g = make_gateway(c);
  CHECK(code_of([&] { g->summarize("A: hi", json::array(), std::nullopt); }) == ErrorCode::BackendUnavailable);
  CHECK(code_of([&] { g->judge({{"x", SituationCode::Hesitation}}, "T"); }) == ErrorCode::SchemaError);
  Seconds latency = 0;
  g->detect_situation(ctx_for("nothing special here"), &latency);
  CHECK(latency == 1.5);
  c.backend = "vendor";
  CHECK(code_of([&] { make_gateway(c); }) == ErrorCode::ConfigError);
}

TEST_CASE("mock judge scores one rating per situation") {
  Config c;
  auto g = make_gateway(c);
  auto s = g->judge({{"Interviewee hesitates about the budget", SituationCode::Hesitation},
                     {"New theme raised: Norvik", SituationCode::NewTheme}},
                    "interviewee: um the budget, uh, I mean");
  REQUIRE(s.size() == 2);
  for (const auto& x : s) {
    CHECK(x.correctness >= 1);
    CHECK(x.coverage <= 5);
  }
  CHECK(g->judge({}, "T").empty());
}

TEST_CASE("rule-based situations") {
  CHECK(detect_situation_rules(ctx_for("um, well, I mean the bus"))->code == SituationCode::Hesitation);
  CHECK(detect_situation_rules(ctx_for("it kind of depends on stuff"))->code == SituationCode::VagueGeneral);
  CHECK(detect_situation_rules(ctx_for("I always take the train", {"I never take the train"}))->code ==
        SituationCode::Inconsistency);
  CHECK(detect_situation_rules(ctx_for("then I switched to Velocita last spring"))->code == SituationCode::NewTheme);
  CHECK_FALSE(detect_situation_rules(ctx_for("the bus is fine")));
  auto other = ctx_for("um uh");
  other.speaker = "interviewer";
  CHECK_FALSE(detect_situation_rules(other));
}

TEST_CASE("gateway output is a pure function of its inputs under the mock") {
  Config c;
  auto g1 = make_gateway(c), g2 = make_gateway(c);
  auto ctx = ctx_for("I guess it sort of depends", {"I take the bus daily"});
  auto a = g1->detect_situation(ctx), b = g2->detect_situation(ctx);
  REQUIRE(a);
  CHECK(a->excerpt == b->excerpt);
  json segs = json::array({{{"start", 0}, {"end", 2}, {"speaker", "interviewee"}, {"text", "I bike to work."}}});
  auto first = g1->summarize("interviewee: I bike to work.", segs, std::nullopt);
  CHECK(first.raw == g2->summarize("interviewee: I bike to work.", segs, std::nullopt).raw);
  CHECK(first.raw == "I bike to work");
  CHECK_THROWS_AS(g1->summarize("interviewer: hi", json::array(), std::nullopt), Error);
}
