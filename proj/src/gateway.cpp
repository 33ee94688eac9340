#include "interflow/gateway.hpp"

#include <chrono>
#include <cmath>
#include <set>
#include <sstream>

#include "interflow/errors.hpp"
#include "interflow/mock_backend.hpp"

namespace interflow {

using nlohmann::json;

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size())
    throw Error(ErrorCode::DimensionMismatch, "vector dimensions " + std::to_string(a.size()) +
                                                  " and " + std::to_string(b.size()) + " differ");
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

double cosine(std::span<const double> a, std::span<const double> b) {
  double ab = dot(a, b);
  double na = norm(a);
  double nb = norm(b);
  if (na == 0 || nb == 0) return 0;
  return ab / (na * nb);
}

void normalize(Embedding& v) {
  double n = norm(v);
  if (n == 0) return;
  for (auto& x : v) x /= n;
}

std::string_view to_string(TemplateId id) {
  switch (id) {
    case TemplateId::ScriptParse: return "script_parse";
    case TemplateId::Summary: return "summary";
    case TemplateId::SituationDetect: return "situation_detect";
    case TemplateId::ExpandProbe: return "expand_probe";
    case TemplateId::ExpandFollowup: return "expand_followup";
    case TemplateId::Judge: return "judge";
  }
  return "unknown";
}

std::optional<TemplateId> template_from_string(std::string_view s) {
  for (auto id : {TemplateId::ScriptParse, TemplateId::Summary, TemplateId::SituationDetect,
                  TemplateId::ExpandProbe, TemplateId::ExpandFollowup, TemplateId::Judge})
    if (to_string(id) == s) return id;
  return std::nullopt;
}

std::string_view to_string(SituationCode code) {
  switch (code) {
    case SituationCode::VagueGeneral: return "1.1";
    case SituationCode::Hesitation: return "1.2";
    case SituationCode::NewTheme: return "2.1";
    case SituationCode::Inconsistency: return "2.2";
  }
  return "";
}

std::optional<SituationCode> situation_from_string(std::string_view s) {
  if (s == "1.1") return SituationCode::VagueGeneral;
  if (s == "1.2") return SituationCode::Hesitation;
  if (s == "2.1") return SituationCode::NewTheme;
  if (s == "2.2") return SituationCode::Inconsistency;
  return std::nullopt;
}

std::string_view icon_for(SituationCode code) {
  switch (code) {
    case SituationCode::VagueGeneral: return "probe-vague";
    case SituationCode::Hesitation: return "probe-hesitation";
    case SituationCode::NewTheme: return "followup-new-theme";
    case SituationCode::Inconsistency: return "followup-inconsistency";
  }
  return "";
}

// ---------------------------------------------------------------------------
// Schema validation

namespace {

[[noreturn]] void schema_error(const std::string& what) {
  throw Error(ErrorCode::SchemaError, what);
}

std::string_view strip(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

/// Models like to wrap JSON in markdown fences.
std::string_view unfence(std::string_view raw) {
  raw = strip(raw);
  if (raw.substr(0, 3) == "```") {
    auto nl = raw.find('\n');
    auto end = raw.rfind("```");
    if (nl != std::string_view::npos && end != std::string_view::npos && end > nl)
      raw = strip(raw.substr(nl + 1, end - nl - 1));
  }
  return raw;
}

json parse_json(std::string_view raw) {
  try {
    return json::parse(unfence(raw));
  } catch (const json::exception& e) {
    schema_error(std::string("output is not valid JSON: ") + e.what());
  }
}

std::string require_string(const json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end()) schema_error(std::string("missing key \"") + key + "\"");
  if (!it->is_string()) schema_error(std::string("key \"") + key + "\" is not a string");
  return it->get<std::string>();
}

int score_value(const json& obj, const char* key, const char* alias = nullptr) {
  auto it = obj.find(key);
  if (it == obj.end() && alias) it = obj.find(alias);
  if (it == obj.end()) schema_error(std::string("missing score \"") + key + "\"");
  int v = 0;
  if (it->is_number_integer()) {
    v = it->get<int>();
  } else if (it->is_number()) {
    double d = it->get<double>();
    if (std::floor(d) != d) schema_error(std::string("score \"") + key + "\" is not an integer");
    v = static_cast<int>(d);
  } else if (it->is_string()) {
    try {
      std::size_t used = 0;
      v = std::stoi(it->get<std::string>(), &used);
      if (used != it->get<std::string>().size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      schema_error(std::string("score \"") + key + "\" is not an integer");
    }
  } else {
    schema_error(std::string("score \"") + key + "\" is not a number");
  }
  if (v < 1 || v > 5) schema_error(std::string("score \"") + key + "\" outside 1-5");
  return v;
}

}  // namespace

std::vector<Stage> validate_script_schema(std::string_view raw) {
  json j = parse_json(raw);
  if (!j.is_array()) schema_error("top level must be a list of categories");
  std::vector<Stage> stages;
  std::set<std::string> names;
  for (const auto& cat : j) {
    if (!cat.is_object()) schema_error("category entry is not an object");
    Stage stage;
    stage.name = require_string(cat, "category");
    if (stage.name.empty()) schema_error("empty category name");
    if (!names.insert(stage.name).second) schema_error("duplicate category \"" + stage.name + "\"");
    if (auto it = cat.find("intro"); it != cat.end() && !it->is_null()) {
      if (!it->is_string()) schema_error("intro is not a string");
      if (!it->get<std::string>().empty()) stage.intro = it->get<std::string>();
    }
    auto qs = cat.find("questions");
    if (qs == cat.end()) schema_error("missing key \"questions\"");
    if (!qs->is_array()) schema_error("\"questions\" is not a list");
    for (const auto& q : *qs) {
      if (!q.is_object()) schema_error("question entry is not an object");
      Question main;
      main.text = require_string(q, "main_question");
      if (strip(main.text).empty()) schema_error("empty main_question");
      auto subs = q.find("sub_questions");
      if (subs == q.end()) schema_error("missing key \"sub_questions\"");
      if (!subs->is_array()) schema_error("\"sub_questions\" is not a list");
      for (const auto& s : *subs) {
        if (!s.is_object()) schema_error("sub_question entry is not an object");
        Question sub;
        sub.text = require_string(s, "sub_question");
        sub.kind = QuestionKind::Sub;
        if (strip(sub.text).empty()) continue;
        main.subquestions.push_back(std::move(sub));
      }
      stage.questions.push_back(std::move(main));
    }
    stages.push_back(std::move(stage));
  }
  return stages;
}

std::optional<SituationPayload> validate_situation_schema(std::string_view raw) {
  auto body = unfence(raw);
  if (body.empty() || body == "{}" || body == "null") return std::nullopt;
  json j = parse_json(body);
  if (!j.is_object()) schema_error("situation output must be an object");
  SituationPayload p;
  p.excerpt = require_string(j, "situation");
  if (strip(p.excerpt).empty()) schema_error("empty situation excerpt");
  auto it = j.find("number");
  if (it == j.end()) schema_error("missing key \"number\"");
  std::string number;
  if (it->is_string()) {
    number = std::string(strip(it->get<std::string>()));
  } else if (it->is_number()) {
    std::ostringstream os;
    os << it->get<double>();
    number = os.str();
  } else {
    schema_error("\"number\" is neither string nor number");
  }
  auto code = situation_from_string(number);
  if (!code) schema_error("situation number \"" + number + "\" is not in the scheme");
  p.code = *code;
  return p;
}

std::vector<CriterionScores> validate_judge_schema(std::string_view raw, std::size_t expected) {
  json j = parse_json(raw);
  const json* ratings = &j;
  if (j.is_object()) {
    auto it = j.find("ratings");
    if (it == j.end()) schema_error("missing key \"ratings\"");
    ratings = &*it;
  }
  if (!ratings->is_array()) schema_error("ratings must be a list");
  if (ratings->size() != expected)
    schema_error("expected " + std::to_string(expected) + " ratings, got " +
                 std::to_string(ratings->size()));
  std::vector<CriterionScores> out;
  for (const auto& r : *ratings) {
    if (!r.is_object()) schema_error("rating entry is not an object");
    out.push_back({score_value(r, "correctness"), score_value(r, "specificity"),
                   score_value(r, "coverage", "salience")});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Gateway

Gateway::Gateway(std::shared_ptr<Backend> backend) : default_(std::move(backend)) {
  if (!default_) throw Error(ErrorCode::ConfigError, "gateway needs a backend");
}

void Gateway::route(TemplateId id, std::shared_ptr<Backend> backend) {
  routes_[id] = std::move(backend);
}

Backend& Gateway::backend_for(TemplateId id) {
  auto it = routes_.find(id);
  return it != routes_.end() ? *it->second : *default_;
}

std::vector<Embedding> Gateway::embed(const std::vector<std::string>& texts, Seconds* latency) {
  if (texts.empty()) throw Error(ErrorCode::ConfigError, "embed needs at least one text");
  ++calls_;
  auto started = std::chrono::steady_clock::now();
  auto vectors = default_->embed(texts);
  if (latency) {
    auto v = default_->virtual_latency("embed");
    *latency = v ? *v
                 : std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  }
  if (vectors.size() != texts.size())
    throw Error(ErrorCode::GatewayError, "backend returned wrong number of embeddings");
  for (auto& v : vectors) {
    if (!vectors.empty() && v.size() != vectors.front().size())
      throw Error(ErrorCode::DimensionMismatch, "backend returned mixed dimensions");
    normalize(v);
  }
  return vectors;
}

GatewayResult Gateway::complete(const PromptTemplate& t, const json& context) {
  GatewayResult result;
  result.request_id = next_id_++;
  result.template_id = t.id;
  CompletionRequest request{t.id, render(t), context, 0};
  auto& backend = backend_for(t.id);
  auto started = std::chrono::steady_clock::now();

  auto validate = [&](const std::string& raw) -> std::optional<json> {
    switch (t.id) {
      case TemplateId::ScriptParse:
        validate_script_schema(raw);
        return parse_json(raw);
      case TemplateId::SituationDetect: {
        auto p = validate_situation_schema(raw);
        if (!p) return json(nullptr);
        return json{{"situation", p->excerpt}, {"number", to_string(p->code)}};
      }
      case TemplateId::Judge: {
        auto n = context.value("situations", json::array()).size();
        auto scores = validate_judge_schema(raw, n);
        json out = json::array();
        for (const auto& s : scores)
          out.push_back({{"correctness", s.correctness},
                         {"specificity", s.specificity},
                         {"coverage", s.coverage}});
        return out;
      }
      default: {
        auto text = std::string(strip(raw));
        if (text.empty()) throw Error(ErrorCode::SchemaError, "empty completion");
        return json(text);
      }
    }
  };

  for (int attempt = 0;; ++attempt) {
    request.attempt = attempt;
    if (attempt == 1)
      request.prompt += "\n\nYour previous reply could not be parsed. Reply again with only "
                        "the required format and nothing else.";
    ++calls_;
    result.raw = backend.complete(request);
    try {
      result.parsed = validate(result.raw);
      break;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::SchemaError || attempt == 1) {
        result.parsed.reset();
        throw;
      }
    }
  }
  auto v = backend.virtual_latency(to_string(t.id));
  result.latency =
      v ? *v : std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return result;
}

std::vector<Stage> Gateway::parse_script(std::string_view body, const ScriptMeta& meta) {
  PromptTemplate t{TemplateId::ScriptParse, {{"script", std::string(body)}}};
  json ctx = {{"script", std::string(body)},
              {"research_question", meta.research_question},
              {"background", meta.background}};
  auto result = complete(t, ctx);
  return validate_script_schema(result.raw);
}

GatewayResult Gateway::summarize(const std::string& transcript, const json& segments,
                                 const std::optional<std::string>& focus_question) {
  std::string focus;
  if (focus_question)
    focus = "\nFocus on the answer to this question from the interview script: " + *focus_question + "\n";
  PromptTemplate t{TemplateId::Summary, {{"transcript", transcript}, {"focus", focus}}};
  json ctx = {{"segments", segments},
              {"focus_question", focus_question ? json(*focus_question) : json(nullptr)}};
  return complete(t, ctx);
}

namespace {

std::string bullet_list(const std::vector<std::string>& items) {
  if (items.empty()) return "(none)";
  std::string out;
  for (const auto& s : items) out += "- " + s + "\n";
  out.pop_back();
  return out;
}

}  // namespace

std::optional<SituationPayload> Gateway::detect_situation(const ObserveContext& ctx, Seconds* latency) {
  PromptTemplate t{TemplateId::SituationDetect,
                   {{"research_question", ctx.research_question},
                    {"background", ctx.background},
                    {"notes", bullet_list(ctx.notes)},
                    {"history", bullet_list(ctx.history)},
                    {"speaker", ctx.speaker},
                    {"utterance", ctx.utterance}}};
  json j = {{"research_question", ctx.research_question},
            {"background", ctx.background},
            {"notes", ctx.notes},
            {"history", ctx.history},
            {"known_terms", ctx.known_terms},
            {"speaker", ctx.speaker},
            {"utterance", ctx.utterance}};
  auto result = complete(t, j);
  if (latency) *latency = result.latency;
  if (!result.parsed || result.parsed->is_null()) return std::nullopt;
  return validate_situation_schema(result.raw);
}

std::vector<CriterionScores> Gateway::judge(const std::vector<JudgeItem>& items,
                                            const std::string& transcript, Seconds* latency) {
  if (items.empty()) return {};
  std::string listing;
  json situations = json::array();
  for (std::size_t i = 0; i < items.size(); ++i) {
    listing += std::to_string(i + 1) + ". [" + std::string(to_string(items[i].code)) + "] " +
               items[i].excerpt + "\n";
    situations.push_back({{"situation", items[i].excerpt}, {"number", to_string(items[i].code)}});
  }
  listing.pop_back();
  PromptTemplate t{TemplateId::Judge, {{"situations", listing}, {"transcript", transcript}}};
  auto result = complete(t, {{"situations", situations}, {"transcript", transcript}});
  if (latency) *latency = result.latency;
  return validate_judge_schema(result.raw, items.size());
}

GatewayResult Gateway::expand(SituationCode code, const std::string& excerpt,
                              const std::string& transcript) {
  auto id = is_probe(code) ? TemplateId::ExpandProbe : TemplateId::ExpandFollowup;
  PromptTemplate t{id,
                   {{"code", std::string(to_string(code))},
                    {"excerpt", excerpt},
                    {"transcript", transcript}}};
  return complete(t, {{"code", to_string(code)}, {"excerpt", excerpt}, {"transcript", transcript}});
}

std::shared_ptr<Gateway> make_gateway(const Config& config) {
  auto make_backend = [&](const std::string& name) -> std::shared_ptr<Backend> {
    if (name == "mock") return std::make_shared<MockBackend>(config.mock);
    throw Error(ErrorCode::ConfigError, "unknown backend '" + name + "'");
  };
  auto gateway = std::make_shared<Gateway>(make_backend(config.backend));
  for (const auto& [tmpl, name] : config.template_backend) {
    auto id = template_from_string(tmpl);
    if (!id) throw Error(ErrorCode::ConfigError, "unknown template '" + tmpl + "'");
    gateway->route(*id, make_backend(name));
  }
  return gateway;
}

}  // namespace interflow
