#include "interflow/mock_backend.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "interflow/errors.hpp"
#include "interflow/transcript.hpp"

namespace interflow {

using nlohmann::json;

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

namespace {

constexpr std::array<std::string_view, 72> kStopwords = {
    "a",     "an",    "the",   "and",   "or",     "but",   "if",    "of",    "to",
    "in",    "on",    "at",    "by",    "for",    "with",  "from",  "as",    "is",
    "are",   "was",   "were",  "be",    "been",   "am",    "do",    "does",  "did",
    "have",  "has",   "had",   "i",     "you",    "he",    "she",   "it",    "we",
    "they",  "me",    "my",    "your",  "our",    "their", "its",   "this",  "that",
    "these", "those", "what",  "which", "who",    "how",   "when",  "where", "why",
    "so",    "just",  "about", "can",   "could",  "would", "will",  "there", "then",
    "than",  "some",  "any",   "into",  "out",    "up",    "also",  "very",  "yeah",
};

bool contains_phrase(const std::string& haystack, std::string_view phrase) {
  return haystack.find(phrase) != std::string::npos;
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::string trim_word(std::string_view w) {
  auto keep = [](unsigned char c) { return std::isalnum(c) || c == '\''; };
  std::size_t b = 0, e = w.size();
  while (b < e && !keep(static_cast<unsigned char>(w[b]))) ++b;
  while (e > b && !keep(static_cast<unsigned char>(w[e - 1]))) --e;
  return std::string(w.substr(b, e - b));
}

}  // namespace

bool is_stopword(std::string_view word) {
  return std::find(kStopwords.begin(), kStopwords.end(), word) != kStopwords.end();
}

std::vector<std::string> content_words(std::string_view text, bool drop_stopwords) {
  std::vector<std::string> out;
  for (const auto& tok : tokenize(text)) {
    // Split on inner punctuation other than apostrophes ("friends/family").
    std::string cur;
    auto emit = [&] {
      auto w = lower(trim_word(cur));
      cur.clear();
      if (w.empty()) return;
      if (drop_stopwords && is_stopword(w)) return;
      out.push_back(std::move(w));
    };
    for (char c : tok) {
      if (std::isalnum(static_cast<unsigned char>(c)) || c == '\'')
        cur += c;
      else
        emit();
    }
    emit();
  }
  return out;
}

MockBackend::MockBackend(MockConfig config) : config_(std::move(config)) {
  if (config_.fixtures_dir.empty()) return;
  std::filesystem::path path = std::filesystem::path(config_.fixtures_dir) / "fixtures.jsonl";
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ConfigError, "cannot open mock fixtures " + path.string());
  std::string line;
  std::int64_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      auto j = json::parse(line);
      auto id = template_from_string(j.at("template").get<std::string>());
      if (!id) throw Error(ErrorCode::ConfigError, "unknown template", lineno);
      Fixture f{*id, std::nullopt, std::nullopt, j.at("output").get<std::string>()};
      if (j.contains("prompt_hash")) f.prompt_hash = j["prompt_hash"].get<std::string>();
      if (j.contains("contains")) f.contains = j["contains"].get<std::string>();
      fixtures_.push_back(std::move(f));
    } catch (const json::exception& e) {
      throw Error(ErrorCode::ConfigError, path.string() + ":" + std::to_string(lineno) + ": " + e.what(),
                  lineno);
    }
  }
}

void MockBackend::add_fixture(Fixture f) {
  std::lock_guard lock(mu_);
  fixtures_.push_back(std::move(f));
}

std::string MockBackend::prompt_key(std::string_view prompt) {
  std::ostringstream os;
  os << std::hex << fnv1a(prompt);
  return os.str();
}

std::size_t MockBackend::calls(TemplateId id) const {
  std::lock_guard lock(mu_);
  auto it = calls_.find(id);
  return it == calls_.end() ? 0 : it->second;
}

std::size_t MockBackend::embed_calls() const {
  std::lock_guard lock(mu_);
  return embed_calls_;
}

std::optional<Seconds> MockBackend::virtual_latency(std::string_view call) const {
  auto it = config_.latency.find(std::string(call));
  return it == config_.latency.end() ? 0.0 : it->second;
}

Embedding MockBackend::embed_one(std::string_view text) const {
  Embedding v(config_.embedding_dim, 0.0);
  auto words = content_words(text, true);
  if (words.empty()) words = content_words(text, false);
  for (const auto& w : words) v[fnv1a(w) % v.size()] += 1.0;
  return v;
}

std::vector<Embedding> MockBackend::embed(const std::vector<std::string>& texts) {
  {
    std::lock_guard lock(mu_);
    ++embed_calls_;
  }
  if (config_.fail.count("embed"))
    throw Error(ErrorCode::BackendUnavailable, "mock embedding backend marked unavailable");
  std::vector<Embedding> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(embed_one(t));
  return out;
}

std::string MockBackend::complete(const CompletionRequest& request) {
  const auto tmpl = std::string(to_string(request.id));
  {
    std::lock_guard lock(mu_);
    ++calls_[request.id];
  }
  if (config_.fail.count(tmpl))
    throw Error(ErrorCode::BackendUnavailable, "mock backend marked unavailable for " + tmpl);
  if (config_.malformed.count(tmpl)) return "this is {not valid";
  {
    std::lock_guard lock(mu_);
    auto key = prompt_key(request.prompt);
    for (const auto& f : fixtures_) {
      if (f.id != request.id) continue;
      if (f.prompt_hash && *f.prompt_hash == key) return f.output;
    }
    for (const auto& f : fixtures_) {
      if (f.id != request.id || f.prompt_hash) continue;
      if (!f.contains || request.prompt.find(*f.contains) != std::string::npos) return f.output;
    }
  }
  return default_completion(request);
}

// ---------------------------------------------------------------------------
// Rule-based defaults

namespace {

std::string join_words(const std::vector<std::string>& words, std::size_t n) {
  std::string out;
  for (std::size_t i = 0; i < std::min(n, words.size()); ++i) {
    if (i) out += ' ';
    out += words[i];
  }
  return out;
}

std::string freeform_to_schema(const std::string& body) {
  json cats = json::array();
  json* current = nullptr;
  auto lines = std::istringstream(body);
  std::string line;
  while (std::getline(lines, line)) {
    auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    auto text = line.substr(first);
    while (!text.empty() && (text.back() == '\r' || text.back() == ' ')) text.pop_back();
    bool indented = first >= 2;
    // Strip list markers and numbering.
    auto marker = text.find_first_not_of("-*0123456789.) ");
    std::string content = marker == std::string::npos ? text : text.substr(marker);
    if (!content.empty() && content.back() == '?') {
      if (!current) {
        cats.push_back({{"category", "Questions"}, {"questions", json::array()}});
        current = &cats.back();
      }
      auto& qs = (*current)["questions"];
      if (indented && !qs.empty()) {
        qs.back()["sub_questions"].push_back({{"sub_question", content}});
      } else {
        qs.push_back({{"main_question", content}, {"sub_questions", json::array()}});
      }
    } else if (!current || !(*current)["questions"].empty()) {
      if (!content.empty() && content.back() == ':') content.pop_back();
      cats.push_back({{"category", content}, {"questions", json::array()}});
      current = &cats.back();
    } else {
      auto& intro = (*current)["intro"];
      intro = intro.is_string() ? intro.get<std::string>() + " " + content : content;
    }
  }
  return cats.dump();
}

std::string summary_default(const json& ctx) {
  std::vector<std::string> words;
  for (const auto& s : ctx.value("segments", json::array())) {
    if (s.value("speaker", "") != "interviewee") continue;
    for (auto& w : tokenize(s.value("text", ""))) words.push_back(w);
  }
  if (words.empty())
    throw Error(ErrorCode::InsufficientContext, "no interviewee speech in the summary window");
  auto text = join_words(words, 7);
  while (!text.empty() && std::ispunct(static_cast<unsigned char>(text.back()))) text.pop_back();
  return text;
}

int clamp_score(long v) { return static_cast<int>(std::clamp(v, 1L, 5L)); }

std::string judge_default(const json& ctx) {
  auto transcript_words = content_words(ctx.value("transcript", ""));
  std::set<std::string> vocab(transcript_words.begin(), transcript_words.end());
  json ratings = json::array();
  int index = 1;
  for (const auto& s : ctx.value("situations", json::array())) {
    auto words = content_words(s.value("situation", ""));
    std::set<std::string> uniq(words.begin(), words.end());
    std::size_t hit = 0;
    for (const auto& w : uniq) hit += vocab.count(w);
    double frac = uniq.empty() ? 0.0 : static_cast<double>(hit) / static_cast<double>(uniq.size());
    auto code = s.value("number", "");
    int coverage = code == "2.2" ? 5 : code == "1.2" ? 4 : 3;
    ratings.push_back({{"index", index++},
                       {"correctness", clamp_score(1 + std::lround(4.0 * frac))},
                       {"specificity", clamp_score(1 + static_cast<long>(uniq.size()) / 4)},
                       {"coverage", coverage}});
  }
  return json{{"ratings", ratings}}.dump();
}

std::string expand_default(const json& ctx) {
  auto code = ctx.value("code", "");
  auto excerpt = ctx.value("excerpt", "");
  if (code == "1.1")
    return "Ask for clarification, or ask for evidence and example: invite a concrete instance of \"" +
           excerpt + "\".";
  if (code == "1.2")
    return "Ask for clarification gently: acknowledge the hesitation and leave room to elaborate on \"" +
           excerpt + "\".";
  if (code == "2.2")
    return "Clarify whether A equals B: contrast the two statements and ask which one holds, e.g. \"You told "
           "me before one thing, but just now another.\" Focus: " +
           excerpt;
  return "Request a definition, then bring up another concept of the same class. Focus: " + excerpt;
}

}  // namespace

std::string MockBackend::default_completion(const CompletionRequest& request) const {
  const auto& ctx = request.context;
  switch (request.id) {
    case TemplateId::ScriptParse: return freeform_to_schema(ctx.value("script", ""));
    case TemplateId::Summary: return summary_default(ctx);
    case TemplateId::SituationDetect: {
      ObserveContext oc;
      oc.research_question = ctx.value("research_question", "");
      oc.background = ctx.value("background", "");
      oc.notes = ctx.value("notes", std::vector<std::string>{});
      oc.history = ctx.value("history", std::vector<std::string>{});
      oc.known_terms = ctx.value("known_terms", std::vector<std::string>{});
      oc.speaker = ctx.value("speaker", "");
      oc.utterance = ctx.value("utterance", "");
      auto p = detect_situation_rules(oc);
      if (!p) return "";
      return json{{"situation", p->excerpt}, {"number", to_string(p->code)}}.dump();
    }
    case TemplateId::Judge: return judge_default(ctx);
    case TemplateId::ExpandProbe:
    case TemplateId::ExpandFollowup: return expand_default(ctx);
  }
  return "";
}

// ---------------------------------------------------------------------------
// Situation rules

namespace {

constexpr std::array<std::string_view, 8> kFillers = {"um", "uh", "er", "erm", "hmm", "well", "like", "sorry"};
constexpr std::array<std::string_view, 4> kSelfCorrections = {"i mean", "not exactly", "or rather",
                                                              "let me rephrase"};
constexpr std::array<std::string_view, 16> kHedges = {
    "you know",   "everyone does", "just feels",  "kind of",     "sort of",   "i guess",
    "when necessary", "stuff",     "somehow",     "whatever",    "it depends", "in general",
    "generally",  "things like that", "how it is", "if needed",
};
constexpr std::array<std::string_view, 17> kNegations = {
    "not",   "no",    "never", "don't", "doesn't", "didn't", "isn't",   "aren't", "wasn't",
    "won't", "can't", "cannot", "hardly", "few",   "rarely", "barely", "nothing",
};

bool negative(const std::vector<std::string>& words) {
  for (const auto& w : words)
    if (std::find(kNegations.begin(), kNegations.end(), w) != kNegations.end()) return true;
  return false;
}

std::string clip(std::string_view s, std::size_t max_words) {
  auto toks = tokenize(s);
  std::string out;
  for (std::size_t i = 0; i < std::min(max_words, toks.size()); ++i) {
    if (i) out += ' ';
    out += toks[i];
  }
  if (toks.size() > max_words) out += "...";
  return out;
}

}  // namespace

std::optional<SituationPayload> detect_situation_rules(const ObserveContext& ctx) {
  if (ctx.speaker != "interviewee") return std::nullopt;
  const auto all = content_words(ctx.utterance, false);
  if (all.empty()) return std::nullopt;
  const auto text = " " + lower(ctx.utterance) + " ";

  // 2.2: a content word shared with an earlier statement of opposite polarity.
  const bool neg_now = negative(all);
  const auto now_words = content_words(ctx.utterance, true);
  for (auto it = ctx.history.rbegin(); it != ctx.history.rend(); ++it) {
    auto prior_all = content_words(*it, false);
    if (negative(prior_all) == neg_now) continue;
    auto prior = content_words(*it, true);
    for (const auto& w : now_words) {
      if (w.size() < 4 || std::find(kNegations.begin(), kNegations.end(), w) != kNegations.end()) continue;
      if (std::find(prior.begin(), prior.end(), w) != prior.end())
        return SituationPayload{"Earlier said \"" + clip(*it, 12) + "\" but now \"" + clip(ctx.utterance, 12) +
                                    "\" about " + w + ".",
                                SituationCode::Inconsistency};
    }
  }

  // 1.2: fillers, ellipses and self-corrections.
  int hesitation = 0;
  for (const auto& tok : tokenize(ctx.utterance)) {
    if (tok.find("...") != std::string::npos || tok.find("\xE2\x80\xA6") != std::string::npos) ++hesitation;
  }
  for (const auto& w : all)
    if (std::find(kFillers.begin(), kFillers.end(), w) != kFillers.end()) ++hesitation;
  for (auto phrase : kSelfCorrections)
    if (contains_phrase(text, phrase)) ++hesitation;
  if (hesitation >= 2)
    return SituationPayload{"Interviewee hesitates and self-corrects: \"" + clip(ctx.utterance, 12) + "\".",
                            SituationCode::Hesitation};

  // 1.1: hedges and unanchored generalities.
  for (auto phrase : kHedges) {
    if (contains_phrase(text, " " + std::string(phrase) + " ") ||
        contains_phrase(text, " " + std::string(phrase) + ".") ||
        contains_phrase(text, " " + std::string(phrase) + ","))
      return SituationPayload{"No specific steps or details described: \"" + clip(ctx.utterance, 12) + "\".",
                              SituationCode::VagueGeneral};
  }

  // 2.1: a capitalized, non-initial term not seen in the script or before.
  std::set<std::string> seen(ctx.known_terms.begin(), ctx.known_terms.end());
  for (const auto& w : content_words(ctx.research_question + " " + ctx.background, false)) seen.insert(w);
  for (const auto& h : ctx.history)
    for (const auto& w : content_words(h, false)) seen.insert(w);
  auto toks = tokenize(ctx.utterance);
  for (std::size_t i = 1; i < toks.size(); ++i) {
    auto prev = toks[i - 1];
    if (!prev.empty() && ends_sentence(prev)) continue;
    auto word = trim_word(toks[i]);
    if (word.size() < 3 || !std::isupper(static_cast<unsigned char>(word[0]))) continue;
    auto lw = lower(word);
    if (lw.rfind("i'", 0) == 0 || seen.count(lw)) continue;
    return SituationPayload{"New theme raised: " + word + " (\"" + clip(ctx.utterance, 12) + "\").",
                            SituationCode::NewTheme};
  }
  return std::nullopt;
}

}  // namespace interflow
