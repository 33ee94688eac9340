#pragma once

#include <atomic>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "interflow/clock.hpp"
#include "interflow/config.hpp"
#include "interflow/script.hpp"

namespace interflow {

using Embedding = std::vector<double>;

double dot(std::span<const double> a, std::span<const double> b);
double norm(std::span<const double> a);
/// Cosine similarity; 0 when either vector is zero. Throws DimensionMismatch.
double cosine(std::span<const double> a, std::span<const double> b);
void normalize(Embedding& v);

enum class TemplateId { ScriptParse, Summary, SituationDetect, ExpandProbe, ExpandFollowup, Judge };

std::string_view to_string(TemplateId id);
std::optional<TemplateId> template_from_string(std::string_view s);

/// Template body with `${slot}` placeholders, plus the values to fill.
struct PromptTemplate {
  TemplateId id;
  std::map<std::string, std::string> slots;
};

std::string_view template_body(TemplateId id);
/// Throws ConfigError when the body references a slot that is not filled.
std::string render(const PromptTemplate& t);

/// What a backend receives. `context` mirrors the slot values in structured
/// form; remote adapters send only `prompt`, the mock reads `context`.
struct CompletionRequest {
  TemplateId id;
  std::string prompt;
  nlohmann::json context;
  int attempt = 0;
};

class Backend {
 public:
  virtual ~Backend() = default;
  virtual std::string name() const = 0;
  virtual std::vector<Embedding> embed(const std::vector<std::string>& texts) = 0;
  virtual std::string complete(const CompletionRequest& request) = 0;
  /// Virtual latency to report for a call, when the backend runs on
  /// virtual time. Live backends return nullopt and are timed on the wall.
  virtual std::optional<Seconds> virtual_latency(std::string_view /*call*/) const {
    return std::nullopt;
  }
};

struct GatewayResult {
  std::uint64_t request_id = 0;
  TemplateId template_id;
  std::string raw;
  std::optional<nlohmann::json> parsed;  // present iff schema validation passed
  Seconds latency = 0;
};

enum class SituationCode { VagueGeneral, Hesitation, NewTheme, Inconsistency };

std::string_view to_string(SituationCode code);  // "1.1" ... "2.2"
std::optional<SituationCode> situation_from_string(std::string_view s);
std::string_view icon_for(SituationCode code);
inline bool is_probe(SituationCode c) {
  return c == SituationCode::VagueGeneral || c == SituationCode::Hesitation;
}

struct SituationPayload {
  std::string excerpt;
  SituationCode code;
};

struct CriterionScores {
  int correctness = 1;
  int specificity = 1;
  int coverage = 1;  // "salience" accepted as an alias on input
  int total() const { return correctness + specificity + coverage; }
  bool operator==(const CriterionScores&) const = default;
};

/// Inputs of one situation-detection update.
struct ObserveContext {
  std::string research_question;
  std::string background;
  std::vector<std::string> notes;    // forwarded user tags and summaries
  std::vector<std::string> history;  // earlier interviewee utterances, oldest first
  std::vector<std::string> known_terms;
  std::string speaker;
  std::string utterance;
};

struct JudgeItem {
  std::string excerpt;
  SituationCode code;
};

// Schema validators for raw model text. Each throws SchemaError.
std::vector<Stage> validate_script_schema(std::string_view raw);
std::optional<SituationPayload> validate_situation_schema(std::string_view raw);
std::vector<CriterionScores> validate_judge_schema(std::string_view raw, std::size_t expected);

/// Uniform entry point to model capabilities. Constructs every prompt and
/// parses every raw model output in the engine. Thread-safe when the
/// backends are.
class Gateway {
 public:
  explicit Gateway(std::shared_ptr<Backend> backend);
  void route(TemplateId id, std::shared_ptr<Backend> backend);

  /// Throws BackendUnavailable, ConfigError on empty input.
  std::vector<Embedding> embed(const std::vector<std::string>& texts, Seconds* latency = nullptr);

  /// Renders, dispatches and validates. One reprompt retry on schema
  /// failure, then SchemaError.
  GatewayResult complete(const PromptTemplate& t, const nlohmann::json& context);

  std::vector<Stage> parse_script(std::string_view body, const ScriptMeta& meta);
  GatewayResult summarize(const std::string& transcript, const nlohmann::json& segments,
                          const std::optional<std::string>& focus_question);
  std::optional<SituationPayload> detect_situation(const ObserveContext& ctx, Seconds* latency = nullptr);
  std::vector<CriterionScores> judge(const std::vector<JudgeItem>& items, const std::string& transcript,
                                     Seconds* latency = nullptr);
  GatewayResult expand(SituationCode code, const std::string& excerpt, const std::string& transcript);

  std::uint64_t calls() const { return calls_.load(); }

 private:
  Backend& backend_for(TemplateId id);

  std::shared_ptr<Backend> default_;
  std::map<TemplateId, std::shared_ptr<Backend>> routes_;
  std::atomic<std::uint64_t> next_id_{1};
  std::atomic<std::uint64_t> calls_{0};
};

/// Builds a gateway from config; only the mock backend ships in-tree.
std::shared_ptr<Gateway> make_gateway(const Config& config);

}  // namespace interflow
