#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "interflow/clock.hpp"
#include "interflow/gateway.hpp"
#include "interflow/script.hpp"
#include "interflow/transcript.hpp"

namespace interflow {

enum class TagKind { Manual, Summary, Suggestion };
std::string_view to_string(TagKind kind);

inline constexpr std::size_t kSummaryWordLimit = 7;

struct Tag {
  std::string id;
  std::optional<std::string> question_id;  // anchor
  TagKind kind = TagKind::Manual;
  std::string text;
  Seconds created_at = 0;
  std::optional<std::string> source_request;
  bool over_limit = false;
  bool deleted = false;
  std::optional<SituationCode> code;  // suggestions only
};

nlohmann::json to_json(const Tag& tag);

enum class RequestState { Pending, Fulfilled, Failed };
std::string_view to_string(RequestState s);

struct SummaryRequest {
  std::string id;
  Seconds issued_at = 0;
  DialogueWindow window;  // frozen at issue time
  std::optional<std::string> focus_question;
  RequestState state = RequestState::Pending;
  std::optional<std::string> error;
  std::optional<Seconds> completed_at;
  std::optional<std::string> tag_id;
};

nlohmann::json to_json(const SummaryRequest& r, bool with_window = false);

/// Manual tags, summary requests and the tags they produce. Tags are
/// append-only; deletion marks a tombstone.
class Capture {
 public:
  /// Throws UnknownId, EmptyText.
  const Tag& create_manual_tag(const ScriptHierarchy& h, const std::string& question_id,
                               const std::string& text, Seconds now);

  /// Freezes the window; the gateway call is the caller's job. Throws
  /// EmptyBuffer when the ring holds no speech.
  const SummaryRequest& request_summary(const TranscriptIngest& ingest, Seconds horizon,
                                        std::optional<std::string> focus, Seconds now);

  /// Throws UnknownRequest, AlreadyFulfilled.
  const Tag& fulfill_summary(const std::string& request_id, const std::string& text, Seconds now);
  const SummaryRequest& fail_summary(const std::string& request_id, const std::string& error, Seconds now);

  /// Suggestions are surfaced by the co-interviewer and stored as tags too.
  const Tag& add_suggestion(std::optional<std::string> question_id, SituationCode code,
                            const std::string& excerpt, Seconds now);

  /// Throws UnknownId.
  void delete_tag(const std::string& tag_id);

  const std::vector<Tag>& tags() const { return tags_; }
  const std::vector<SummaryRequest>& requests() const { return requests_; }
  const Tag* find_tag(const std::string& id) const;
  const SummaryRequest* find_request(const std::string& id) const;

 private:
  SummaryRequest& pending(const std::string& request_id);
  std::string next_tag_id();

  std::vector<Tag> tags_;
  std::vector<SummaryRequest> requests_;
  std::uint64_t next_tag_ = 1;
  std::uint64_t next_request_ = 1;
};

}  // namespace interflow
