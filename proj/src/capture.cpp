#include "interflow/capture.hpp"

#include <algorithm>

#include "interflow/errors.hpp"

namespace interflow {

using nlohmann::json;

std::string_view to_string(TagKind kind) {
  switch (kind) {
    case TagKind::Manual: return "manual";
    case TagKind::Summary: return "summary";
    case TagKind::Suggestion: return "suggestion";
  }
  return "manual";
}

std::string_view to_string(RequestState s) {
  switch (s) {
    case RequestState::Pending: return "pending";
    case RequestState::Fulfilled: return "fulfilled";
    case RequestState::Failed: return "failed";
  }
  return "pending";
}

json to_json(const Tag& tag) {
  json j = {{"id", tag.id},
            {"question_id", tag.question_id ? json(*tag.question_id) : json(nullptr)},
            {"kind", to_string(tag.kind)},
            {"text", tag.text},
            {"created_at", tag.created_at},
            {"over_limit", tag.over_limit},
            {"deleted", tag.deleted}};
  if (tag.source_request) j["source_request"] = *tag.source_request;
  if (tag.code) {
    j["code"] = to_string(*tag.code);
    j["icon"] = icon_for(*tag.code);
  }
  return j;
}

json to_json(const SummaryRequest& r, bool with_window) {
  json j = {{"id", r.id},
            {"issued_at", r.issued_at},
            {"focus_question", r.focus_question ? json(*r.focus_question) : json(nullptr)},
            {"state", to_string(r.state)},
            {"error", r.error ? json(*r.error) : json(nullptr)},
            {"completed_at", r.completed_at ? json(*r.completed_at) : json(nullptr)},
            {"tag_id", r.tag_id ? json(*r.tag_id) : json(nullptr)}};
  if (with_window) j["window"] = to_json(r.window);
  return j;
}

std::string Capture::next_tag_id() { return "tag-" + std::to_string(next_tag_++); }

const Tag& Capture::create_manual_tag(const ScriptHierarchy& h, const std::string& question_id,
                                      const std::string& text, Seconds now) {
  if (!h.contains(question_id)) throw Error(ErrorCode::UnknownId, "unknown question id '" + question_id + "'");
  if (tokenize(text).empty()) throw Error(ErrorCode::EmptyText, "tag text is empty");
  Tag tag;
  tag.id = next_tag_id();
  tag.question_id = question_id;
  tag.kind = TagKind::Manual;
  tag.text = text;
  tag.created_at = now;
  tags_.push_back(std::move(tag));
  return tags_.back();
}

const SummaryRequest& Capture::request_summary(const TranscriptIngest& ingest, Seconds horizon,
                                               std::optional<std::string> focus, Seconds now) {
  SummaryRequest r;
  r.window = ingest.window_last(horizon);  // throws EmptyBuffer
  r.id = "sum-" + std::to_string(next_request_++);
  r.issued_at = now;
  r.focus_question = std::move(focus);
  requests_.push_back(std::move(r));
  return requests_.back();
}

SummaryRequest& Capture::pending(const std::string& request_id) {
  auto it = std::find_if(requests_.begin(), requests_.end(),
                         [&](const SummaryRequest& r) { return r.id == request_id; });
  if (it == requests_.end()) throw Error(ErrorCode::UnknownRequest, "unknown summary request '" + request_id + "'");
  if (it->state != RequestState::Pending)
    throw Error(ErrorCode::AlreadyFulfilled, "summary request '" + request_id + "' already completed");
  return *it;
}

const Tag& Capture::fulfill_summary(const std::string& request_id, const std::string& text, Seconds now) {
  auto& r = pending(request_id);
  Tag tag;
  tag.id = next_tag_id();
  tag.question_id = r.focus_question;
  tag.kind = TagKind::Summary;
  tag.text = text;
  tag.created_at = now;
  tag.source_request = r.id;
  tag.over_limit = tokenize(text).size() > kSummaryWordLimit;
  r.state = RequestState::Fulfilled;
  r.completed_at = now;
  r.tag_id = tag.id;
  tags_.push_back(std::move(tag));
  return tags_.back();
}

const SummaryRequest& Capture::fail_summary(const std::string& request_id, const std::string& error,
                                            Seconds now) {
  auto& r = pending(request_id);
  r.state = RequestState::Failed;
  r.error = error;
  r.completed_at = now;
  return r;
}

const Tag& Capture::add_suggestion(std::optional<std::string> question_id, SituationCode code,
                                   const std::string& excerpt, Seconds now) {
  Tag tag;
  tag.id = next_tag_id();
  tag.question_id = std::move(question_id);
  tag.kind = TagKind::Suggestion;
  tag.text = excerpt;
  tag.created_at = now;
  tag.code = code;
  tags_.push_back(std::move(tag));
  return tags_.back();
}

void Capture::delete_tag(const std::string& tag_id) {
  auto it = std::find_if(tags_.begin(), tags_.end(), [&](const Tag& t) { return t.id == tag_id; });
  if (it == tags_.end()) throw Error(ErrorCode::UnknownId, "unknown tag '" + tag_id + "'");
  it->deleted = true;
}

const Tag* Capture::find_tag(const std::string& id) const {
  auto it = std::find_if(tags_.begin(), tags_.end(), [&](const Tag& t) { return t.id == id; });
  return it == tags_.end() ? nullptr : &*it;
}

const SummaryRequest* Capture::find_request(const std::string& id) const {
  auto it = std::find_if(requests_.begin(), requests_.end(), [&](const SummaryRequest& r) { return r.id == id; });
  return it == requests_.end() ? nullptr : &*it;
}

}  // namespace interflow
