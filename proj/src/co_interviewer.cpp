#include "interflow/co_interviewer.hpp"

#include <algorithm>
#include <set>

#include "interflow/errors.hpp"
#include "interflow/mock_backend.hpp"

namespace interflow {

using nlohmann::json;

json to_json(const SituationTag& t) {
  return {{"excerpt", t.excerpt},
          {"code", to_string(t.code)},
          {"icon", icon_for(t.code)},
          {"arrival", t.arrival},
          {"span_start", t.span_start},
          {"span_end", t.span_end}};
}

SituationTag situation_tag_from_json(const json& j) {
  auto code = situation_from_string(j.at("code").get<std::string>());
  if (!code) throw Error(ErrorCode::MalformedEvent, "bad situation code");
  return {j.at("excerpt").get<std::string>(), *code, j.at("arrival").get<double>(),
          j.value("span_start", 0.0), j.value("span_end", 0.0)};
}

// ---------------------------------------------------------------------------
// SuggestionAggregator

ClosedWindow SuggestionAggregator::close(Seconds now) {
  ClosedWindow w = std::move(*open_);
  w.closed_at = now;
  open_.reset();
  return w;
}

std::optional<ClosedWindow> SuggestionAggregator::add(const SituationTag& tag, Seconds now) {
  Micros t = to_micros(tag.arrival);
  if (last_arrival_ && t < *last_arrival_)
    throw Error(ErrorCode::NonMonotonicTime, "situation tag arrived before the previous one");
  std::optional<ClosedWindow> closed;
  if (open_ && t - *last_arrival_ >= gap_) closed = close(now);
  if (!open_) {
    open_ = ClosedWindow{next_id_++, {}, tag.arrival, 0};
  }
  open_->tags.push_back(tag);
  last_arrival_ = t;
  return closed;
}

std::optional<ClosedWindow> SuggestionAggregator::tick(Seconds now) {
  if (open_ && to_micros(now) - *last_arrival_ >= gap_) return close(now);
  return std::nullopt;
}

std::optional<ClosedWindow> SuggestionAggregator::flush(Seconds now) {
  if (open_) return close(now);
  return std::nullopt;
}

std::size_t select_candidate(std::span<const SituationTag> tags, std::span<const CriterionScores> scores) {
  if (tags.empty() || tags.size() != scores.size())
    throw Error(ErrorCode::SchemaError, "scores do not match the window");
  std::size_t best = 0;
  for (std::size_t i = 1; i < tags.size(); ++i) {
    int ti = scores[i].total();
    int tb = scores[best].total();
    if (ti > tb || (ti == tb && to_micros(tags[i].arrival) < to_micros(tags[best].arrival))) best = i;
  }
  return best;
}

// ---------------------------------------------------------------------------
// CandidateQueue

void CandidateQueue::push(Candidate c) { pending_.push_back(std::move(c)); }

std::vector<Candidate> CandidateQueue::expire(Seconds now) {
  std::vector<Candidate> expired;
  Micros t = to_micros(now);
  std::erase_if(pending_, [&](const Candidate& c) {
    if (t - to_micros(c.ready_at) >= expiry_) {
      expired.push_back(c);
      return true;
    }
    return false;
  });
  return expired;
}

std::optional<Candidate> CandidateQueue::pop_for_pause(Seconds now) {
  expire(now);
  if (pending_.empty()) return std::nullopt;
  // Newest window wins; pending_ is in close order.
  auto it = std::max_element(pending_.begin(), pending_.end(), [](const Candidate& a, const Candidate& b) {
    return a.window_id < b.window_id;
  });
  Candidate c = std::move(*it);
  pending_.erase(it);
  return c;
}

double token_overlap(const std::string& candidate, const std::string& other) {
  auto a = content_words(candidate);
  auto b = content_words(other);
  std::set<std::string> sa(a.begin(), a.end());
  std::set<std::string> sb(b.begin(), b.end());
  if (sa.empty()) return 0;
  std::size_t hit = 0;
  for (const auto& w : sa) hit += sb.count(w);
  return static_cast<double>(hit) / static_cast<double>(sa.size());
}

// ---------------------------------------------------------------------------
// CoInterviewer

CoInterviewer::CoInterviewer(Options options, std::string research_question, std::string background,
                             std::vector<std::string> known_terms)
    : options_(options),
      research_question_(std::move(research_question)),
      background_(std::move(background)),
      known_terms_(std::move(known_terms)),
      aggregator_(options.gap),
      queue_(options.expiry) {}

ObserveContext CoInterviewer::context_for(const std::string& speaker, const std::string& utterance) const {
  ObserveContext ctx;
  ctx.research_question = research_question_;
  ctx.background = background_;
  ctx.notes = notes_;
  ctx.history.assign(history_.begin(), history_.end());
  ctx.known_terms = known_terms_;
  ctx.speaker = speaker;
  ctx.utterance = utterance;
  return ctx;
}

void CoInterviewer::remember_utterance(const std::string& utterance) {
  history_.push_back(utterance);
  while (history_.size() > options_.history_limit) history_.pop_front();
}

bool CoInterviewer::is_duplicate(const std::string& excerpt) const {
  for (const auto& n : notes_)
    if (token_overlap(excerpt, n) >= options_.duplicate_overlap) return true;
  for (const auto& s : surfaced_)
    if (token_overlap(excerpt, s.tag.excerpt) >= options_.duplicate_overlap) return true;
  return false;
}

SurfacedSuggestion& CoInterviewer::surface(const std::string& tag_id, const Candidate& c) {
  surfaced_.push_back({tag_id, c.tag, c.scores, std::nullopt, false});
  return surfaced_.back();
}

SurfacedSuggestion* CoInterviewer::find(const std::string& tag_id) {
  auto it = std::find_if(surfaced_.begin(), surfaced_.end(),
                         [&](const SurfacedSuggestion& s) { return s.tag_id == tag_id; });
  return it == surfaced_.end() ? nullptr : &*it;
}

}  // namespace interflow
