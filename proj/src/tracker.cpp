#include "interflow/tracker.hpp"

#include <algorithm>
#include <unordered_map>

#include "interflow/errors.hpp"

namespace interflow {

void QuestionEmbeddings::reorder(const std::vector<std::string>& ids) {
  std::unordered_map<std::string, std::size_t> rank;
  for (std::size_t i = 0; i < ids.size(); ++i) rank.emplace(ids[i], i);
  std::stable_sort(vectors.begin(), vectors.end(), [&](const auto& a, const auto& b) {
    auto ra = rank.find(a.first);
    auto rb = rank.find(b.first);
    auto ia = ra == rank.end() ? ids.size() : ra->second;
    auto ib = rb == rank.end() ? ids.size() : rb->second;
    return ia < ib;
  });
}

QuestionEmbeddings embed_script(const ScriptHierarchy& h, Gateway& gateway) {
  auto ids = h.ordered_ids();
  if (ids.empty()) throw Error(ErrorCode::EmptyScript, "script contains no questions");
  std::vector<std::string> texts;
  texts.reserve(ids.size());
  for (const auto& id : ids) texts.push_back(h.question(id).text);
  auto vectors = gateway.embed(texts);
  QuestionEmbeddings emb;
  emb.model_tag = "gateway";
  for (std::size_t i = 0; i < ids.size(); ++i) emb.vectors.emplace_back(ids[i], std::move(vectors[i]));
  return emb;
}

std::optional<QuestionDetection> detect(std::span<const double> window_vector,
                                        const QuestionEmbeddings& emb, double threshold,
                                        Seconds window_end) {
  std::optional<QuestionDetection> best;
  for (const auto& [id, vec] : emb.vectors) {
    double s = cosine(window_vector, vec);
    if (!best || s > best->similarity) best = QuestionDetection{id, s, 0, window_end};
  }
  if (!best || !(best->similarity >= threshold)) return std::nullopt;
  best->opacity = opacity_for(best->similarity);
  return best;
}

std::optional<QuestionDetection> detect(const DialogueWindow& window, const QuestionEmbeddings& emb,
                                        Gateway& gateway, double threshold) {
  if (window.segments.empty()) throw Error(ErrorCode::EmptyBuffer, "empty dialogue window");
  auto vec = gateway.embed({window.text()});
  return detect(vec.front(), emb, threshold, window.end());
}

std::string_view to_string(DiscardReason r) {
  return r == DiscardReason::Suspended ? "suspended" : "stale";
}

bool QuestionTracker::suspended(Seconds now) const {
  return suspended_until_ && to_micros(now) < *suspended_until_;
}

std::optional<Seconds> QuestionTracker::suspended_until() const {
  if (!suspended_until_) return std::nullopt;
  return to_seconds(*suspended_until_);
}

std::optional<Seconds> QuestionTracker::last_manual() const {
  if (!last_manual_) return std::nullopt;
  return to_seconds(*last_manual_);
}

TrackerDelta QuestionTracker::apply_manual_selection(ScriptHierarchy& h, const std::string& id,
                                                     Seconds now) {
  if (!h.contains(id)) throw Error(ErrorCode::UnknownId, "unknown question id '" + id + "'");
  TrackerDelta d;
  d.change = h.set_status(id, QuestionStatus::Ongoing, StatusSource::Manual);
  d.applied = true;
  last_manual_ = to_micros(now);
  suspended_until_ = *last_manual_ + suspension_;
  opacity_ = 1.0;
  d.opacity = opacity_;
  return d;
}

TrackerDelta QuestionTracker::apply_detection(ScriptHierarchy& h, const QuestionDetection& det,
                                              Seconds now) {
  TrackerDelta d;
  if (suspended(now)) {
    d.discarded = DiscardReason::Suspended;
    return d;
  }
  if (last_manual_ && to_micros(det.window_end) < *last_manual_) {
    d.discarded = DiscardReason::Stale;
    return d;
  }
  if (!h.contains(det.question_id))
    throw Error(ErrorCode::UnknownId, "detection for unknown question '" + det.question_id + "'");
  if (h.ongoing() == det.question_id) {
    // Same question: refresh the confidence display only.
    d.change = StatusChange{det.question_id, std::nullopt, false};
  } else {
    d.change = h.set_status(det.question_id, QuestionStatus::Ongoing, StatusSource::Auto);
  }
  d.applied = true;
  opacity_ = det.opacity;
  d.opacity = opacity_;
  return d;
}

}  // namespace interflow
