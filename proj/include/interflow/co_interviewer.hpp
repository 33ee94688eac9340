#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "interflow/clock.hpp"
#include "interflow/gateway.hpp"

namespace interflow {

struct SituationTag {
  std::string excerpt;
  SituationCode code;
  Seconds arrival = 0;
  Seconds span_start = 0;
  Seconds span_end = 0;
};

nlohmann::json to_json(const SituationTag& t);
SituationTag situation_tag_from_json(const nlohmann::json& j);

struct ClosedWindow {
  std::uint64_t id = 0;
  std::vector<SituationTag> tags;
  Seconds opened_at = 0;
  Seconds closed_at = 0;
};

/// Groups situation tags whose consecutive arrivals are less than `gap`
/// apart. A gap of exactly `gap` closes the window.
class SuggestionAggregator {
 public:
  explicit SuggestionAggregator(Seconds gap = 10.0) : gap_(to_micros(gap)) {}

  /// Throws NonMonotonicTime when the tag arrives before the previous one.
  std::optional<ClosedWindow> add(const SituationTag& tag, Seconds now);
  /// Closes the open window once `gap` has passed since its last tag.
  std::optional<ClosedWindow> tick(Seconds now);
  std::optional<ClosedWindow> flush(Seconds now);

  bool has_open() const { return open_.has_value(); }
  const std::optional<ClosedWindow>& open_window() const { return open_; }

 private:
  ClosedWindow close(Seconds now);

  Micros gap_;
  std::optional<ClosedWindow> open_;
  std::optional<Micros> last_arrival_;
  std::uint64_t next_id_ = 1;
};

/// Index of the window's candidate: highest total score, earliest arrival
/// among equal totals. Tags are expected in arrival order.
std::size_t select_candidate(std::span<const SituationTag> tags, std::span<const CriterionScores> scores);

struct JudgedSuggestion {
  SituationTag tag;
  CriterionScores scores;
  bool surfaced = false;
  std::optional<std::string> expansion;
};

struct Candidate {
  std::uint64_t window_id = 0;
  SituationTag tag;
  CriterionScores scores;
  Seconds ready_at = 0;  // window close time
};

/// Candidates waiting for a conversational pause. One surfaces per pause,
/// newest window first; candidates older than `expiry` are dropped.
class CandidateQueue {
 public:
  explicit CandidateQueue(Seconds expiry = 120.0) : expiry_(to_micros(expiry)) {}

  void push(Candidate c);
  std::vector<Candidate> expire(Seconds now);
  std::optional<Candidate> pop_for_pause(Seconds now);
  const std::deque<Candidate>& pending() const { return pending_; }

 private:
  Micros expiry_;
  std::deque<Candidate> pending_;
};

/// Share of the candidate's content words found in `other`.
double token_overlap(const std::string& candidate, const std::string& other);

struct SurfacedSuggestion {
  std::string tag_id;
  SituationTag tag;
  CriterionScores scores;
  std::optional<std::string> expansion;
  bool expansion_pending = false;
};

/// State of the proactive agent: context forwarded from user capture,
/// interviewee history, the aggregation window, pending candidates and
/// surfaced suggestions with their cached expansions.
class CoInterviewer {
 public:
  struct Options {
    Seconds gap = 10.0;
    Seconds expiry = 120.0;
    double duplicate_overlap = 0.6;
    std::size_t history_limit = 20;
  };

  CoInterviewer(Options options, std::string research_question, std::string background,
                std::vector<std::string> known_terms);

  /// Context for the next observe call.
  ObserveContext context_for(const std::string& speaker, const std::string& utterance) const;
  void remember_utterance(const std::string& utterance);
  void add_note(const std::string& note) { notes_.push_back(note); }
  const std::vector<std::string>& notes() const { return notes_; }

  SuggestionAggregator& aggregator() { return aggregator_; }
  CandidateQueue& queue() { return queue_; }
  const CandidateQueue& queue() const { return queue_; }

  /// True when the excerpt repeats a user note or an earlier suggestion.
  bool is_duplicate(const std::string& excerpt) const;

  SurfacedSuggestion& surface(const std::string& tag_id, const Candidate& c);
  SurfacedSuggestion* find(const std::string& tag_id);
  const std::vector<SurfacedSuggestion>& surfaced() const { return surfaced_; }

  bool enabled() const { return enabled_; }
  void disable() { enabled_ = false; }

 private:
  Options options_;
  std::string research_question_;
  std::string background_;
  std::vector<std::string> known_terms_;
  std::vector<std::string> notes_;
  std::deque<std::string> history_;
  SuggestionAggregator aggregator_;
  CandidateQueue queue_;
  std::vector<SurfacedSuggestion> surfaced_;
  bool enabled_ = true;
};

}  // namespace interflow
