#pragma once

#include <cstddef>
#include <deque>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "interflow/clock.hpp"

namespace interflow {

enum class Speaker { Interviewer, Interviewee, Unknown };

std::string_view to_string(Speaker speaker);
Speaker speaker_from_string(std::string_view s);

/// Timestamped, speaker-attributed utterance fragment. Times are seconds
/// since session start.
struct TranscriptSegment {
  Seconds start = 0;
  Seconds end = 0;
  Speaker speaker = Speaker::Unknown;
  std::string text;
  bool final = true;

  bool operator==(const TranscriptSegment&) const = default;
};

nlohmann::json to_json(const TranscriptSegment& seg);
/// Throws MalformedEvent on missing or mistyped fields.
TranscriptSegment segment_from_json(const nlohmann::json& j);

struct DialogueWindow {
  std::vector<TranscriptSegment> segments;
  std::size_t word_count = 0;
  bool closed_at_sentence_boundary = false;

  Seconds end() const { return segments.empty() ? 0 : segments.back().end; }
  std::string text() const;
  bool operator==(const DialogueWindow&) const = default;
};

nlohmann::json to_json(const DialogueWindow& w);
DialogueWindow window_from_json(const nlohmann::json& j);

/// Splits on ASCII whitespace.
std::vector<std::string> tokenize(std::string_view text);

/// True when the token closes a sentence: it ends in '.', '!' or '?'
/// (ignoring trailing quotes and brackets) and is not a known abbreviation.
bool ends_sentence(std::string_view token);

/// Indices i such that a sentence ends after tokens[i].
std::vector<std::size_t> detect_sentence_boundary(const std::vector<std::string>& tokens);

/// Accumulates final words and emits a window once `min_words` have been
/// collected since the previous emission and a sentence boundary follows.
class Windower {
 public:
  explicit Windower(std::size_t min_words = 50) : min_words_(min_words) {}

  std::vector<DialogueWindow> push(const TranscriptSegment& seg);
  /// Emits whatever is buffered, regardless of the word rule.
  std::optional<DialogueWindow> flush();
  std::size_t buffered_words() const;

 private:
  DialogueWindow take(std::size_t words, bool boundary);

  std::size_t min_words_;
  std::deque<TranscriptSegment> segments_;
  std::deque<std::vector<std::string>> tokens_;
};

/// Final segments overlapping the last `horizon` seconds.
class SegmentRing {
 public:
  explicit SegmentRing(Seconds horizon = 30.0) : horizon_(horizon) {}

  void push(const TranscriptSegment& seg);
  void advance(Seconds now);
  Seconds now() const { return now_; }
  Seconds horizon() const { return horizon_; }
  const std::deque<TranscriptSegment>& segments() const { return segments_; }

  /// Segments with end >= now - horizon and start <= now, returned whole.
  /// `horizon` is capped at the retention horizon. Throws EmptyBuffer.
  DialogueWindow last(Seconds horizon) const;

 private:
  void prune();

  Seconds horizon_;
  Seconds now_ = 0;
  std::deque<TranscriptSegment> segments_;
};

struct WindowReady {
  DialogueWindow window;
};
struct PauseDetected {
  Seconds at = 0;
};
using PipelineTrigger = std::variant<WindowReady, PauseDetected>;

struct IngestOptions {
  std::size_t window_words = 50;
  Seconds ring_seconds = 30.0;
  Seconds pause_seconds = 2.0;
  Seconds out_of_order_tolerance = 0.5;
  bool external_vad = false;  // text silence rule disabled when set
};

/// Entry point for transcript events. Maintains the retrieval windower, the
/// 30 s ring buffer, the latest non-final hypothesis and the silence rule.
class TranscriptIngest {
 public:
  explicit TranscriptIngest(IngestOptions options = {});

  /// Throws OutOfOrder when a final segment ends earlier than the last
  /// accepted final end minus the tolerance.
  std::vector<PipelineTrigger> push_segment(const TranscriptSegment& seg);

  /// Advances the clock; returns a pause when silence reaches the threshold.
  std::vector<PipelineTrigger> tick(Seconds now);

  /// Forced flush at stream end.
  std::vector<PipelineTrigger> flush();

  DialogueWindow window_last(Seconds horizon) const { return ring_.last(horizon); }
  const SegmentRing& ring() const { return ring_; }
  const std::optional<TranscriptSegment>& partial() const { return partial_; }
  Seconds now() const { return ring_.now(); }
  std::optional<Seconds> last_final_end() const { return last_final_end_; }

 private:
  IngestOptions options_;
  Windower windower_;
  SegmentRing ring_;
  std::optional<TranscriptSegment> partial_;
  std::optional<Seconds> last_final_end_;
  bool pause_fired_ = false;
};

}  // namespace interflow
