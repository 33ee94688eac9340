#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "interflow/clock.hpp"
#include "interflow/transcript.hpp"

namespace interflow {

struct SpeechInterval {
  Micros start = 0;
  Micros end = 0;
  Speaker speaker = Speaker::Unknown;
  std::size_t stage = 0;
  bool operator==(const SpeechInterval&) const = default;
};

struct StageTime {
  std::string name;
  Micros elapsed = 0;
  Micros interviewer = 0;
  Micros interviewee = 0;
  Micros unknown = 0;
  /// Interviewer share of attributed speech; absent while the stage has none.
  std::optional<double> interviewer_share;
  std::optional<double> interviewee_share;
  bool operator==(const StageTime&) const = default;
};

struct TimerView {
  Seconds at = 0;
  std::vector<StageTime> stages;
  std::size_t current_stage = 0;
  double planned_minutes = 0;
  Micros overall_elapsed = 0;
  std::optional<double> session_interviewer_share;
  std::vector<SpeechInterval> recent_speech;
  bool operator==(const TimerView&) const = default;
};

nlohmann::json to_json(const TimerView& v);

/// Per-stage wall clocks and per-(stage, speaker) speaking time. All
/// accumulation is in integer microseconds, so totals are exact.
class TalkStats {
 public:
  TalkStats(std::vector<std::string> stage_names, double planned_minutes, Seconds start);

  /// Switches the running stage clock. Throws UnknownStage.
  void enter_stage(std::size_t stage, Seconds now);
  /// Credits the segment to the current stage. Unknown speakers add to the
  /// stage's unattributed time but not to the ratio.
  void record_speech(const TranscriptSegment& seg);

  /// Pure snapshot; `recent_since` limits the raw intervals included.
  TimerView snapshot(Seconds now, std::optional<Seconds> recent_since = std::nullopt) const;

  std::size_t current_stage() const { return current_; }
  std::size_t stage_count() const { return names_.size(); }

 private:
  struct Bucket {
    Micros closed_elapsed = 0;
    Micros interviewer = 0;
    Micros interviewee = 0;
    Micros unknown = 0;
  };

  std::vector<std::string> names_;
  double planned_minutes_;
  Micros start_;
  std::vector<Bucket> buckets_;
  std::size_t current_ = 0;
  Micros entered_;
  std::vector<SpeechInterval> intervals_;
};

}  // namespace interflow
