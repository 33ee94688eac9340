#pragma once

#include <cstddef>
#include <istream>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "interflow/config.hpp"
#include "interflow/session.hpp"

namespace interflow {

/// One line of a replay file: a protocol client message plus the session
/// time at which it is delivered. Segment records are delivered at their
/// end time; every other record carries `t`.
struct ReplayRecord {
  Seconds t = 0;
  nlohmann::json message;
  std::size_t line = 0;
};

/// Throws ParseError with the line number.
std::vector<ReplayRecord> parse_replay(std::istream& in);
std::vector<ReplayRecord> load_replay_file(const std::string& path);

struct AskedQuestion {
  std::string question_id;
  Seconds start = 0;
  Seconds end = 0;
};

/// Ground truth sidecar: which scripted question was asked when, and which
/// surfaced suggestions the interviewer acted on.
struct Annotations {
  std::vector<AskedQuestion> asked;
  std::vector<std::string> adopted;
};

Annotations annotations_from_json(const nlohmann::json& j);
Annotations load_annotations(const std::string& path);

struct QuestionOutcome {
  std::string question_id;
  Seconds start = 0;
  Seconds end = 0;
  bool correct = false;
  bool manual = false;
  std::optional<Seconds> highlighted_at;
  std::optional<Seconds> latency;
};

struct MetricsReport {
  bool annotated = false;
  std::size_t asked = 0;
  std::size_t correct = 0;
  std::size_t manual_overrides = 0;
  std::optional<double> accuracy;                // N/A without asked questions
  std::optional<double> mean_detection_latency;  // ask end to highlight, correct questions
  std::optional<double> mean_pipeline_latency;   // window end to highlight
  std::size_t detections = 0;                    // windows matched above threshold
  std::size_t highlights = 0;                    // detections applied to the script
  std::size_t summaries = 0;
  std::size_t failed_summaries = 0;
  std::optional<double> mean_summary_latency;
  std::size_t manual_tags = 0;
  std::size_t suggestions = 0;
  std::map<std::string, std::size_t> suggestions_by_code;
  std::size_t suggestion_windows = 0;
  std::optional<std::size_t> adopted;
  std::vector<QuestionOutcome> questions;
};

nlohmann::json to_json(const MetricsReport& r);

/// Metrics are a fold over the event log.
MetricsReport compute_metrics(const std::vector<SessionEvent>& log, const std::optional<Annotations>& ann);

std::string format_table(const MetricsReport& r);
std::string format_structured(const MetricsReport& r);

struct RunOutput {
  MetricsReport report;
  nlohmann::json snapshot;
  std::vector<std::string> log;
  std::vector<double> apply_micros;
};

/// Drives the records through a fresh session on virtual time. Final
/// segments are preceded by partial hypotheses at the tick cadence, as a
/// streaming recognizer would deliver them.
RunOutput run_session(std::string_view script_text, const std::vector<ReplayRecord>& records, const Config& config,
                      const std::optional<Annotations>& annotations = std::nullopt);

struct SweepAxis {
  std::string key;
  std::vector<std::string> values;
};

/// Parses `key=v1,v2,...`. Throws ConfigError.
SweepAxis parse_sweep(std::string_view spec);

struct SweepResult {
  std::map<std::string, std::string> overrides;
  MetricsReport report;
};

/// One run per point of the cartesian product of the axes; no axes, no runs.
std::vector<SweepResult> sweep(std::string_view script_text, const std::vector<ReplayRecord>& records,
                               const Config& base, const std::vector<SweepAxis>& grid,
                               const std::optional<Annotations>& annotations = std::nullopt);

}  // namespace interflow
