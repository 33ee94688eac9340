#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "interflow/capture.hpp"
#include "interflow/clock.hpp"
#include "interflow/co_interviewer.hpp"
#include "interflow/config.hpp"
#include "interflow/gateway.hpp"
#include "interflow/script.hpp"
#include "interflow/timing.hpp"
#include "interflow/tracker.hpp"
#include "interflow/transcript.hpp"

namespace interflow {

inline constexpr int kProtocolVersion = 1;

/// One record of the append-only session log. The serialized form is a
/// single JSON line with sorted keys; it is also the payload of wire deltas.
struct SessionEvent {
  std::uint64_t seq = 0;
  Seconds t = 0;
  std::string kind;
  nlohmann::json payload;

  bool operator==(const SessionEvent&) const = default;
};

nlohmann::json to_json(const SessionEvent& e);
std::string to_line(const SessionEvent& e);
/// Throws CorruptLog when the line is not a well-formed event.
SessionEvent event_from_line(std::string_view line, std::uint64_t lineno);

enum class EventClass { Input, Completion, Derived };
/// Throws CorruptLog for kinds the engine does not know.
EventClass classify(std::string_view kind);

/// Result of a gateway job, re-entering the session as a completion event.
struct JobOutcome {
  std::string kind;
  nlohmann::json payload;
  Seconds latency = 0;  // virtual latency reported by the backend
};

struct Job {
  Seconds issued_at = 0;
  std::function<JobOutcome()> run;
};

/// Where the session sends gateway work. Runtimes decide when results come
/// back; replay uses no sink because completions are read from the log.
class JobSink {
 public:
  virtual ~JobSink() = default;
  virtual void submit(Job job) = 0;
};

struct Outbound {
  std::optional<std::string> client;  // nullopt: broadcast
  nlohmann::json message;
};

struct ApplyResult {
  std::vector<SessionEvent> events;  // the input event first, then derived ones
  std::vector<Outbound> messages;
  bool state_changed = false;
};

/// Event-sourced interview session. Every mutation goes through apply(),
/// which logs the event, folds it into module state and logs the derived
/// events. The snapshot is a pure function of the log prefix.
class Session {
 public:
  /// Parses the script (grammar first, gateway fallback), precomputes the
  /// question embeddings and logs the genesis event. Throws ConfigError when
  /// no positive planned time is available.
  static std::unique_ptr<Session> create(std::string_view script_text, const Config& config,
                                         std::shared_ptr<Gateway> gateway, Seconds now = 0);

  /// Rebuilds a session by re-applying the input and completion events of a
  /// log. Derived events are recomputed and must match the recorded ones.
  /// Throws CorruptLog with the offending sequence number.
  static std::unique_ptr<Session> replay(const std::vector<std::string>& lines,
                                         std::shared_ptr<Gateway> gateway = nullptr);

  /// Applies one input or completion event. Module errors become error
  /// events; the loop never throws for bad input.
  ApplyResult apply(const std::string& kind, const nlohmann::json& payload, Seconds t,
                    const std::optional<std::string>& client = std::nullopt);

  /// Decodes a protocol message and applies it. Malformed messages are
  /// logged as rejected and answered with an error message.
  ApplyResult handle_client_message(const std::string& client, std::string_view text, Seconds t);

  nlohmann::json snapshot() const;
  std::string snapshot_text() const { return snapshot().dump(); }

  const std::vector<SessionEvent>& log() const { return log_; }
  std::vector<std::string> log_lines() const;

  void set_sink(JobSink* sink) { sink_ = sink; }
  Seconds now() const { return now_; }
  const Config& config() const { return config_; }
  const ScriptHierarchy& script() const { return script_; }
  const QuestionTracker& tracker() const { return tracker_; }
  const Capture& capture() const { return capture_; }
  const CoInterviewer& agent() const { return agent_; }
  const TalkStats& talk() const { return talk_; }
  std::size_t pending_jobs() const { return pending_jobs_; }

 private:
  Session(ScriptHierarchy script, const Config& config, std::shared_ptr<Gateway> gateway,
          double planned_minutes, Seconds start);

  struct Ctx;
  SessionEvent& emit(Ctx& ctx, std::string kind, nlohmann::json payload);
  void submit(Job job);

  void on_segment(Ctx& ctx, const nlohmann::json& payload);
  void on_tick(Ctx& ctx);
  void on_pause(Ctx& ctx, Seconds at);
  void on_manual_select(Ctx& ctx, const nlohmann::json& payload);
  void on_reorder(Ctx& ctx, const nlohmann::json& payload);
  void on_create_tag(Ctx& ctx, const nlohmann::json& payload);
  void on_delete_tag(Ctx& ctx, const nlohmann::json& payload);
  void on_request_summary(Ctx& ctx, const nlohmann::json& payload);
  void on_hover_expand(Ctx& ctx, const nlohmann::json& payload);
  void on_flush(Ctx& ctx);
  void on_detection_result(Ctx& ctx, const nlohmann::json& payload);
  void on_situation_result(Ctx& ctx, const nlohmann::json& payload);
  void on_judge_result(Ctx& ctx, const nlohmann::json& payload);
  void on_summary_result(Ctx& ctx, const nlohmann::json& payload);
  void on_expand_result(Ctx& ctx, const nlohmann::json& payload);

  void handle_triggers(Ctx& ctx, const std::vector<PipelineTrigger>& triggers);
  void start_detection(Ctx& ctx, const DialogueWindow& window);
  void start_judge(const ClosedWindow& window, int attempt);
  void close_window(Ctx& ctx, ClosedWindow window);
  void note_status(Ctx& ctx, const StatusChange& change, StatusSource source);
  void publish_timer(Ctx& ctx);
  std::string recent_transcript() const;

  ScriptHierarchy script_;
  Config config_;
  std::shared_ptr<Gateway> gateway_;
  std::shared_ptr<const QuestionEmbeddings> embeddings_;
  TranscriptIngest ingest_;
  QuestionTracker tracker_;
  TalkStats talk_;
  Capture capture_;
  CoInterviewer agent_;
  double planned_minutes_;

  std::vector<SessionEvent> log_;
  JobSink* sink_ = nullptr;
  Seconds now_ = 0;
  std::optional<Micros> last_timer_publish_;
  std::map<std::uint64_t, ClosedWindow> judging_;
  std::uint64_t next_window_ = 1;
  std::uint64_t next_observe_ = 1;
  std::size_t pending_jobs_ = 0;
};

/// Snapshot representation of the script panel.
nlohmann::json to_json(const ScriptHierarchy& h);

}  // namespace interflow
