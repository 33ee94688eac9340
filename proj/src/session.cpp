#include "interflow/session.hpp"

#include <algorithm>
#include <set>

#include "interflow/errors.hpp"
#include "interflow/mock_backend.hpp"

namespace interflow {

using nlohmann::json;

namespace {

const std::set<std::string, std::less<>> kInputKinds = {
    "genesis",     "segment",         "tick",         "vad_pause",      "manual_select",
    "reorder",     "create_tag",      "delete_tag",   "request_summary", "hover_expand",
    "client_connect", "flush",        "rejected"};
const std::set<std::string, std::less<>> kCompletionKinds = {
    "detection_result", "situation_result", "judge_result", "summary_result", "expand_result"};
const std::set<std::string, std::less<>> kDerivedKinds = {
    "window_ready",      "pause",          "detection_applied", "detection_discarded",
    "status",            "suspension",     "tag",               "tag_deleted",
    "reordered",         "summary_pending", "summary_fulfilled", "summary_failed",
    "situation",         "window_closed",  "judge_retry",       "candidate",
    "candidate_dropped", "candidate_expired", "suggestion",     "expansion",
    "timer",             "error",          "agent_disabled"};

json error_json(const Error& e) { return {{"code", to_string(e.code())}, {"message", e.what()}}; }

std::optional<std::string> opt_string(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  return it->get<std::string>();
}

json opt_json(const std::optional<std::string>& s) { return s ? json(*s) : json(nullptr); }

json scores_json(const CriterionScores& s) {
  return {{"correctness", s.correctness}, {"specificity", s.specificity}, {"coverage", s.coverage},
          {"total", s.total()}};
}

CriterionScores scores_from_json(const json& j) {
  return {j.at("correctness").get<int>(), j.at("specificity").get<int>(), j.at("coverage").get<int>()};
}

// Runs a gateway call and folds failures and timeouts into the payload, so
// every job produces exactly one completion event.
JobOutcome guarded(std::string kind, json base, Seconds timeout,
                   const std::function<json(Seconds&)>& body) {
  JobOutcome out{std::move(kind), std::move(base), 0};
  try {
    Seconds latency = 0;
    json fields = body(latency);
    out.latency = latency;
    if (latency > timeout) {
      out.payload["error"] = {{"code", to_string(ErrorCode::Timeout)},
                              {"message", "gateway call exceeded the timeout"}};
      out.latency = timeout;
    } else {
      for (auto& [k, v] : fields.items()) out.payload[k] = v;
    }
  } catch (const Error& e) {
    out.payload["error"] = error_json(e);
  }
  return out;
}

json question_json(const Question& q) {
  json j = {{"id", q.id},
            {"text", q.text},
            {"kind", to_string(q.kind)},
            {"status", to_string(q.status)},
            {"source", to_string(q.status_source)}};
  if (q.parent) j["parent"] = *q.parent;
  if (q.kind == QuestionKind::Main) {
    json subs = json::array();
    for (const auto& s : q.subquestions) subs.push_back(question_json(s));
    j["subquestions"] = subs;
  }
  return j;
}

json candidate_json(const Candidate& c) {
  return {{"window_id", c.window_id}, {"tag", to_json(c.tag)}, {"scores", scores_json(c.scores)},
          {"ready_at", c.ready_at}};
}

json suggestion_json(const SurfacedSuggestion& s, const std::optional<std::string>& question_id) {
  json j = {{"id", s.tag_id},
            {"code", to_string(s.tag.code)},
            {"icon", icon_for(s.tag.code)},
            {"excerpt", s.tag.excerpt},
            {"question_id", opt_json(question_id)},
            {"expansion", opt_json(s.expansion)},
            {"expansion_pending", s.expansion_pending}};
  return j;
}

std::vector<std::string> script_terms(const ScriptHierarchy& h) {
  std::set<std::string> terms;
  auto add = [&](const std::string& text) {
    for (auto& w : content_words(text, false)) terms.insert(w);
  };
  for (const auto& stage : h.stages()) {
    add(stage.name);
    if (stage.intro) add(*stage.intro);
    for (const auto& q : stage.questions) {
      add(q.text);
      for (const auto& s : q.subquestions) add(s.text);
    }
  }
  return {terms.begin(), terms.end()};
}

}  // namespace

json to_json(const ScriptHierarchy& h) {
  json stages = json::array();
  for (const auto& stage : h.stages()) {
    json qs = json::array();
    for (const auto& q : stage.questions) qs.push_back(question_json(q));
    stages.push_back({{"name", stage.name}, {"intro", opt_json(stage.intro)}, {"questions", qs}});
  }
  const auto& m = h.meta();
  return {{"research_question", m.research_question},
          {"background", m.background},
          {"planned_minutes", m.planned_minutes ? json(*m.planned_minutes) : json(nullptr)},
          {"stages", stages}};
}

json to_json(const SessionEvent& e) {
  return {{"seq", e.seq}, {"t", e.t}, {"kind", e.kind}, {"payload", e.payload}};
}

std::string to_line(const SessionEvent& e) { return to_json(e).dump(); }

SessionEvent event_from_line(std::string_view line, std::uint64_t lineno) {
  try {
    auto j = json::parse(line);
    SessionEvent e;
    e.seq = j.at("seq").get<std::uint64_t>();
    e.t = j.at("t").get<double>();
    e.kind = j.at("kind").get<std::string>();
    e.payload = j.at("payload");
    return e;
  } catch (const json::exception& ex) {
    throw Error(ErrorCode::CorruptLog, std::string("unreadable event: ") + ex.what(), lineno);
  }
}

EventClass classify(std::string_view kind) {
  if (kInputKinds.count(kind)) return EventClass::Input;
  if (kCompletionKinds.count(kind)) return EventClass::Completion;
  if (kDerivedKinds.count(kind)) return EventClass::Derived;
  throw Error(ErrorCode::CorruptLog, "unknown event kind '" + std::string(kind) + "'");
}

struct Session::Ctx {
  ApplyResult result;
  Seconds t = 0;
  std::optional<std::string> client;
};

Session::Session(ScriptHierarchy script, const Config& config, std::shared_ptr<Gateway> gateway,
                 double planned_minutes, Seconds start)
    : script_(std::move(script)),
      config_(config),
      gateway_(std::move(gateway)),
      ingest_(IngestOptions{config.window_words, config.ring_seconds, config.pause_seconds,
                            config.out_of_order_tolerance, config.external_vad}),
      tracker_(config.suspension_seconds),
      talk_([&] {
        std::vector<std::string> names;
        for (const auto& s : script_.stages()) names.push_back(s.name);
        return names;
      }(), planned_minutes, start),
      agent_(CoInterviewer::Options{config.suggestion_gap, config.candidate_expiry, config.duplicate_overlap, 20},
             script_.meta().research_question, script_.meta().background, script_terms(script_)),
      planned_minutes_(planned_minutes),
      now_(start) {}

std::unique_ptr<Session> Session::create(std::string_view script_text, const Config& config,
                                         std::shared_ptr<Gateway> gateway, Seconds now) {
  if (!gateway) throw Error(ErrorCode::ConfigError, "a session needs a gateway");
  auto script = load_script(script_text, gateway.get());
  auto planned = config.planned_minutes ? config.planned_minutes : script.meta().planned_minutes;
  if (!planned || !(*planned > 0))
    throw Error(ErrorCode::ConfigError, "planned interview time must be greater than 0 minutes");
  auto embeddings = std::make_shared<QuestionEmbeddings>(embed_script(script, *gateway));
  std::unique_ptr<Session> s(new Session(std::move(script), config, std::move(gateway), *planned, now));
  s->embeddings_ = std::move(embeddings);
  Ctx ctx{{}, now, std::nullopt};
  s->emit(ctx, "genesis",
          {{"protocol", kProtocolVersion},
           {"script", serialize_script(s->script_)},
           {"config", config.to_json()},
           {"planned_minutes", *planned}});
  return s;
}

std::unique_ptr<Session> Session::replay(const std::vector<std::string>& lines,
                                         std::shared_ptr<Gateway> gateway) {
  std::vector<SessionEvent> events;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].find_first_not_of(" \t\r") == std::string::npos) continue;
    std::uint64_t expected = events.size() + 1;
    auto e = event_from_line(lines[i], expected);
    if (e.seq != expected)
      throw Error(ErrorCode::CorruptLog, "expected sequence number " + std::to_string(expected) + ", found " +
                                             std::to_string(e.seq), expected);
    events.push_back(std::move(e));
  }
  if (events.empty() || events.front().kind != "genesis")
    throw Error(ErrorCode::CorruptLog, "log does not start with a genesis event", 1);

  const auto& g = events.front();
  std::unique_ptr<Session> s;
  try {
    auto script = parse_structured_script(g.payload.at("script").get<std::string>());
    auto config = Config::from_json(g.payload.at("config"));
    double planned = g.payload.at("planned_minutes").get<double>();
    s.reset(new Session(std::move(script), config, gateway, planned, g.t));
    if (gateway) s->embeddings_ = std::make_shared<QuestionEmbeddings>(embed_script(s->script_, *gateway));
  } catch (const json::exception& ex) {
    throw Error(ErrorCode::CorruptLog, std::string("bad genesis event: ") + ex.what(), 1);
  } catch (const Error& ex) {
    if (ex.code() == ErrorCode::CorruptLog) throw;
    throw Error(ErrorCode::CorruptLog, std::string("bad genesis event: ") + ex.what(), 1);
  }
  s->log_.push_back(g);

  for (std::size_t i = 1; i < events.size(); ++i) {
    const auto& e = events[i];
    if (classify(e.kind) == EventClass::Derived) {
      if (i >= s->log_.size() || to_line(s->log_[i]) != to_line(e))
        throw Error(ErrorCode::CorruptLog, "derived event does not match the replayed state", e.seq);
      continue;
    }
    if (s->log_.size() != i)
      throw Error(ErrorCode::CorruptLog, "replayed state produced different derived events", e.seq);
    std::optional<std::string> client;
    if (e.kind == "client_connect") client = opt_string(e.payload, "client");
    s->apply(e.kind, e.payload, e.t, client);
    if (s->log_[i].t != e.t)
      throw Error(ErrorCode::CorruptLog, "event time does not match the replayed clock", e.seq);
  }
  return s;
}

std::vector<std::string> Session::log_lines() const {
  std::vector<std::string> out;
  out.reserve(log_.size());
  for (const auto& e : log_) out.push_back(to_line(e));
  return out;
}

SessionEvent& Session::emit(Ctx& ctx, std::string kind, json payload) {
  SessionEvent e{log_.size() + 1, ctx.t, std::move(kind), std::move(payload)};
  log_.push_back(std::move(e));
  auto& back = log_.back();
  ctx.result.events.push_back(back);
  if (back.kind != "tick")
    ctx.result.messages.push_back({std::nullopt, {{"type", "delta"}, {"protocol", kProtocolVersion},
                                                  {"event", to_json(back)}}});
  if (ctx.result.events.size() > 1 && back.kind != "error") ctx.result.state_changed = true;
  return back;
}

void Session::submit(Job job) {
  ++pending_jobs_;
  if (sink_) sink_->submit(std::move(job));
}

ApplyResult Session::apply(const std::string& kind, const json& payload, Seconds t,
                           const std::optional<std::string>& client) {
  EventClass cls;
  try {
    cls = classify(kind);
  } catch (const Error&) {
    throw Error(ErrorCode::MalformedEvent, "unknown event kind '" + kind + "'");
  }
  if (cls == EventClass::Derived || kind == "genesis")
    throw Error(ErrorCode::MalformedEvent, "'" + kind + "' events are produced by the engine");

  Ctx ctx{{}, std::max(t, now_), client};
  now_ = ctx.t;
  emit(ctx, kind, payload);
  if (cls == EventClass::Completion && pending_jobs_ > 0) --pending_jobs_;

  auto fail = [&](const std::string& code, const std::string& message) {
    std::uint64_t seq = ctx.result.events.front().seq;
    emit(ctx, "error", {{"code", code}, {"message", message}, {"event_seq", seq}});
    json msg = {{"type", "error"}, {"protocol", kProtocolVersion}, {"code", code}, {"message", message},
                {"seq", seq}};
    ctx.result.messages.push_back({client, msg});
  };

  try {
    if (kind == "segment") on_segment(ctx, payload);
    else if (kind == "tick") on_tick(ctx);
    else if (kind == "vad_pause") on_pause(ctx, ctx.t);
    else if (kind == "manual_select") on_manual_select(ctx, payload);
    else if (kind == "reorder") on_reorder(ctx, payload);
    else if (kind == "create_tag") on_create_tag(ctx, payload);
    else if (kind == "delete_tag") on_delete_tag(ctx, payload);
    else if (kind == "request_summary") on_request_summary(ctx, payload);
    else if (kind == "hover_expand") on_hover_expand(ctx, payload);
    else if (kind == "flush") on_flush(ctx);
    else if (kind == "client_connect") {
      json msg = {{"type", "snapshot"}, {"protocol", kProtocolVersion}, {"state", snapshot()}};
      ctx.result.messages.push_back({client, std::move(msg)});
    } else if (kind == "rejected") {
      fail(payload.value("code", std::string(to_string(ErrorCode::MalformedEvent))),
           payload.value("message", std::string("rejected message")));
    } else if (kind == "detection_result") on_detection_result(ctx, payload);
    else if (kind == "situation_result") on_situation_result(ctx, payload);
    else if (kind == "judge_result") on_judge_result(ctx, payload);
    else if (kind == "summary_result") on_summary_result(ctx, payload);
    else if (kind == "expand_result") on_expand_result(ctx, payload);
  } catch (const Error& e) {
    fail(std::string(to_string(e.code())), e.what());
  } catch (const json::exception& e) {
    fail(std::string(to_string(ErrorCode::MalformedEvent)), e.what());
  }
  return std::move(ctx.result);
}

// ---------------------------------------------------------------------------
// Input handlers

void Session::on_segment(Ctx& ctx, const json& payload) {
  auto seg = segment_from_json(payload);
  auto triggers = ingest_.push_segment(seg);
  if (seg.final) {
    talk_.record_speech(seg);
    if (seg.speaker == Speaker::Interviewee && agent_.enabled() && !tokenize(seg.text).empty()) {
      auto observe = agent_.context_for(std::string(to_string(seg.speaker)), seg.text);
      agent_.remember_utterance(seg.text);
      json base = {{"observe_id", "obs-" + std::to_string(next_observe_++)},
                   {"span_start", seg.start},
                   {"span_end", seg.end}};
      auto gateway = gateway_;
      Seconds timeout = config_.gateway_timeout;
      submit({ctx.t, [gateway, observe, base, timeout] {
                return guarded("situation_result", base, timeout, [&](Seconds& latency) {
                  auto found = gateway->detect_situation(observe, &latency);
                  if (!found) return json{{"situation", nullptr}};
                  return json{{"situation", {{"excerpt", found->excerpt}, {"code", to_string(found->code)}}}};
                });
              }});
    }
  }
  handle_triggers(ctx, triggers);
}

void Session::handle_triggers(Ctx& ctx, const std::vector<PipelineTrigger>& triggers) {
  for (const auto& trigger : triggers) {
    if (const auto* w = std::get_if<WindowReady>(&trigger)) start_detection(ctx, w->window);
    else on_pause(ctx, std::get<PauseDetected>(trigger).at);
  }
}

void Session::start_detection(Ctx& ctx, const DialogueWindow& window) {
  std::uint64_t id = next_window_++;
  emit(ctx, "window_ready",
       {{"window_id", id},
        {"start", window.segments.empty() ? 0.0 : window.segments.front().start},
        {"end", window.end()},
        {"words", window.word_count},
        {"sentence_boundary", window.closed_at_sentence_boundary}});
  json base = {{"window_id", id}, {"window_end", window.end()}};
  auto gateway = gateway_;
  auto embeddings = embeddings_;
  std::string text = window.text();
  double threshold = config_.similarity_threshold;
  Seconds timeout = config_.gateway_timeout;
  submit({ctx.t, [gateway, embeddings, text, base, threshold, timeout] {
            return guarded("detection_result", base, timeout, [&](Seconds& latency) {
              if (!gateway || !embeddings) throw Error(ErrorCode::BackendUnavailable, "no embedding backend");
              auto v = gateway->embed({text}, &latency);
              auto det = detect(v.front(), *embeddings, threshold, base["window_end"].get<double>());
              // The best similarity is reported even below the threshold.
              double best = 0;
              for (const auto& [id, q] : embeddings->vectors) best = std::max(best, cosine(v.front(), q));
              return json{{"question_id", det ? json(det->question_id) : json(nullptr)},
                          {"similarity", det ? det->similarity : best}};
            });
          }});
}

void Session::on_tick(Ctx& ctx) {
  for (const auto& c : agent_.queue().expire(ctx.t))
    emit(ctx, "candidate_expired", {{"window_id", c.window_id}, {"ready_at", c.ready_at}});
  if (auto closed = agent_.aggregator().tick(ctx.t)) close_window(ctx, std::move(*closed));
  handle_triggers(ctx, ingest_.tick(ctx.t));
  if (!last_timer_publish_ || to_micros(ctx.t) - *last_timer_publish_ >= to_micros(config_.ratio_cadence))
    publish_timer(ctx);
}

void Session::publish_timer(Ctx& ctx) {
  std::optional<Seconds> since;
  if (last_timer_publish_) since = to_seconds(*last_timer_publish_);
  last_timer_publish_ = to_micros(ctx.t);
  emit(ctx, "timer", to_json(talk_.snapshot(ctx.t, since)));
}

void Session::on_pause(Ctx& ctx, Seconds at) {
  emit(ctx, "pause", {{"at", at}});
  for (const auto& c : agent_.queue().expire(ctx.t))
    emit(ctx, "candidate_expired", {{"window_id", c.window_id}, {"ready_at", c.ready_at}});
  auto c = agent_.queue().pop_for_pause(ctx.t);
  if (!c) return;
  auto anchor = script_.ongoing();
  const auto& tag = capture_.add_suggestion(anchor, c->tag.code, c->tag.excerpt, ctx.t);
  auto& s = agent_.surface(tag.id, *c);
  json sj = suggestion_json(s, anchor);
  sj["window_id"] = c->window_id;
  sj["scores"] = scores_json(c->scores);
  emit(ctx, "suggestion", sj);
  ctx.result.messages.push_back(
      {std::nullopt, {{"type", "suggestion"}, {"protocol", kProtocolVersion}, {"suggestion", sj}}});
}

void Session::note_status(Ctx& ctx, const StatusChange& change, StatusSource source) {
  emit(ctx, "status",
       {{"question_id", change.id},
        {"status", "ongoing"},
        {"source", to_string(source)},
        {"changed", change.changed},
        {"displaced", opt_json(change.displaced)}});
  if (change.changed) talk_.enter_stage(script_.stage_of(change.id), ctx.t);
}

void Session::on_manual_select(Ctx& ctx, const json& payload) {
  auto id = payload.at("question_id").get<std::string>();
  auto delta = tracker_.apply_manual_selection(script_, id, ctx.t);
  if (delta.change) note_status(ctx, *delta.change, StatusSource::Manual);
  emit(ctx, "suspension", {{"question_id", id}, {"until", *tracker_.suspended_until()}});
}

void Session::on_reorder(Ctx& ctx, const json& payload) {
  auto id = payload.at("question_id").get<std::string>();
  auto index = payload.at("index").get<std::size_t>();
  script_.reorder(id, index);
  auto ids = script_.ordered_ids();
  if (embeddings_) {
    auto copy = std::make_shared<QuestionEmbeddings>(*embeddings_);
    copy->reorder(ids);
    embeddings_ = std::move(copy);
  }
  emit(ctx, "reordered", {{"question_id", id}, {"index", index}, {"order", ids}});
}

void Session::on_create_tag(Ctx& ctx, const json& payload) {
  const auto& tag = capture_.create_manual_tag(script_, payload.at("question_id").get<std::string>(),
                                               payload.at("text").get<std::string>(), ctx.t);
  agent_.add_note(tag.text);
  emit(ctx, "tag", to_json(tag));
}

void Session::on_delete_tag(Ctx& ctx, const json& payload) {
  auto id = payload.at("tag_id").get<std::string>();
  capture_.delete_tag(id);
  emit(ctx, "tag_deleted", {{"tag_id", id}});
}

void Session::on_request_summary(Ctx& ctx, const json& payload) {
  auto focus = opt_string(payload, "focus_question");
  if (focus && !script_.contains(*focus)) throw Error(ErrorCode::UnknownId, "unknown question id '" + *focus + "'");
  auto anchor = focus ? focus : script_.ongoing();
  const auto& r = capture_.request_summary(ingest_, config_.ring_seconds, anchor, ctx.t);
  emit(ctx, "summary_pending", to_json(r));

  json segments = json::array();
  for (const auto& seg : r.window.segments) segments.push_back(to_json(seg));
  std::optional<std::string> focus_text;
  if (focus) focus_text = script_.question(*focus).text;
  std::string transcript;
  for (const auto& seg : r.window.segments)
    transcript += std::string(to_string(seg.speaker)) + ": " + seg.text + "\n";
  json base = {{"request_id", r.id}};
  auto gateway = gateway_;
  Seconds timeout = config_.gateway_timeout;
  submit({ctx.t, [gateway, transcript, segments, focus_text, base, timeout] {
            return guarded("summary_result", base, timeout, [&](Seconds& latency) {
              if (!gateway) throw Error(ErrorCode::BackendUnavailable, "no backend");
              auto result = gateway->summarize(transcript, segments, focus_text);
              latency = result.latency;
              return json{{"text", result.parsed->get<std::string>()}};
            });
          }});
}

void Session::on_hover_expand(Ctx& ctx, const json& payload) {
  auto id = payload.at("suggestion_id").get<std::string>();
  auto* s = agent_.find(id);
  if (!s) throw Error(ErrorCode::UnknownId, "unknown suggestion '" + id + "'");
  if (s->expansion) {
    const auto* tag = capture_.find_tag(id);
    json sj = suggestion_json(*s, tag ? tag->question_id : std::nullopt);
    ctx.result.messages.push_back(
        {ctx.client, {{"type", "suggestion"}, {"protocol", kProtocolVersion}, {"suggestion", sj}}});
    return;
  }
  if (s->expansion_pending) return;
  s->expansion_pending = true;
  json base = {{"suggestion_id", id}};
  auto gateway = gateway_;
  auto code = s->tag.code;
  auto excerpt = s->tag.excerpt;
  auto transcript = recent_transcript();
  Seconds timeout = config_.gateway_timeout;
  submit({ctx.t, [gateway, code, excerpt, transcript, base, timeout] {
            return guarded("expand_result", base, timeout, [&](Seconds& latency) {
              if (!gateway) throw Error(ErrorCode::BackendUnavailable, "no backend");
              auto result = gateway->expand(code, excerpt, transcript);
              latency = result.latency;
              return json{{"text", result.parsed->get<std::string>()}};
            });
          }});
}

void Session::on_flush(Ctx& ctx) {
  handle_triggers(ctx, ingest_.flush());
  if (auto closed = agent_.aggregator().flush(ctx.t)) close_window(ctx, std::move(*closed));
}

// ---------------------------------------------------------------------------
// Completion handlers

void Session::on_detection_result(Ctx& ctx, const json& payload) {
  if (auto it = payload.find("error"); it != payload.end()) {
    emit(ctx, "error", {{"code", it->at("code")}, {"message", it->at("message")},
                        {"window_id", payload.at("window_id")}});
    return;
  }
  auto qid = opt_string(payload, "question_id");
  if (!qid) return;
  QuestionDetection det;
  det.question_id = *qid;
  det.similarity = payload.at("similarity").get<double>();
  det.opacity = opacity_for(det.similarity);
  det.window_end = payload.at("window_end").get<double>();
  auto delta = tracker_.apply_detection(script_, det, ctx.t);
  if (delta.discarded) {
    emit(ctx, "detection_discarded",
         {{"question_id", det.question_id},
          {"similarity", det.similarity},
          {"window_end", det.window_end},
          {"reason", to_string(*delta.discarded)}});
    return;
  }
  emit(ctx, "detection_applied",
       {{"question_id", det.question_id},
        {"similarity", det.similarity},
        {"opacity", delta.opacity},
        {"window_end", det.window_end},
        {"window_id", payload.at("window_id")},
        {"changed", delta.change && delta.change->changed},
        {"displaced", delta.change ? opt_json(delta.change->displaced) : json(nullptr)}});
  if (delta.change && delta.change->changed) talk_.enter_stage(script_.stage_of(det.question_id), ctx.t);
}

void Session::on_situation_result(Ctx& ctx, const json& payload) {
  if (auto it = payload.find("error"); it != payload.end()) {
    auto code = it->at("code").get<std::string>();
    if (code == to_string(ErrorCode::BackendUnavailable) || code == to_string(ErrorCode::Timeout)) {
      if (agent_.enabled()) {
        agent_.disable();
        emit(ctx, "agent_disabled", {{"reason", *it}});
      }
      return;
    }
    emit(ctx, "error", {{"code", code}, {"message", it->at("message")}, {"observe_id", payload.at("observe_id")}});
    return;
  }
  if (!agent_.enabled()) return;
  const auto& found = payload.at("situation");
  if (found.is_null()) return;
  auto code = situation_from_string(found.at("code").get<std::string>());
  auto excerpt = found.at("excerpt").get<std::string>();
  if (!code || excerpt.empty()) throw Error(ErrorCode::SchemaError, "situation outside the scheme");
  SituationTag tag{excerpt, *code, ctx.t, payload.at("span_start").get<double>(),
                   payload.at("span_end").get<double>()};
  emit(ctx, "situation", to_json(tag));
  if (auto closed = agent_.aggregator().add(tag, ctx.t)) close_window(ctx, std::move(*closed));
}

void Session::close_window(Ctx& ctx, ClosedWindow window) {
  json tags = json::array();
  for (const auto& t : window.tags) tags.push_back(to_json(t));
  emit(ctx, "window_closed",
       {{"window_id", window.id}, {"opened_at", window.opened_at}, {"closed_at", window.closed_at}, {"tags", tags}});
  auto id = window.id;
  judging_[id] = std::move(window);
  start_judge(judging_[id], 0);
}

void Session::start_judge(const ClosedWindow& window, int attempt) {
  std::vector<JudgeItem> items;
  for (const auto& t : window.tags) items.push_back({t.excerpt, t.code});
  json base = {{"window_id", window.id}, {"attempt", attempt}};
  auto gateway = gateway_;
  auto transcript = recent_transcript();
  Seconds timeout = config_.gateway_timeout;
  submit({window.closed_at, [gateway, items, transcript, base, timeout] {
            return guarded("judge_result", base, timeout, [&](Seconds& latency) {
              if (!gateway) throw Error(ErrorCode::BackendUnavailable, "no backend");
              auto scores = gateway->judge(items, transcript, &latency);
              json out = json::array();
              for (const auto& s : scores) out.push_back(scores_json(s));
              return json{{"scores", out}};
            });
          }});
}

void Session::on_judge_result(Ctx& ctx, const json& payload) {
  auto id = payload.at("window_id").get<std::uint64_t>();
  auto it = judging_.find(id);
  if (it == judging_.end()) return;  // already settled
  if (auto err = payload.find("error"); err != payload.end()) {
    if (payload.value("attempt", 0) == 0) {
      emit(ctx, "judge_retry", {{"window_id", id}, {"error", *err}});
      it->second.closed_at = ctx.t;
      start_judge(it->second, 1);
    } else {
      emit(ctx, "candidate_dropped", {{"window_id", id}, {"reason", "gateway"}, {"error", *err}});
      judging_.erase(it);
    }
    return;
  }
  ClosedWindow window = std::move(it->second);
  judging_.erase(it);
  std::vector<CriterionScores> scores;
  for (const auto& s : payload.at("scores")) scores.push_back(scores_from_json(s));
  auto index = select_candidate(window.tags, scores);
  const auto& tag = window.tags[index];
  if (agent_.is_duplicate(tag.excerpt)) {
    emit(ctx, "candidate_dropped", {{"window_id", id}, {"reason", "duplicate"}, {"index", index}});
    return;
  }
  Candidate c{id, tag, scores[index], window.closed_at};
  json all = json::array();
  for (const auto& s : scores) all.push_back(scores_json(s));
  emit(ctx, "candidate", {{"window_id", id}, {"index", index}, {"tag", to_json(tag)}, {"scores", all},
                          {"ready_at", c.ready_at}});
  agent_.queue().push(std::move(c));
}

void Session::on_summary_result(Ctx& ctx, const json& payload) {
  auto id = payload.at("request_id").get<std::string>();
  if (auto err = payload.find("error"); err != payload.end()) {
    const auto& r = capture_.fail_summary(id, err->at("code").get<std::string>(), ctx.t);
    emit(ctx, "summary_failed", to_json(r));
    return;
  }
  const auto& tag = capture_.fulfill_summary(id, payload.at("text").get<std::string>(), ctx.t);
  agent_.add_note(tag.text);
  json j = to_json(*capture_.find_request(id));
  j["tag"] = to_json(tag);
  emit(ctx, "summary_fulfilled", j);
}

void Session::on_expand_result(Ctx& ctx, const json& payload) {
  auto id = payload.at("suggestion_id").get<std::string>();
  auto* s = agent_.find(id);
  if (!s) return;
  s->expansion_pending = false;
  if (auto err = payload.find("error"); err != payload.end()) {
    emit(ctx, "expansion", {{"suggestion_id", id}, {"text", nullptr}, {"error", *err}});
    return;
  }
  s->expansion = payload.at("text").get<std::string>();
  emit(ctx, "expansion", {{"suggestion_id", id}, {"text", *s->expansion}});
  const auto* tag = capture_.find_tag(id);
  json sj = suggestion_json(*s, tag ? tag->question_id : std::nullopt);
  ctx.result.messages.push_back(
      {std::nullopt, {{"type", "suggestion"}, {"protocol", kProtocolVersion}, {"suggestion", sj}}});
}

// ---------------------------------------------------------------------------

std::string Session::recent_transcript() const {
  std::string out;
  for (const auto& seg : ingest_.ring().segments())
    out += std::string(to_string(seg.speaker)) + ": " + seg.text + "\n";
  return out;
}

json Session::snapshot() const {
  auto ongoing = script_.ongoing();
  json tags = json::array();
  for (const auto& t : capture_.tags()) tags.push_back(to_json(t));
  json requests = json::array();
  for (const auto& r : capture_.requests()) requests.push_back(to_json(r));
  json pending = json::array();
  for (const auto& c : agent_.queue().pending()) pending.push_back(candidate_json(c));
  json suggestions = json::array();
  for (const auto& s : agent_.surfaced()) {
    const auto* tag = capture_.find_tag(s.tag_id);
    suggestions.push_back(suggestion_json(s, tag ? tag->question_id : std::nullopt));
  }
  auto until = tracker_.suspended_until();
  return {{"protocol", kProtocolVersion},
          {"seq", log_.empty() ? 0 : log_.back().seq},
          {"at", now_},
          {"script", to_json(script_)},
          {"highlight", {{"question_id", opt_json(ongoing)}, {"opacity", ongoing ? tracker_.opacity() : 0.0}}},
          {"suspended_until", until && to_micros(*until) > to_micros(now_) ? json(*until) : json(nullptr)},
          {"timer", to_json(talk_.snapshot(now_, now_ - 300.0))},
          {"tags", tags},
          {"summary_requests", requests},
          {"pending_candidates", pending},
          {"suggestions", suggestions},
          {"agent_enabled", agent_.enabled()},
          {"config", config_.to_json()}};
}

}  // namespace interflow
