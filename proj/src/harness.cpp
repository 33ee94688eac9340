#include "interflow/harness.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "interflow/errors.hpp"
#include "interflow/runtime.hpp"
#include "interflow/transcript.hpp"

namespace interflow {

using nlohmann::json;

std::vector<ReplayRecord> parse_replay(std::istream& in) {
  std::vector<ReplayRecord> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      auto m = json::parse(line);
      if (!m.is_object()) throw Error(ErrorCode::ParseError, "record must be an object", lineno);
      std::string type = m.value("type", "segment");
      ReplayRecord r{0, m, lineno};
      if (type == "segment") {
        auto seg = segment_from_json(m.contains("segment") ? m.at("segment") : m);
        r.t = m.contains("t") ? m.at("t").get<double>() : seg.end;
      } else {
        if (!m.contains("t") || !m.at("t").is_number())
          throw Error(ErrorCode::ParseError, "record of type '" + type + "' needs a numeric t", lineno);
        r.t = m.at("t").get<double>();
      }
      out.push_back(std::move(r));
    } catch (const json::exception& e) {
      throw Error(ErrorCode::ParseError, std::string("replay line is not valid JSON: ") + e.what(), lineno);
    } catch (const Error& e) {
      if (e.location()) throw;
      throw Error(ErrorCode::ParseError, e.what(), lineno);
    }
  }
  return out;
}

std::vector<ReplayRecord> load_replay_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ParseError, "cannot open transcript " + path);
  return parse_replay(in);
}

Annotations annotations_from_json(const json& j) {
  Annotations a;
  try {
    for (const auto& q : j.value("asked", json::array()))
      a.asked.push_back({q.at("question_id").get<std::string>(), q.at("start").get<double>(), q.at("end").get<double>()});
    for (const auto& s : j.value("adopted", json::array())) a.adopted.push_back(s.get<std::string>());
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("bad annotations: ") + e.what());
  }
  std::stable_sort(a.asked.begin(), a.asked.end(),
                   [](const AskedQuestion& x, const AskedQuestion& y) { return x.start < y.start; });
  return a;
}

Annotations load_annotations(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ParseError, "cannot open annotations " + path);
  try {
    return annotations_from_json(json::parse(in));
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ParseError, path + ": " + e.what());
  }
}

namespace {

std::optional<double> mean(const std::vector<double>& v) {
  if (v.empty()) return std::nullopt;
  double s = 0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace

MetricsReport compute_metrics(const std::vector<SessionEvent>& log, const std::optional<Annotations>& ann) {
  MetricsReport r;
  std::set<std::uint64_t> failed_inputs;
  for (const auto& e : log)
    if (e.kind == "error" && e.payload.contains("event_seq")) failed_inputs.insert(e.payload["event_seq"].get<std::uint64_t>());

  struct Mark {
    Seconds t;
    std::string id;
  };
  std::vector<Mark> highlights, manuals;
  std::vector<double> pipeline, summary;
  std::set<std::string> surfaced;
  for (const auto& e : log) {
    if (e.kind == "detection_result") {
      if (e.payload.contains("question_id") && !e.payload["question_id"].is_null()) ++r.detections;
    } else if (e.kind == "detection_applied") {
      ++r.highlights;
      highlights.push_back({e.t, e.payload["question_id"].get<std::string>()});
      pipeline.push_back(e.t - e.payload["window_end"].get<double>());
    } else if (e.kind == "manual_select") {
      if (!failed_inputs.count(e.seq) && e.payload.contains("question_id"))
        manuals.push_back({e.t, e.payload["question_id"].get<std::string>()});
    } else if (e.kind == "summary_fulfilled") {
      ++r.summaries;
      summary.push_back(e.payload["completed_at"].get<double>() - e.payload["issued_at"].get<double>());
    } else if (e.kind == "summary_failed") {
      ++r.failed_summaries;
    } else if (e.kind == "tag") {
      if (e.payload.value("kind", "") == "manual") ++r.manual_tags;
    } else if (e.kind == "suggestion") {
      ++r.suggestions;
      ++r.suggestions_by_code[e.payload["code"].get<std::string>()];
      surfaced.insert(e.payload["id"].get<std::string>());
    } else if (e.kind == "window_closed") {
      ++r.suggestion_windows;
    }
  }
  r.mean_pipeline_latency = mean(pipeline);
  r.mean_summary_latency = mean(summary);

  if (ann) {
    r.annotated = true;
    r.asked = ann->asked.size();
    std::vector<double> latencies;
    for (std::size_t i = 0; i < ann->asked.size(); ++i) {
      const auto& q = ann->asked[i];
      Seconds lo = q.start;
      Seconds hi = i + 1 < ann->asked.size() ? ann->asked[i + 1].start : std::numeric_limits<double>::infinity();
      auto in_span = [&](const Mark& m) { return m.id == q.question_id && m.t >= lo && m.t < hi; };
      QuestionOutcome o{q.question_id, q.start, q.end, false, false, std::nullopt, std::nullopt};
      o.manual = std::any_of(manuals.begin(), manuals.end(), in_span);
      auto hit = std::find_if(highlights.begin(), highlights.end(), in_span);
      if (hit != highlights.end()) o.highlighted_at = hit->t;
      o.correct = o.highlighted_at && !o.manual;
      if (o.correct) {
        o.latency = *o.highlighted_at - q.end;
        latencies.push_back(*o.latency);
        ++r.correct;
      }
      if (o.manual) ++r.manual_overrides;
      r.questions.push_back(std::move(o));
    }
    if (r.asked > 0) r.accuracy = static_cast<double>(r.correct) / static_cast<double>(r.asked);
    r.mean_detection_latency = mean(latencies);
    std::size_t adopted = 0;
    for (const auto& id : ann->adopted) adopted += surfaced.count(id);
    r.adopted = adopted;
  }
  return r;
}

json to_json(const MetricsReport& r) {
  json questions = json::array();
  for (const auto& q : r.questions)
    questions.push_back({{"question_id", q.question_id},
                         {"start", q.start},
                         {"end", q.end},
                         {"correct", q.correct},
                         {"manual", q.manual},
                         {"highlighted_at", opt(q.highlighted_at)},
                         {"latency", opt(q.latency)}});
  return {{"annotated", r.annotated},
          {"asked", r.annotated ? json(r.asked) : json(nullptr)},
          {"correct", r.annotated ? json(r.correct) : json(nullptr)},
          {"manual_overrides", r.annotated ? json(r.manual_overrides) : json(nullptr)},
          {"accuracy", opt(r.accuracy)},
          {"mean_detection_latency", opt(r.mean_detection_latency)},
          {"mean_pipeline_latency", opt(r.mean_pipeline_latency)},
          {"detections", r.detections},
          {"highlights", r.highlights},
          {"summaries", r.summaries},
          {"failed_summaries", r.failed_summaries},
          {"mean_summary_latency", opt(r.mean_summary_latency)},
          {"manual_tags", r.manual_tags},
          {"suggestions", r.suggestions},
          {"suggestions_by_code", r.suggestions_by_code},
          {"suggestion_windows", r.suggestion_windows},
          {"adopted", r.adopted ? json(*r.adopted) : json(nullptr)},
          {"questions", questions}};
}

std::string format_structured(const MetricsReport& r) { return to_json(r).dump(2); }

std::string format_table(const MetricsReport& r) {
  auto num = [](const std::optional<double>& v, const char* unit) {
    return v ? fmt::format("{:.2f}{}", *v, unit) : std::string("N/A");
  };
  auto count = [&](std::size_t v) { return r.annotated ? std::to_string(v) : std::string("N/A"); };
  std::string out;
  out += "Field reference averages (live ASR and embeddings, not reproduced here):\n";
  out += "  accuracy 0.58, detection latency 8.9 s, summary latency 4.2 s\n\n";
  auto row = [&](const std::string& k, const std::string& v) { out += fmt::format("{:<30}{:>12}\n", k, v); };
  row("questions asked", count(r.asked));
  row("detected automatically", count(r.correct));
  row("manual overrides", count(r.manual_overrides));
  row("detection accuracy", num(r.accuracy, ""));
  row("mean detection latency", num(r.mean_detection_latency, " s"));
  row("mean pipeline latency", num(r.mean_pipeline_latency, " s"));
  row("windows matched", std::to_string(r.detections));
  row("highlights applied", std::to_string(r.highlights));
  row("summaries", std::to_string(r.summaries));
  row("failed summaries", std::to_string(r.failed_summaries));
  row("mean summary latency", num(r.mean_summary_latency, " s"));
  row("manual tags", std::to_string(r.manual_tags));
  row("suggestion windows", std::to_string(r.suggestion_windows));
  row("suggestions surfaced", std::to_string(r.suggestions));
  for (const auto& [code, n] : r.suggestions_by_code) row("  situation " + code, std::to_string(n));
  if (r.adopted) row("suggestions adopted", std::to_string(*r.adopted));
  return out;
}

RunOutput run_session(std::string_view script_text, const std::vector<ReplayRecord>& records, const Config& config,
                      const std::optional<Annotations>& annotations) {
  auto gateway = make_gateway(config);
  auto session = Session::create(script_text, config, gateway, 0);
  VirtualRuntime rt(*session);
  const Seconds cadence = config.tick_seconds;
  for (const auto& rec : records) {
    const auto& m = rec.message;
    if (m.value("type", "segment") == "segment") {
      const auto& body = m.contains("segment") ? m.at("segment") : m;
      auto seg = segment_from_json(body);
      auto words = tokenize(seg.text);
      if (seg.final && !words.empty()) {
        // Partial hypotheses grow word by word over the utterance.
        Micros span = to_micros(seg.end) - to_micros(seg.start);
        for (Micros at = to_micros(seg.start); at < to_micros(seg.end); at += to_micros(cadence)) {
          auto n = static_cast<std::size_t>((at - to_micros(seg.start)) * static_cast<Micros>(words.size()) / span);
          n = std::clamp<std::size_t>(n, 1, words.size());
          std::string text = words[0];
          for (std::size_t i = 1; i < n; ++i) text += " " + words[i];
          TranscriptSegment partial{seg.start, to_seconds(at), seg.speaker, text, false};
          json msg = to_json(partial);
          msg["type"] = "segment";
          rt.post_client("replay", msg.dump(), to_seconds(at));
        }
      }
    }
    rt.post_client("replay", m.dump(), rec.t);
  }
  rt.finish(config.suggestion_gap + config.pause_seconds + 2 * config.tick_seconds);
  RunOutput out;
  out.report = compute_metrics(session->log(), annotations);
  out.snapshot = session->snapshot();
  out.log = session->log_lines();
  out.apply_micros = rt.apply_micros();
  return out;
}

SweepAxis parse_sweep(std::string_view spec) {
  auto eq = spec.find('=');
  if (eq == std::string_view::npos || eq == 0 || eq + 1 == spec.size())
    throw Error(ErrorCode::ConfigError, "sweep must look like key=v1,v2,...");
  SweepAxis axis{std::string(spec.substr(0, eq)), {}};
  std::string values(spec.substr(eq + 1));
  std::stringstream ss(values);
  std::string v;
  while (std::getline(ss, v, ','))
    if (!v.empty()) axis.values.push_back(v);
  if (axis.values.empty()) throw Error(ErrorCode::ConfigError, "sweep axis '" + axis.key + "' has no values");
  return axis;
}

std::vector<SweepResult> sweep(std::string_view script_text, const std::vector<ReplayRecord>& records,
                               const Config& base, const std::vector<SweepAxis>& grid,
                               const std::optional<Annotations>& annotations) {
  std::vector<SweepResult> out;
  if (grid.empty()) return out;
  std::vector<std::size_t> idx(grid.size(), 0);
  for (;;) {
    Config c = base;
    std::map<std::string, std::string> overrides;
    for (std::size_t a = 0; a < grid.size(); ++a) {
      c.set(grid[a].key, grid[a].values[idx[a]]);
      overrides[grid[a].key] = grid[a].values[idx[a]];
    }
    out.push_back({overrides, run_session(script_text, records, c, annotations).report});
    std::size_t a = grid.size();
    while (a > 0) {
      --a;
      if (++idx[a] < grid[a].values.size()) break;
      idx[a] = 0;
      if (a == 0) return out;
    }
  }
}

}  // namespace interflow
