#include "interflow/timing.hpp"

#include <algorithm>

#include "interflow/errors.hpp"

namespace interflow {

using nlohmann::json;

namespace {

struct Shares {
  std::optional<double> interviewer;
  std::optional<double> interviewee;
};

// The larger share is divided out and the smaller one is 1 minus it; the
// subtraction is exact (Sterbenz), so the pair sums to exactly 1.
Shares shares(Micros interviewer, Micros interviewee) {
  if (interviewer + interviewee == 0) return {};
  const double total = static_cast<double>(interviewer + interviewee);
  if (interviewer >= interviewee) {
    double a = static_cast<double>(interviewer) / total;
    return {a, 1.0 - a};
  }
  double b = static_cast<double>(interviewee) / total;
  return {1.0 - b, b};
}

json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace

json to_json(const TimerView& v) {
  json stages = json::array();
  for (const auto& s : v.stages)
    stages.push_back({{"name", s.name},
                      {"elapsed", to_seconds(s.elapsed)},
                      {"interviewer", to_seconds(s.interviewer)},
                      {"interviewee", to_seconds(s.interviewee)},
                      {"unknown", to_seconds(s.unknown)},
                      {"interviewer_share", opt(s.interviewer_share)},
                      {"interviewee_share", opt(s.interviewee_share)}});
  json speech = json::array();
  for (const auto& i : v.recent_speech)
    speech.push_back({{"start", to_seconds(i.start)},
                      {"end", to_seconds(i.end)},
                      {"speaker", to_string(i.speaker)},
                      {"stage", i.stage}});
  return {{"at", v.at},
          {"stages", stages},
          {"current_stage", v.current_stage},
          {"planned_minutes", v.planned_minutes},
          {"overall_elapsed", to_seconds(v.overall_elapsed)},
          {"session_interviewer_share", opt(v.session_interviewer_share)},
          {"recent_speech", speech}};
}

TalkStats::TalkStats(std::vector<std::string> stage_names, double planned_minutes, Seconds start)
    : names_(std::move(stage_names)),
      planned_minutes_(planned_minutes),
      start_(to_micros(start)),
      buckets_(names_.size()),
      entered_(start_) {
  if (names_.empty()) throw Error(ErrorCode::UnknownStage, "timer needs at least one stage");
}

void TalkStats::enter_stage(std::size_t stage, Seconds now) {
  if (stage >= names_.size())
    throw Error(ErrorCode::UnknownStage, "unknown stage index " + std::to_string(stage));
  if (stage == current_) return;
  Micros t = std::max(to_micros(now), entered_);
  buckets_[current_].closed_elapsed += t - entered_;
  current_ = stage;
  entered_ = t;
}

void TalkStats::record_speech(const TranscriptSegment& seg) {
  if (!seg.final) return;
  Micros s = to_micros(seg.start);
  Micros e = to_micros(seg.end);
  Micros d = e - s;
  if (d <= 0) return;
  auto& b = buckets_[current_];
  switch (seg.speaker) {
    case Speaker::Interviewer: b.interviewer += d; break;
    case Speaker::Interviewee: b.interviewee += d; break;
    case Speaker::Unknown: b.unknown += d; break;
  }
  intervals_.push_back({s, e, seg.speaker, current_});
}

TimerView TalkStats::snapshot(Seconds now, std::optional<Seconds> recent_since) const {
  TimerView v;
  v.at = now;
  v.current_stage = current_;
  v.planned_minutes = planned_minutes_;
  Micros t = std::max(to_micros(now), entered_);
  v.overall_elapsed = t - start_;
  Micros interviewer = 0, interviewee = 0;
  for (std::size_t i = 0; i < names_.size(); ++i) {
    const auto& b = buckets_[i];
    StageTime st;
    st.name = names_[i];
    st.elapsed = b.closed_elapsed + (i == current_ ? t - entered_ : 0);
    st.interviewer = b.interviewer;
    st.interviewee = b.interviewee;
    st.unknown = b.unknown;
    auto sh = shares(b.interviewer, b.interviewee);
    st.interviewer_share = sh.interviewer;
    st.interviewee_share = sh.interviewee;
    interviewer += b.interviewer;
    interviewee += b.interviewee;
    v.stages.push_back(std::move(st));
  }
  v.session_interviewer_share = shares(interviewer, interviewee).interviewer;
  if (recent_since) {
    Micros since = to_micros(*recent_since);
    for (const auto& i : intervals_)
      if (i.end > since) v.recent_speech.push_back(i);
  } else {
    v.recent_speech = intervals_;
  }
  return v;
}

}  // namespace interflow
