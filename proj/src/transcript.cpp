#include "interflow/transcript.hpp"

#include <algorithm>
#include <array>
#include <cctype>

#include "interflow/errors.hpp"

namespace interflow {

using nlohmann::json;

std::string_view to_string(Speaker speaker) {
  switch (speaker) {
    case Speaker::Interviewer: return "interviewer";
    case Speaker::Interviewee: return "interviewee";
    case Speaker::Unknown: return "unknown";
  }
  return "unknown";
}

Speaker speaker_from_string(std::string_view s) {
  if (s == "interviewer") return Speaker::Interviewer;
  if (s == "interviewee") return Speaker::Interviewee;
  if (s == "unknown") return Speaker::Unknown;
  throw Error(ErrorCode::MalformedEvent, "unknown speaker '" + std::string(s) + "'");
}

json to_json(const TranscriptSegment& seg) {
  return {{"start", seg.start},
          {"end", seg.end},
          {"speaker", to_string(seg.speaker)},
          {"text", seg.text},
          {"final", seg.final}};
}

TranscriptSegment segment_from_json(const json& j) {
  try {
    TranscriptSegment seg;
    seg.start = j.at("start").get<double>();
    seg.end = j.at("end").get<double>();
    seg.speaker = speaker_from_string(j.at("speaker").get<std::string>());
    seg.text = j.at("text").get<std::string>();
    seg.final = j.value("final", true);
    if (!(seg.start <= seg.end))
      throw Error(ErrorCode::MalformedEvent, "segment start after end");
    return seg;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::MalformedEvent, std::string("bad segment: ") + e.what());
  }
}

std::string DialogueWindow::text() const {
  std::string out;
  for (const auto& seg : segments) {
    if (seg.text.empty()) continue;
    if (!out.empty()) out += ' ';
    out += seg.text;
  }
  return out;
}

json to_json(const DialogueWindow& w) {
  json segs = json::array();
  for (const auto& s : w.segments) segs.push_back(to_json(s));
  return {{"segments", segs},
          {"word_count", w.word_count},
          {"closed_at_sentence_boundary", w.closed_at_sentence_boundary}};
}

DialogueWindow window_from_json(const json& j) {
  DialogueWindow w;
  for (const auto& s : j.at("segments")) w.segments.push_back(segment_from_json(s));
  w.word_count = j.at("word_count").get<std::size_t>();
  w.closed_at_sentence_boundary = j.at("closed_at_sentence_boundary").get<bool>();
  return w;
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t start = i;
    while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    if (i > start) tokens.emplace_back(text.substr(start, i - start));
  }
  return tokens;
}

namespace {

constexpr std::array<std::string_view, 16> kAbbreviations = {
    "dr.", "mr.", "mrs.", "ms.", "prof.", "st.", "jr.", "sr.",
    "vs.", "e.g.", "i.e.", "etc.", "approx.", "no.", "inc.", "co.",
};

std::string join(const std::vector<std::string>& tokens, std::size_t from, std::size_t to) {
  std::string out;
  for (std::size_t i = from; i < to; ++i) {
    if (i > from) out += ' ';
    out += tokens[i];
  }
  return out;
}

}  // namespace

bool ends_sentence(std::string_view token) {
  while (!token.empty() && std::string_view("\"')]}").find(token.back()) != std::string_view::npos)
    token.remove_suffix(1);
  if (token.empty()) return false;
  char last = token.back();
  if (last != '.' && last != '!' && last != '?') return false;
  if (last == '.') {
    std::string lower(token);
    std::transform(lower.begin(), lower.end(), lower.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (std::find(kAbbreviations.begin(), kAbbreviations.end(), lower) != kAbbreviations.end())
      return false;
  }
  return true;
}

std::vector<std::size_t> detect_sentence_boundary(const std::vector<std::string>& tokens) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < tokens.size(); ++i)
    if (ends_sentence(tokens[i])) out.push_back(i);
  return out;
}

// ---------------------------------------------------------------------------
// Windower

std::size_t Windower::buffered_words() const {
  std::size_t n = 0;
  for (const auto& t : tokens_) n += t.size();
  return n;
}

DialogueWindow Windower::take(std::size_t words, bool boundary) {
  DialogueWindow w;
  w.word_count = words;
  w.closed_at_sentence_boundary = boundary;
  while (words > 0) {
    auto& seg = segments_.front();
    auto& toks = tokens_.front();
    if (toks.size() <= words) {
      words -= toks.size();
      w.segments.push_back(std::move(seg));
      segments_.pop_front();
      tokens_.pop_front();
    } else {
      TranscriptSegment head = seg;
      head.text = join(toks, 0, words);
      w.segments.push_back(std::move(head));
      toks.erase(toks.begin(), toks.begin() + static_cast<std::ptrdiff_t>(words));
      seg.text = join(toks, 0, toks.size());
      words = 0;
    }
  }
  // Wordless segments trailing the cut belong to the closed window.
  while (!segments_.empty() && tokens_.front().empty()) {
    w.segments.push_back(std::move(segments_.front()));
    segments_.pop_front();
    tokens_.pop_front();
  }
  return w;
}

std::vector<DialogueWindow> Windower::push(const TranscriptSegment& seg) {
  std::vector<DialogueWindow> out;
  if (!seg.final) return out;
  segments_.push_back(seg);
  tokens_.push_back(tokenize(seg.text));
  for (;;) {
    std::size_t index = 0;
    std::optional<std::size_t> cut;
    for (const auto& toks : tokens_) {
      for (const auto& tok : toks) {
        ++index;
        if (index >= min_words_ && ends_sentence(tok)) {
          cut = index;
          break;
        }
      }
      if (cut) break;
    }
    if (!cut) break;
    out.push_back(take(*cut, true));
  }
  return out;
}

std::optional<DialogueWindow> Windower::flush() {
  std::size_t words = buffered_words();
  if (words == 0) {
    segments_.clear();
    tokens_.clear();
    return std::nullopt;
  }
  bool boundary = false;
  for (auto it = tokens_.rbegin(); it != tokens_.rend(); ++it)
    if (!it->empty()) {
      boundary = ends_sentence(it->back());
      break;
    }
  return take(words, boundary);
}

// ---------------------------------------------------------------------------
// SegmentRing

void SegmentRing::push(const TranscriptSegment& seg) {
  segments_.push_back(seg);
  now_ = std::max(now_, seg.end);
  prune();
}

void SegmentRing::advance(Seconds now) {
  now_ = std::max(now_, now);
  prune();
}

void SegmentRing::prune() {
  const Seconds cutoff = now_ - horizon_;
  // Final segments arrive nearly sorted by end; tolerate small inversions.
  std::erase_if(segments_, [cutoff](const TranscriptSegment& s) { return s.end < cutoff; });
}

DialogueWindow SegmentRing::last(Seconds horizon) const {
  if (!(horizon > 0)) throw Error(ErrorCode::ConfigError, "horizon must be > 0");
  const Seconds cutoff = now_ - std::min(horizon, horizon_);
  DialogueWindow w;
  for (const auto& s : segments_) {
    if (s.end >= cutoff && s.start <= now_) {
      w.segments.push_back(s);
      w.word_count += tokenize(s.text).size();
    }
  }
  if (w.segments.empty()) throw Error(ErrorCode::EmptyBuffer, "no speech in the requested horizon");
  if (!w.segments.empty()) {
    auto toks = tokenize(w.segments.back().text);
    w.closed_at_sentence_boundary = !toks.empty() && ends_sentence(toks.back());
  }
  return w;
}

// ---------------------------------------------------------------------------
// TranscriptIngest

TranscriptIngest::TranscriptIngest(IngestOptions options)
    : options_(options), windower_(options.window_words), ring_(options.ring_seconds) {}

std::vector<PipelineTrigger> TranscriptIngest::push_segment(const TranscriptSegment& seg) {
  if (!(seg.start <= seg.end)) throw Error(ErrorCode::MalformedEvent, "segment start after end");
  std::vector<PipelineTrigger> triggers;
  const bool has_words = !tokenize(seg.text).empty();

  if (!seg.final) {
    // Non-final hypotheses replace the previous one and count as activity.
    partial_ = seg;
    if (has_words) {
      if (last_final_end_ && !pause_fired_ && !options_.external_vad &&
          seg.start - *last_final_end_ >= options_.pause_seconds)
        triggers.emplace_back(PauseDetected{*last_final_end_ + options_.pause_seconds});
      last_final_end_ = std::max(last_final_end_.value_or(seg.end), seg.end);
      pause_fired_ = false;
    }
    ring_.advance(seg.end);
    return triggers;
  }

  if (last_final_end_ && seg.end < *last_final_end_ - options_.out_of_order_tolerance)
    throw Error(ErrorCode::OutOfOrder, "segment ending at " + std::to_string(seg.end) +
                                           " precedes last accepted end " +
                                           std::to_string(*last_final_end_));
  partial_.reset();
  if (has_words && last_final_end_ && !pause_fired_ && !options_.external_vad &&
      seg.start - *last_final_end_ >= options_.pause_seconds)
    triggers.emplace_back(PauseDetected{*last_final_end_ + options_.pause_seconds});

  ring_.push(seg);
  if (has_words) {
    last_final_end_ = std::max(last_final_end_.value_or(seg.end), seg.end);
    pause_fired_ = false;
  }
  for (auto& w : windower_.push(seg)) triggers.emplace_back(WindowReady{std::move(w)});
  return triggers;
}

std::vector<PipelineTrigger> TranscriptIngest::tick(Seconds now) {
  std::vector<PipelineTrigger> triggers;
  ring_.advance(now);
  if (!options_.external_vad && last_final_end_ && !pause_fired_ &&
      now - *last_final_end_ >= options_.pause_seconds) {
    pause_fired_ = true;
    triggers.emplace_back(PauseDetected{now});
  }
  return triggers;
}

std::vector<PipelineTrigger> TranscriptIngest::flush() {
  std::vector<PipelineTrigger> triggers;
  if (auto w = windower_.flush()) triggers.emplace_back(WindowReady{std::move(*w)});
  return triggers;
}

}  // namespace interflow
