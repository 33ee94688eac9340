#include "synthetic.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace interflow::testing {

using nlohmann::json;

namespace {

constexpr std::array<const char*, 48> kNouns = {
    "budget",   "travel",   "kitchen",  "garden",   "commute",  "music",   "podcast",  "library",
    "exercise", "coffee",   "weekend",  "festival", "museum",   "bicycle", "recipe",   "shopping",
    "airport",  "hotel",    "doctor",   "pharmacy", "insurance", "rent",   "neighbor", "school",
    "homework", "printer",  "laptop",   "keyboard", "email",    "calendar", "meeting", "deadline",
    "garage",   "parking",  "weather",  "vacation", "camera",   "photo",   "market",   "bakery",
    "theater",  "concert",  "stadium",  "swimming", "hiking",   "fishing", "painting", "knitting",
};
constexpr std::array<const char*, 6> kAsks = {
    "How do you usually handle", "What do you think about", "Can you describe your experience with",
    "Why do you care about", "When did you last think about", "Who helps you with",
};
constexpr std::array<const char*, 10> kFiller = {
    "the", "and", "really", "often", "with", "because", "then", "quite", "for", "about",
};
constexpr std::array<const char*, 8> kColor = {
    "um", "uh", "kind of", "sort of", "I guess", "not", "never", "you know",
};
constexpr std::array<const char*, 6> kNames = {"Zephyr", "Quorra", "Brightline", "Havenly", "Norvik", "Tallis"};

struct Planned {
  std::string id;
  std::string text;
  std::vector<std::string> topic;
  std::size_t siblings = 1;
};

template <typename A>
const char* pick(std::mt19937_64& rng, const A& arr) {
  return arr[std::uniform_int_distribution<std::size_t>(0, arr.size() - 1)(rng)];
}

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

bool chance(std::mt19937_64& rng, double p) { return std::bernoulli_distribution(p)(rng); }

// Keeps times on a 1 ms grid so that logs print compactly.
double ms(double t) { return std::round(t * 1000.0) / 1000.0; }

std::string utterance(std::mt19937_64& rng, const std::vector<std::string>& topic, int words) {
  std::string out;
  for (int i = 0; i < words; ++i) {
    std::string w;
    double r = uniform(rng, 0, 1);
    if (r < 0.35) w = topic[std::uniform_int_distribution<std::size_t>(0, topic.size() - 1)(rng)];
    else if (r < 0.45) w = pick(rng, kColor);
    else if (r < 0.48 && i > 0) w = pick(rng, kNames);
    else w = pick(rng, kFiller);
    if (!out.empty()) out += ' ';
    out += w;
  }
  out += chance(rng, 0.85) ? "." : "?";
  return out;
}

}  // namespace

SyntheticSession generate_session(std::uint64_t seed, const SessionShape& shape) {
  std::mt19937_64 rng(seed);
  SyntheticSession s;

  // Script.
  std::vector<Planned> order;
  std::vector<std::string> used;
  auto fresh_noun = [&] {
    for (;;) {
      std::string n = pick(rng, kNouns);
      if (std::find(used.begin(), used.end(), n) == used.end()) {
        used.push_back(n);
        return n;
      }
    }
  };
  int stages = std::uniform_int_distribution<int>(2, 3)(rng);
  s.script = "---\nresearch_question: How do people organise everyday routines?\n"
             "background: Semi-structured interview about daily life.\nplanned_minutes: " +
             std::to_string(static_cast<int>(std::ceil(shape.minutes))) + "\n---\n";
  int next_id = 1;
  for (int st = 0; st < stages; ++st) {
    s.script += "# Stage " + std::to_string(st + 1) + "\n";
    if (chance(rng, 0.5)) s.script += "> Intro for stage " + std::to_string(st + 1) + ".\n";
    std::size_t mains = std::uniform_int_distribution<std::size_t>(2, 3)(rng);
    for (std::size_t m = 0; m < mains; ++m) {
      Planned q;
      q.topic = {fresh_noun(), fresh_noun()};
      q.text = std::string(pick(rng, kAsks)) + " " + q.topic[0] + " and " + q.topic[1] + "?";
      q.id = "q" + std::to_string(next_id++);
      q.siblings = mains;
      s.script += "- " + q.text + "\n";
      order.push_back(q);
      if (chance(rng, 0.3)) {
        Planned sub;
        sub.topic = {q.topic[0], fresh_noun()};
        sub.text = "What about " + sub.topic[1] + " in your " + sub.topic[0] + " routine?";
        sub.id = "q" + std::to_string(next_id++);
        sub.siblings = 1;
        s.script += "  - " + sub.text + "\n";
        order.push_back(sub);
      }
    }
  }

  // Transcript.
  const double total = shape.minutes * 60.0;
  const double span = total / static_cast<double>(order.size());
  double t = 2.0;
  std::size_t line = 0;
  auto push_segment = [&](const std::string& speaker, const std::string& text, double start, double end) {
    json m = {{"start", ms(start)}, {"end", ms(end)}, {"speaker", speaker}, {"text", text}, {"final", true}};
    s.records.push_back({ms(end), m, ++line});
    ++s.segments;
  };
  auto push_event = [&](json m, double at) {
    m["t"] = ms(at);
    s.records.push_back({ms(at), m, ++line});
  };
  int tags = 0;
  for (std::size_t i = 0; i < order.size(); ++i) {
    const auto& q = order[i];
    double span_end = 2.0 + span * static_cast<double>(i + 1);
    double ask_len = 0.3 * static_cast<double>(std::count(q.text.begin(), q.text.end(), ' ') + 1);
    double ask_start = ms(t), ask_end = ms(t + ask_len);
    push_segment("interviewer", q.text, ask_start, ask_end);
    s.annotations.asked.push_back({q.id, ask_start, ask_end});
    t = ask_end;
    if (chance(rng, shape.event_chance)) {
      double at = t + 0.5;
      switch (std::uniform_int_distribution<int>(0, 6)(rng)) {
        case 0: push_event({{"type", "manual_select"}, {"question_id", q.id}}, at); break;
        case 1:
          push_event({{"type", "create_tag"}, {"question_id", q.id}, {"text", "note on " + q.topic[0]}}, at);
          ++tags;
          break;
        case 2: push_event({{"type", "request_summary"}}, at); break;
        case 3:
          push_event({{"type", "reorder"},
                      {"question_id", q.id},
                      {"index", std::uniform_int_distribution<std::size_t>(0, q.siblings - 1)(rng)}},
                     at);
          break;
        case 4: push_event({{"type", "hover_expand"}, {"suggestion_id", "tag-" + std::to_string(tags + 1)}}, at); break;
        case 5:
          if (tags > 0) push_event({{"type", "delete_tag"}, {"tag_id", "tag-1"}}, at);
          break;
        default: push_event({{"type", "manual_select"}}, at); break;  // malformed
      }
      t = at;
    }
    t += uniform(rng, shape.min_gap, shape.max_gap);
    while (t < span_end - 1.0) {
      int words = std::uniform_int_distribution<int>(shape.min_words, shape.max_words)(rng);
      auto text = utterance(rng, q.topic, words);
      double start = t, end = t + shape.seconds_per_word * words;
      push_segment("interviewee", text, start, end);
      t = end + (chance(rng, shape.pause_chance) ? uniform(rng, 2.2, 4.0)
                                                 : uniform(rng, shape.min_gap, shape.max_gap));
      if (chance(rng, 0.05)) {
        push_event({{"type", "request_summary"}, {"focus_question", q.id}}, t);
        t += 0.2;
      }
    }
    t = std::max(t, span_end);
  }
  return s;
}

SyntheticSession generate_long_session(std::uint64_t seed) {
  SessionShape shape;
  shape.minutes = 25.0;
  shape.min_words = 1;
  shape.max_words = 3;
  shape.seconds_per_word = 0.16;
  shape.min_gap = 0.04;
  shape.max_gap = 0.16;
  shape.pause_chance = 0.02;
  shape.event_chance = 0.5;
  return generate_session(seed, shape);
}

std::vector<TranscriptSegment> random_stream(std::mt19937_64& rng, std::size_t count) {
  static constexpr std::array<const char*, 12> kWords = {
      "alpha", "beta", "gamma", "delta", "Dr.", "e.g.", "etc.", "(aside)", "\"quoted\"", "Mr.", "okay", "so",
  };
  static constexpr std::array<const char*, 5> kEnds = {"done.", "why?", "wow!", "\"said.\"", "end.)"};
  std::vector<TranscriptSegment> out;
  double t = 0;
  for (std::size_t i = 0; i < count; ++i) {
    TranscriptSegment seg;
    int words = std::uniform_int_distribution<int>(0, 30)(rng);
    for (int w = 0; w < words; ++w) {
      if (!seg.text.empty()) seg.text += ' ';
      seg.text += chance(rng, 0.12) ? pick(rng, kEnds) : pick(rng, kWords);
    }
    seg.start = ms(t + uniform(rng, 0, 0.5));
    seg.end = ms(seg.start + 0.25 * words + uniform(rng, 0, 0.5));
    seg.speaker = chance(rng, 0.5) ? Speaker::Interviewee : Speaker::Interviewer;
    t = seg.end;
    out.push_back(seg);
  }
  return out;
}

}  // namespace interflow::testing
