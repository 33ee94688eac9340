#include "interflow/script.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <set>
#include <sstream>

#include "interflow/errors.hpp"
#include "interflow/gateway.hpp"

namespace interflow {

std::string_view to_string(QuestionKind kind) {
  return kind == QuestionKind::Main ? "main" : "sub";
}

std::string_view to_string(QuestionStatus status) {
  switch (status) {
    case QuestionStatus::Unvisited: return "unvisited";
    case QuestionStatus::Ongoing: return "ongoing";
    case QuestionStatus::Visited: return "visited";
  }
  return "unvisited";
}

std::string_view to_string(StatusSource source) {
  switch (source) {
    case StatusSource::None: return "none";
    case StatusSource::Auto: return "auto";
    case StatusSource::Manual: return "manual";
  }
  return "none";
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) {
      if (pos < text.size()) lines.push_back(text.substr(pos));
      break;
    }
    auto line = text.substr(pos, nl - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    pos = nl + 1;
  }
  return lines;
}

bool starts_with(std::string_view s, std::string_view prefix) {
  return s.substr(0, prefix.size()) == prefix;
}

[[noreturn]] void grammar_error(std::size_t line, const std::string& what) {
  throw Error(ErrorCode::GrammarError, "line " + std::to_string(line) + ": " + what,
              static_cast<std::int64_t>(line));
}

std::string format_minutes(double minutes) {
  if (std::floor(minutes) == minutes && std::abs(minutes) < 1e15) {
    return std::to_string(static_cast<long long>(minutes));
  }
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, minutes);
  return std::string(buf, end);
}

void assign_ids(std::vector<Stage>& stages) {
  std::size_t next = 1;
  for (auto& stage : stages) {
    for (auto& main : stage.questions) {
      main.id = "q" + std::to_string(next++);
      main.kind = QuestionKind::Main;
      main.parent.reset();
      for (auto& sub : main.subquestions) {
        sub.id = "q" + std::to_string(next++);
        sub.kind = QuestionKind::Sub;
        sub.parent = main.id;
      }
    }
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// ScriptHierarchy

ScriptHierarchy::ScriptHierarchy(ScriptMeta meta, std::vector<Stage> stages)
    : meta_(std::move(meta)), stages_(std::move(stages)) {
  validate();
}

void ScriptHierarchy::validate() const {
  std::set<std::string, std::less<>> stage_names;
  std::set<std::string, std::less<>> ids;
  std::size_t ongoing = 0;
  auto check = [&](const Question& q) {
    if (!ids.insert(q.id).second)
      throw Error(ErrorCode::GrammarError, "duplicate question id " + q.id);
    if (q.status == QuestionStatus::Ongoing) ++ongoing;
  };
  for (const auto& stage : stages_) {
    if (!stage_names.insert(stage.name).second)
      throw Error(ErrorCode::GrammarError, "duplicate stage name '" + stage.name + "'");
    if (stage.questions.empty())
      throw Error(ErrorCode::GrammarError, "stage '" + stage.name + "' has no questions");
    for (const auto& main : stage.questions) {
      if (main.kind != QuestionKind::Main || main.parent)
        throw Error(ErrorCode::GrammarError, "question " + main.id + " is not a main question");
      check(main);
      for (const auto& sub : main.subquestions) {
        if (sub.kind != QuestionKind::Sub || sub.parent != main.id || !sub.subquestions.empty())
          throw Error(ErrorCode::GrammarError, "subquestion " + sub.id + " has a bad parent link");
        check(sub);
      }
    }
  }
  if (ids.empty()) throw Error(ErrorCode::EmptyScript, "script contains no questions");
  if (ongoing > 1) throw Error(ErrorCode::GrammarError, "more than one ongoing question");
  if (meta_.planned_minutes && !(*meta_.planned_minutes > 0))
    throw Error(ErrorCode::ConfigError, "planned time must be > 0");
}

std::size_t ScriptHierarchy::question_count() const {
  std::size_t n = 0;
  for (const auto& stage : stages_)
    for (const auto& main : stage.questions) n += 1 + main.subquestions.size();
  return n;
}

QuestionRef ScriptHierarchy::locate(std::string_view id) const {
  for (std::size_t s = 0; s < stages_.size(); ++s) {
    const auto& qs = stages_[s].questions;
    for (std::size_t m = 0; m < qs.size(); ++m) {
      if (qs[m].id == id) return {s, m, std::nullopt};
      const auto& subs = qs[m].subquestions;
      for (std::size_t k = 0; k < subs.size(); ++k)
        if (subs[k].id == id) return {s, m, k};
    }
  }
  throw Error(ErrorCode::UnknownId, "unknown question id '" + std::string(id) + "'");
}

bool ScriptHierarchy::contains(std::string_view id) const {
  for (const auto& stage : stages_)
    for (const auto& main : stage.questions) {
      if (main.id == id) return true;
      for (const auto& sub : main.subquestions)
        if (sub.id == id) return true;
    }
  return false;
}

const Question& ScriptHierarchy::question(std::string_view id) const {
  auto ref = locate(id);
  const auto& main = stages_[ref.stage].questions[ref.main];
  return ref.sub ? main.subquestions[*ref.sub] : main;
}

Question& ScriptHierarchy::mutable_question(std::string_view id) {
  return const_cast<Question&>(std::as_const(*this).question(id));
}

std::size_t ScriptHierarchy::stage_of(std::string_view id) const { return locate(id).stage; }

std::vector<std::string> ScriptHierarchy::ordered_ids() const {
  std::vector<std::string> ids;
  for (const auto& stage : stages_)
    for (const auto& main : stage.questions) {
      ids.push_back(main.id);
      for (const auto& sub : main.subquestions) ids.push_back(sub.id);
    }
  return ids;
}

std::optional<std::string> ScriptHierarchy::ongoing() const {
  for (const auto& stage : stages_)
    for (const auto& main : stage.questions) {
      if (main.status == QuestionStatus::Ongoing) return main.id;
      for (const auto& sub : main.subquestions)
        if (sub.status == QuestionStatus::Ongoing) return sub.id;
    }
  return std::nullopt;
}

void ScriptHierarchy::reorder(std::string_view id, std::size_t new_index) {
  auto ref = locate(id);
  auto& mains = stages_[ref.stage].questions;
  auto& siblings = ref.sub ? mains[ref.main].subquestions : mains;
  std::size_t from = ref.sub ? *ref.sub : ref.main;
  if (new_index >= siblings.size())
    throw Error(ErrorCode::IndexOutOfRange,
                "index " + std::to_string(new_index) + " outside sibling list of " + std::string(id));
  if (from == new_index) return;
  auto first = siblings.begin();
  if (from < new_index)
    std::rotate(first + from, first + from + 1, first + new_index + 1);
  else
    std::rotate(first + new_index, first + from, first + from + 1);
}

StatusChange ScriptHierarchy::set_status(std::string_view id, QuestionStatus status,
                                         StatusSource source) {
  auto& target = mutable_question(id);
  StatusChange change{target.id, std::nullopt, false};
  if (status == QuestionStatus::Ongoing) {
    auto current = ongoing();
    if (current && *current != target.id) {
      auto& previous = mutable_question(*current);
      previous.status = QuestionStatus::Visited;
      change.displaced = previous.id;
    }
  }
  change.changed = target.status != status || target.status_source != source;
  target.status = status;
  target.status_source = source;
  return change;
}

// ---------------------------------------------------------------------------
// Grammar

std::string_view split_front_matter(std::string_view text, ScriptMeta& meta) {
  auto lines = split_lines(text);
  std::size_t i = 0;
  while (i < lines.size() && trim(lines[i]).empty()) ++i;
  if (i == lines.size() || trim(lines[i]) != "---") return text;
  std::size_t open_line = i;
  for (++i; i < lines.size(); ++i) {
    auto line = trim(lines[i]);
    if (line == "---") break;
    if (line.empty()) continue;
    auto colon = line.find(':');
    if (colon == std::string_view::npos) grammar_error(i + 1, "front matter entry without ':'");
    auto key = trim(line.substr(0, colon));
    auto value = std::string(trim(line.substr(colon + 1)));
    if (key == "research_question") {
      meta.research_question = value;
    } else if (key == "background") {
      meta.background = value;
    } else if (key == "planned_minutes") {
      double minutes = 0;
      auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), minutes);
      if (ec != std::errc() || ptr != value.data() + value.size() || !(minutes > 0))
        grammar_error(i + 1, "planned_minutes must be a positive number");
      meta.planned_minutes = minutes;
    } else {
      grammar_error(i + 1, "unknown front matter key '" + std::string(key) + "'");
    }
  }
  if (i == lines.size()) grammar_error(open_line + 1, "unterminated front matter");
  // Body starts after the closing delimiter line.
  const char* body = lines[i].data() + lines[i].size();
  auto offset = static_cast<std::size_t>(body - text.data());
  if (offset < text.size() && text[offset] == '\r') ++offset;
  if (offset < text.size() && text[offset] == '\n') ++offset;
  return text.substr(offset);
}

ScriptHierarchy parse_structured_script(std::string_view text) {
  ScriptMeta meta;
  auto body = split_front_matter(text, meta);
  std::size_t line_offset = 0;
  if (body.data() != text.data()) {
    line_offset = static_cast<std::size_t>(
        std::count(text.begin(), text.begin() + (body.data() - text.data()), '\n'));
  }

  std::vector<Stage> stages;
  std::size_t questions = 0;
  auto lines = split_lines(body);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    std::size_t lineno = i + 1 + line_offset;
    auto line = lines[i];
    if (trim(line).empty()) continue;
    if (starts_with(line, "# ")) {
      auto name = std::string(trim(line.substr(2)));
      if (name.empty()) grammar_error(lineno, "empty stage heading");
      for (const auto& s : stages)
        if (s.name == name) grammar_error(lineno, "duplicate stage '" + name + "'");
      if (!stages.empty() && stages.back().questions.empty())
        grammar_error(lineno, "stage '" + stages.back().name + "' has no questions");
      stages.push_back(Stage{name, std::nullopt, {}});
    } else if (starts_with(line, "> ")) {
      if (stages.empty() || !stages.back().questions.empty())
        grammar_error(lineno, "intro must directly follow a stage heading");
      auto piece = std::string(trim(line.substr(2)));
      auto& intro = stages.back().intro;
      intro = intro ? *intro + "\n" + piece : piece;
    } else if (starts_with(line, "- ")) {
      if (stages.empty()) grammar_error(lineno, "question before the first stage heading");
      auto q = std::string(trim(line.substr(2)));
      if (q.empty()) grammar_error(lineno, "empty question");
      Question main;
      main.text = q;
      stages.back().questions.push_back(std::move(main));
      ++questions;
    } else if (starts_with(line, "  - ")) {
      if (stages.empty() || stages.back().questions.empty())
        grammar_error(lineno, "subquestion without a parent main question");
      auto q = std::string(trim(line.substr(4)));
      if (q.empty()) grammar_error(lineno, "empty subquestion");
      Question sub;
      sub.text = q;
      sub.kind = QuestionKind::Sub;
      stages.back().questions.back().subquestions.push_back(std::move(sub));
      ++questions;
    } else {
      grammar_error(lineno, "unrecognized line '" + std::string(trim(line)) + "'");
    }
  }
  if (questions == 0) throw Error(ErrorCode::EmptyScript, "script contains no questions");
  if (stages.back().questions.empty())
    grammar_error(lines.size() + line_offset, "stage '" + stages.back().name + "' has no questions");
  assign_ids(stages);
  return ScriptHierarchy(std::move(meta), std::move(stages));
}

std::string serialize_script(const ScriptHierarchy& h) {
  std::ostringstream out;
  const auto& meta = h.meta();
  if (!meta.research_question.empty() || !meta.background.empty() || meta.planned_minutes) {
    out << "---\n";
    if (!meta.research_question.empty()) out << "research_question: " << meta.research_question << '\n';
    if (!meta.background.empty()) out << "background: " << meta.background << '\n';
    if (meta.planned_minutes) out << "planned_minutes: " << format_minutes(*meta.planned_minutes) << '\n';
    out << "---\n";
  }
  bool first = true;
  for (const auto& stage : h.stages()) {
    if (!first) out << '\n';
    first = false;
    out << "# " << stage.name << '\n';
    if (stage.intro) {
      std::string_view intro = *stage.intro;
      for (auto piece : split_lines(intro)) out << "> " << piece << '\n';
    }
    for (const auto& main : stage.questions) {
      out << "- " << main.text << '\n';
      for (const auto& sub : main.subquestions) out << "  - " << sub.text << '\n';
    }
  }
  return out.str();
}

ScriptHierarchy parse_freeform_script(std::string_view text, Gateway& gateway) {
  ScriptMeta meta;
  auto body = split_front_matter(text, meta);
  auto stages = gateway.parse_script(body, meta);
  if (stages.empty()) throw Error(ErrorCode::EmptyScript, "model returned no categories");
  std::size_t questions = 0;
  for (const auto& s : stages)
    for (const auto& m : s.questions) questions += 1 + m.subquestions.size();
  if (questions == 0) throw Error(ErrorCode::EmptyScript, "model returned no questions");
  // Stages the model left without questions carry no retrievable content.
  std::erase_if(stages, [](const Stage& s) { return s.questions.empty(); });
  assign_ids(stages);
  return ScriptHierarchy(std::move(meta), std::move(stages));
}

ScriptHierarchy load_script(std::string_view text, Gateway* gateway) {
  try {
    return parse_structured_script(text);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::GrammarError || gateway == nullptr) throw;
    return parse_freeform_script(text, *gateway);
  }
}

}  // namespace interflow
