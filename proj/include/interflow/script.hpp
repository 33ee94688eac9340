#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace interflow {

class Gateway;

enum class QuestionKind { Main, Sub };
enum class QuestionStatus { Unvisited, Ongoing, Visited };
enum class StatusSource { None, Auto, Manual };

std::string_view to_string(QuestionKind kind);
std::string_view to_string(QuestionStatus status);
std::string_view to_string(StatusSource source);

struct Question {
  std::string id;
  std::string text;
  QuestionKind kind = QuestionKind::Main;
  std::optional<std::string> parent;  // set iff kind == Sub
  QuestionStatus status = QuestionStatus::Unvisited;
  StatusSource status_source = StatusSource::None;
  std::vector<Question> subquestions;  // only on main questions

  bool operator==(const Question&) const = default;
};

struct Stage {
  std::string name;
  std::optional<std::string> intro;
  std::vector<Question> questions;

  bool operator==(const Stage&) const = default;
};

/// Front-matter values shared by both parse paths.
struct ScriptMeta {
  std::string research_question;
  std::string background;
  std::optional<double> planned_minutes;

  bool operator==(const ScriptMeta&) const = default;
};

/// Reference to one question's position in the hierarchy.
struct QuestionRef {
  std::size_t stage = 0;
  std::size_t main = 0;
  std::optional<std::size_t> sub;
};

/// Outcome of a status mutation; `displaced` is the question that was
/// ongoing before and has been moved to visited.
struct StatusChange {
  std::string id;
  std::optional<std::string> displaced;
  bool changed = false;
};

/// Stages, main questions and subquestions with per-question status.
/// At most one question in the whole hierarchy is ongoing at any time.
class ScriptHierarchy {
 public:
  ScriptHierarchy() = default;
  ScriptHierarchy(ScriptMeta meta, std::vector<Stage> stages);

  const ScriptMeta& meta() const { return meta_; }
  ScriptMeta& meta() { return meta_; }
  const std::vector<Stage>& stages() const { return stages_; }

  std::size_t question_count() const;
  bool contains(std::string_view id) const;
  const Question& question(std::string_view id) const;
  QuestionRef locate(std::string_view id) const;
  std::size_t stage_of(std::string_view id) const;

  /// Question ids in display order: stage by stage, each main question
  /// followed by its subquestions.
  std::vector<std::string> ordered_ids() const;
  std::optional<std::string> ongoing() const;

  /// Moves a question within its sibling list. Subquestions travel with
  /// their parent; cross-parent moves are impossible by construction.
  void reorder(std::string_view id, std::size_t new_index);

  /// Setting a question ongoing demotes the previous ongoing one to visited.
  StatusChange set_status(std::string_view id, QuestionStatus status, StatusSource source);

  bool operator==(const ScriptHierarchy&) const = default;

 private:
  Question& mutable_question(std::string_view id);
  void validate() const;

  ScriptMeta meta_;
  std::vector<Stage> stages_;
};

/// Parses the plain-text script grammar (see docs/script-format.md).
/// Throws GrammarError (with line number) or EmptyScript.
ScriptHierarchy parse_structured_script(std::string_view text);

/// Canonical text form; parse_structured_script(serialize_script(h)) == h
/// up to question ids, which are reassigned in display order.
std::string serialize_script(const ScriptHierarchy& h);

/// Splits an optional `---` front-matter block from the body.
/// Returns the body text and fills `meta`.
std::string_view split_front_matter(std::string_view text, ScriptMeta& meta);

/// Free-form path: front matter (if any) is read locally, the body goes
/// through the script_parse template of the gateway.
ScriptHierarchy parse_freeform_script(std::string_view text, Gateway& gateway);

/// Grammar first; the gateway is consulted only when the grammar rejects
/// the input and a gateway is supplied.
ScriptHierarchy load_script(std::string_view text, Gateway* gateway);

}  // namespace interflow
