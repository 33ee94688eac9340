#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "interflow/clock.hpp"
#include "interflow/gateway.hpp"
#include "interflow/script.hpp"
#include "interflow/transcript.hpp"

namespace interflow {

struct QuestionEmbeddings {
  std::vector<std::pair<std::string, Embedding>> vectors;  // script order
  std::string model_tag;

  std::size_t dimension() const { return vectors.empty() ? 0 : vectors.front().second.size(); }
  /// Reorders the vectors to follow `ids`; used after a drag-reorder so
  /// ties still break by current script order.
  void reorder(const std::vector<std::string>& ids);
};

struct QuestionDetection {
  std::string question_id;
  double similarity = 0;
  double opacity = 0;
  Seconds window_end = 0;
};

/// Highlight opacity for a similarity score.
inline double opacity_for(double similarity) { return similarity * similarity; }

/// One vector per question (main and sub), unit-normalized.
QuestionEmbeddings embed_script(const ScriptHierarchy& h, Gateway& gateway);

/// Argmax-by-cosine question, returned iff the maximum reaches `threshold`.
/// Ties go to the earliest question in script order. Pure.
std::optional<QuestionDetection> detect(std::span<const double> window_vector,
                                        const QuestionEmbeddings& emb, double threshold,
                                        Seconds window_end);

/// Embeds the window text through the gateway, then runs detect().
std::optional<QuestionDetection> detect(const DialogueWindow& window, const QuestionEmbeddings& emb,
                                        Gateway& gateway, double threshold);

enum class DiscardReason { Suspended, Stale };
std::string_view to_string(DiscardReason r);

struct TrackerDelta {
  bool applied = false;
  std::optional<StatusChange> change;
  std::optional<DiscardReason> discarded;
  double opacity = 0;
};

/// Arbitrates between automatic detections and manual selection.
/// A manual selection at t suspends automatic detection on [t, t + 15).
class QuestionTracker {
 public:
  explicit QuestionTracker(Seconds suspension_seconds = 15.0) : suspension_(to_micros(suspension_seconds)) {}

  TrackerDelta apply_manual_selection(ScriptHierarchy& h, const std::string& id, Seconds now);
  TrackerDelta apply_detection(ScriptHierarchy& h, const QuestionDetection& det, Seconds now);

  bool suspended(Seconds now) const;
  std::optional<Seconds> suspended_until() const;
  std::optional<Seconds> last_manual() const;
  /// Opacity of the ongoing highlight; manual selections display at 1.
  double opacity() const { return opacity_; }

 private:
  Micros suspension_;
  std::optional<Micros> suspended_until_;
  std::optional<Micros> last_manual_;
  double opacity_ = 0;
};

}  // namespace interflow
