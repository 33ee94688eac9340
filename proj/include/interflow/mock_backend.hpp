#pragma once

#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "interflow/config.hpp"
#include "interflow/gateway.hpp"

namespace interflow {

std::uint64_t fnv1a(std::string_view s);

/// Lowercased alphanumeric words with surrounding punctuation removed.
std::vector<std::string> content_words(std::string_view text, bool drop_stopwords = true);
bool is_stopword(std::string_view word);

/// Deterministic backend. Embeddings are hashed bags of words; completions
/// come from a fixture table keyed by (template, prompt hash) or
/// (template, substring), falling back to rule-based answers computed from
/// the structured request context.
class MockBackend : public Backend {
 public:
  struct Fixture {
    TemplateId id;
    std::optional<std::string> prompt_hash;
    std::optional<std::string> contains;
    std::string output;
  };

  explicit MockBackend(MockConfig config = {});

  std::string name() const override { return "mock"; }
  std::vector<Embedding> embed(const std::vector<std::string>& texts) override;
  std::string complete(const CompletionRequest& request) override;
  std::optional<Seconds> virtual_latency(std::string_view call) const override;

  void add_fixture(Fixture f);
  static std::string prompt_key(std::string_view prompt);

  std::size_t calls(TemplateId id) const;
  std::size_t embed_calls() const;

  /// Hashed bag-of-words embedding of one text (not normalized).
  Embedding embed_one(std::string_view text) const;

 private:
  std::string default_completion(const CompletionRequest& request) const;

  MockConfig config_;
  mutable std::mutex mu_;
  std::vector<Fixture> fixtures_;
  std::map<TemplateId, std::size_t> calls_;
  std::size_t embed_calls_ = 0;
};

/// Rule-based stand-in for the realtime situation detector: filler words
/// for hesitation, hedge phrases for vague answers, polarity flips over a
/// keyword index for inconsistencies, unseen capitalized terms for new
/// themes.
std::optional<SituationPayload> detect_situation_rules(const ObserveContext& ctx);

}  // namespace interflow
