#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>

#include <nlohmann/json.hpp>

namespace interflow {

/// Settings for the deterministic mock backend.
struct MockConfig {
  std::string fixtures_dir;  // empty: no fixture overrides
  std::size_t embedding_dim = 512;
  // Virtual completion latency in seconds, keyed by template id
  // ("summary", "judge", ...) or "embed". Missing keys mean 0.
  std::map<std::string, double> latency;
  // Template ids (or "embed") whose calls fail with BackendUnavailable.
  std::set<std::string> fail;
  // Template ids whose output is replaced by malformed text.
  std::set<std::string> malformed;
};

/// Every tunable constant of the pipeline. Defaults are the values the
/// interview copilot was tuned with; all of them can be overridden for
/// ablation sweeps.
struct Config {
  std::string backend = "mock";
  std::map<std::string, std::string> template_backend;

  double similarity_threshold = 0.5;
  std::size_t window_words = 50;
  double ring_seconds = 30.0;
  double suggestion_gap = 10.0;
  double suspension_seconds = 15.0;
  double pause_seconds = 2.0;
  double candidate_expiry = 120.0;
  double ratio_cadence = 30.0;
  double out_of_order_tolerance = 0.5;
  double duplicate_overlap = 0.6;
  double tick_seconds = 1.0;
  bool external_vad = false;
  std::optional<double> planned_minutes;  // overrides the script front matter

  std::size_t inflight_cap = 4;
  std::size_t queue_capacity = 1024;
  double gateway_timeout = 20.0;

  MockConfig mock;

  static Config from_json(const nlohmann::json& j);
  static Config load(const std::string& path);
  nlohmann::json to_json() const;

  /// Applies a single `key=value` override using the JSON key names.
  void set(const std::string& key, const std::string& value);
};

}  // namespace interflow
