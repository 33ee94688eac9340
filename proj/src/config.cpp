#include "interflow/config.hpp"

#include <fstream>
#include <sstream>

#include "interflow/errors.hpp"

namespace interflow {

using nlohmann::json;

namespace {

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (auto it = j.find(key); it != j.end() && !it->is_null()) out = it->get<T>();
}

}  // namespace

Config Config::from_json(const json& j) {
  if (!j.is_object()) throw Error(ErrorCode::ConfigError, "config must be an object");
  Config c;
  try {
    read(j, "backend", c.backend);
    read(j, "template_backend", c.template_backend);
    read(j, "similarity_threshold", c.similarity_threshold);
    read(j, "window_words", c.window_words);
    read(j, "ring_seconds", c.ring_seconds);
    read(j, "suggestion_gap", c.suggestion_gap);
    read(j, "suspension_seconds", c.suspension_seconds);
    read(j, "pause_seconds", c.pause_seconds);
    read(j, "candidate_expiry", c.candidate_expiry);
    read(j, "ratio_cadence", c.ratio_cadence);
    read(j, "out_of_order_tolerance", c.out_of_order_tolerance);
    read(j, "duplicate_overlap", c.duplicate_overlap);
    read(j, "tick_seconds", c.tick_seconds);
    read(j, "external_vad", c.external_vad);
    if (auto it = j.find("planned_minutes"); it != j.end() && !it->is_null())
      c.planned_minutes = it->get<double>();
    read(j, "inflight_cap", c.inflight_cap);
    read(j, "queue_capacity", c.queue_capacity);
    read(j, "gateway_timeout", c.gateway_timeout);
    if (auto it = j.find("mock"); it != j.end() && it->is_object()) {
      read(*it, "fixtures_dir", c.mock.fixtures_dir);
      read(*it, "embedding_dim", c.mock.embedding_dim);
      read(*it, "latency", c.mock.latency);
      read(*it, "fail", c.mock.fail);
      read(*it, "malformed", c.mock.malformed);
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ConfigError, std::string("bad config value: ") + e.what());
  }
  if (c.window_words == 0) throw Error(ErrorCode::ConfigError, "window_words must be > 0");
  if (c.ring_seconds <= 0) throw Error(ErrorCode::ConfigError, "ring_seconds must be > 0");
  if (c.tick_seconds <= 0) throw Error(ErrorCode::ConfigError, "tick_seconds must be > 0");
  if (c.inflight_cap == 0 || c.queue_capacity == 0)
    throw Error(ErrorCode::ConfigError, "inflight_cap and queue_capacity must be > 0");
  if (c.mock.embedding_dim == 0) throw Error(ErrorCode::ConfigError, "embedding_dim must be > 0");
  return c;
}

Config Config::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ConfigError, "cannot open config file " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ConfigError, path + ": " + e.what());
  }
  return from_json(j);
}

json Config::to_json() const {
  json j = {
      {"backend", backend},
      {"template_backend", template_backend},
      {"similarity_threshold", similarity_threshold},
      {"window_words", window_words},
      {"ring_seconds", ring_seconds},
      {"suggestion_gap", suggestion_gap},
      {"suspension_seconds", suspension_seconds},
      {"pause_seconds", pause_seconds},
      {"candidate_expiry", candidate_expiry},
      {"ratio_cadence", ratio_cadence},
      {"out_of_order_tolerance", out_of_order_tolerance},
      {"duplicate_overlap", duplicate_overlap},
      {"tick_seconds", tick_seconds},
      {"external_vad", external_vad},
      {"planned_minutes", planned_minutes ? json(*planned_minutes) : json(nullptr)},
      {"inflight_cap", inflight_cap},
      {"queue_capacity", queue_capacity},
      {"gateway_timeout", gateway_timeout},
      {"mock",
       {{"fixtures_dir", mock.fixtures_dir},
        {"embedding_dim", mock.embedding_dim},
        {"latency", mock.latency},
        {"fail", mock.fail},
        {"malformed", mock.malformed}}},
  };
  return j;
}

void Config::set(const std::string& key, const std::string& value) {
  json j = to_json();
  json parsed;
  try {
    parsed = json::parse(value);
  } catch (const json::exception&) {
    parsed = value;  // bare strings such as backend names
  }
  if (key.rfind("mock.", 0) == 0) {
    j["mock"][key.substr(5)] = parsed;
  } else {
    if (!j.contains(key)) throw Error(ErrorCode::ConfigError, "unknown config key: " + key);
    j[key] = parsed;
  }
  *this = from_json(j);
}

}  // namespace interflow
