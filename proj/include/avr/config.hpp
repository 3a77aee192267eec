#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>

#include <json.hpp>

#include "avr/core.hpp"
#include "avr/difficulty.hpp"
#include "avr/embedding.hpp"
#include "avr/errors.hpp"

namespace avr {

struct MemoryConfig {
  std::filesystem::path path = "data/memory.jsonl";
  int k = 5;
  int token_budget = 512;
  bool inject_for_large = false;
};

struct BackendConfig {
  int timeout_ms = 30000;
  int max_probe_tokens = 128;
};

struct GatewayConfig {
  std::string listen = "127.0.0.1:8080";
  ModelPool pool;
  ThresholdConfig thresholds;
  double confidence_floor = -3.0;
  std::filesystem::path difficulty_kb_path;
  std::filesystem::path safety_kb_path;
  bool preroute_enabled = true;
  BandCutoffs cutoffs;
  double tau_risk = 0.80;
  MemoryConfig memory;
  EmbedderConfig embedder;
  BackendConfig backend;
  int max_concurrent_requests = 16;

  void validate() const {
    pool.validate();
    if (pool.size() < 2) fail(Errc::pool_too_small, "gateway pool requires K >= 2");
    thresholds.validate();
    if (confidence_floor >= 0.0) fail(Errc::bad_config, "confidence.floor must be negative");
    if (tau_risk <= 0.0 || tau_risk >= 1.0) fail(Errc::bad_config, "safety.tau_risk must be in (0,1)");
    if (!pool.smallest().supports_logprobs)
      fail(Errc::bad_config, "smallest-tier backend must support logprobs");
    if (!std::filesystem::exists(difficulty_kb_path))
      fail(Errc::bad_config, "difficulty KB not found: " + difficulty_kb_path.string());
    if (!std::filesystem::exists(safety_kb_path))
      fail(Errc::bad_config, "safety KB not found: " + safety_kb_path.string());
  }
};

namespace detail {

inline std::optional<std::string> env_override(const std::string& key) {
  std::string name = "AVR_";
  for (char c : key) name += c == '.' ? '_' : static_cast<char>(std::toupper(c));
  if (const char* v = std::getenv(name.c_str())) return std::string(v);
  return std::nullopt;
}

inline std::string str_or_env(const std::string& key, const std::string& fallback) {
  if (auto v = env_override(key)) return *v;
  return fallback;
}

inline double num_or_env(const std::string& key, double fallback) {
  if (auto v = env_override(key)) return std::stod(*v);
  return fallback;
}

inline bool bool_or_env(const std::string& key, bool fallback) {
  if (auto v = env_override(key)) return *v == "1" || *v == "true" || *v == "on";
  return fallback;
}

}  // namespace detail

// Loads the gateway config, then applies AVR_-prefixed environment overrides
// (AVR_LISTEN, AVR_MEMORY_PATH, AVR_CONFIDENCE_FLOOR, ...). Paths are resolved
// relative to the config file's directory.
inline GatewayConfig load_gateway_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::bad_config, "cannot open config " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::bad_config, path.string() + ": " + e.what());
  }
  const std::filesystem::path base = path.parent_path();

  GatewayConfig cfg;
  try {
    cfg.listen = detail::str_or_env("listen", j.value("listen", cfg.listen));
    std::vector<ModelProfile> models;
    for (const auto& mj : j.at("pool")) {
      ModelProfile m;
      m.model_id = mj.at("model_id").get<std::string>();
      m.tier = mj.at("tier").get<int>();
      m.capability = mj.value("capability", 0.5);
      m.input_price = micros_from_dollars(mj.at("input_usd_per_mtok").get<double>());
      m.output_price = micros_from_dollars(mj.at("output_usd_per_mtok").get<double>());
      m.probe_fraction = mj.value("probe_fraction", 0.1);
      m.endpoint = mj.at("endpoint").get<std::string>();
      m.grounding_accuracy = mj.value("grounding_accuracy", 0.0);
      m.supports_logprobs = mj.value("supports_logprobs", true);
      models.push_back(std::move(m));
    }
    cfg.pool = ModelPool(std::move(models));

    if (j.contains("thresholds")) {
      cfg.thresholds.tau_easy = j["thresholds"].value("tau_easy", 0.80);
      cfg.thresholds.tau_hard = j["thresholds"].value("tau_hard", 0.92);
    }
    cfg.confidence_floor = detail::num_or_env(
        "confidence.floor", j.contains("confidence") ? j["confidence"].value("floor", -3.0) : -3.0);

    const auto& dj = j.value("difficulty", nlohmann::json::object());
    cfg.difficulty_kb_path =
        base / detail::str_or_env("difficulty.kb_path", dj.value("kb_path", "kb/difficulty_kb.json"));
    cfg.preroute_enabled =
        detail::bool_or_env("difficulty.preroute_enabled", dj.value("preroute_enabled", true));
    cfg.cutoffs.easy = detail::num_or_env("difficulty.easy_cutoff", dj.value("easy_cutoff", 0.3));
    cfg.cutoffs.hard = detail::num_or_env("difficulty.hard_cutoff", dj.value("hard_cutoff", 0.7));

    const auto& sj = j.value("safety", nlohmann::json::object());
    cfg.safety_kb_path =
        base / detail::str_or_env("safety.kb_path", sj.value("kb_path", "kb/safety_kb.json"));
    cfg.tau_risk = detail::num_or_env("safety.tau_risk", sj.value("tau_risk", 0.80));

    const auto& mj = j.value("memory", nlohmann::json::object());
    cfg.memory.path = base / detail::str_or_env("memory.path", mj.value("path", "data/memory.jsonl"));
    cfg.memory.k = static_cast<int>(detail::num_or_env("memory.k", mj.value("k", 5)));
    cfg.memory.token_budget =
        static_cast<int>(detail::num_or_env("memory.token_budget", mj.value("token_budget", 512)));
    cfg.memory.inject_for_large =
        detail::bool_or_env("memory.inject_for_large", mj.value("inject_for_large", false));

    const auto& ej = j.value("embedder", nlohmann::json::object());
    const std::string ekind = detail::str_or_env("embedder.kind", ej.value("kind", "deterministic_stub"));
    cfg.embedder.kind = ekind == "remote_service" ? EmbedderConfig::Kind::remote_service
                                                  : EmbedderConfig::Kind::deterministic_stub;
    cfg.embedder.endpoint = detail::str_or_env("embedder.endpoint", ej.value("endpoint", ""));
    cfg.embedder.timeout_ms =
        static_cast<int>(detail::num_or_env("embedder.timeout_ms", ej.value("timeout_ms", 2000)));
    cfg.embedder.max_inflight =
        static_cast<int>(detail::num_or_env("embedder.max_inflight", ej.value("max_inflight", 8)));

    const auto& bj = j.value("backend", nlohmann::json::object());
    cfg.backend.timeout_ms =
        static_cast<int>(detail::num_or_env("backend.timeout_ms", bj.value("timeout_ms", 30000)));
    cfg.backend.max_probe_tokens = static_cast<int>(
        detail::num_or_env("backend.max_probe_tokens", bj.value("max_probe_tokens", 128)));

    const auto& srv = j.value("server", nlohmann::json::object());
    cfg.max_concurrent_requests = static_cast<int>(detail::num_or_env(
        "server.max_concurrent_requests", srv.value("max_concurrent_requests", 16)));
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::bad_config, path.string() + ": " + e.what());
  }
  return cfg;
}

}  // namespace avr
