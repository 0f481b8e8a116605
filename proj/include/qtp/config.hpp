#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "qtp/backend.hpp"
#include "qtp/gateway.hpp"
#include "qtp/hash.hpp"
#include "qtp/http_backend.hpp"
#include "qtp/jsonl.hpp"
#include "qtp/prompts.hpp"
#include "qtp/quality.hpp"

namespace qtp {

struct PipelineConfig {
  std::filesystem::path run_dir = "runs/default";
  std::uint64_t seed = 42;
  int top_k = 3;
  int questions_per_aspect = 5;
  SimBackend sim_backend = SimBackend::EmbeddingCosine;
  std::filesystem::path prompt_dir = "prompts";
  bool cache = true;
  std::size_t max_table_chars = kDefaultMaxFlatChars;
  bool gate_evidence = false;
  std::vector<std::string> metrics = {"bleu", "rouge_l", "meteor"};
  std::map<Role, BackendProfile> profiles;

  json raw;  // the validated document, for hashing and the manifest
};

namespace detail {

inline void reject_unknown_keys(const json& obj, const std::set<std::string>& known,
                                const std::string& where) {
  for (const auto& [key, _] : obj.items()) {
    if (!known.count(key))
      throw ConfigError("unknown key '" + key + "' in " + where);
  }
}

inline double default_temperature(Role role) {
  switch (role) {
    case Role::Critic:
    case Role::Judge:
    case Role::Embedder:
      return 0.0;
    default:
      return 0.7;
  }
}

inline BackendProfile parse_profile(Role role, const json& j) {
  reject_unknown_keys(j,
                      {"backend", "endpoint", "model", "temperature", "max_tokens",
                       "max_attempts", "base_backoff_ms", "concurrency", "fixtures",
                       "api_key_env"},
                      "profiles." + to_string(role));
  BackendProfile p;
  p.role = role;
  p.backend_kind = j.value("backend", "scripted");
  if (p.backend_kind != "scripted" && p.backend_kind != "openai")
    throw ConfigError("profile " + to_string(role) + ": backend must be 'scripted' or 'openai'");
  p.endpoint_url = j.value("endpoint", "");
  if (p.backend_kind == "openai" && p.endpoint_url.empty())
    throw ConfigError("profile " + to_string(role) + ": openai backend needs an endpoint");
  p.model = j.value("model", "default");
  p.temperature = j.value("temperature", default_temperature(role));
  p.max_tokens = j.value("max_tokens", 1024);
  p.retry.max_attempts = j.value("max_attempts", 3);
  p.retry.base_backoff_ms = j.value("base_backoff_ms", 500);
  p.concurrency = j.value("concurrency", 1);
  if (p.concurrency < 1)
    throw ConfigError("profile " + to_string(role) + ": concurrency must be at least 1");
  p.fixtures_path = j.value("fixtures", "");
  p.api_key_env = j.value("api_key_env", "OPENAI_API_KEY");
  return p;
}

}  // namespace detail

inline PipelineConfig parse_config(const json& doc) {
  detail::reject_unknown_keys(doc,
                              {"run_dir", "seed", "top_k", "questions_per_aspect", "sim_backend",
                               "prompt_dir", "cache", "max_table_chars", "gate_evidence",
                               "metrics", "profiles"},
                              "config");
  PipelineConfig cfg;
  cfg.raw = doc;
  if (doc.contains("run_dir")) cfg.run_dir = doc["run_dir"].get<std::string>();
  if (doc.contains("seed")) cfg.seed = doc["seed"].get<std::uint64_t>();
  if (doc.contains("top_k")) cfg.top_k = doc["top_k"].get<int>();
  if (cfg.top_k < 1) throw ConfigError("top_k must be at least 1");
  if (doc.contains("questions_per_aspect"))
    cfg.questions_per_aspect = doc["questions_per_aspect"].get<int>();
  if (cfg.questions_per_aspect < 1) throw ConfigError("questions_per_aspect must be at least 1");
  if (doc.contains("sim_backend"))
    cfg.sim_backend = sim_backend_from_string(doc["sim_backend"].get<std::string>());
  if (doc.contains("prompt_dir")) cfg.prompt_dir = doc["prompt_dir"].get<std::string>();
  if (doc.contains("cache")) cfg.cache = doc["cache"].get<bool>();
  if (doc.contains("max_table_chars"))
    cfg.max_table_chars = doc["max_table_chars"].get<std::size_t>();
  if (doc.contains("gate_evidence")) cfg.gate_evidence = doc["gate_evidence"].get<bool>();
  if (doc.contains("metrics")) cfg.metrics = doc["metrics"].get<std::vector<std::string>>();
  if (doc.contains("profiles")) {
    for (const auto& [name, body] : doc["profiles"].items()) {
      Role role = role_from_string(name);
      cfg.profiles[role] = detail::parse_profile(role, body);
    }
  }
  return cfg;
}

inline PipelineConfig load_config(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path))
    throw ConfigError("config file " + path.string() + " does not exist");
  json doc;
  try {
    doc = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + " is not valid JSON: " + e.what());
  }
  return parse_config(doc);
}

inline std::string config_hash(const PipelineConfig& cfg) { return to_hex16(fnv1a64(cfg.raw.dump())); }

inline void require_roles(const PipelineConfig& cfg, std::initializer_list<Role> roles) {
  for (Role r : roles) {
    if (!cfg.profiles.count(r))
      throw ConfigError("this command needs a '" + to_string(r) + "' profile in the config");
  }
}

/// Builds the gateway described by the config: one backend per configured
/// role, the run directory as cache home (when persist is on), and the
/// critic wrapper from the prompt library when one is provided.
inline Gateway build_gateway(const PipelineConfig& cfg, bool persist,
                             const PromptLibrary* prompts = nullptr) {
  GatewayOptions options;
  options.cache_enabled = cfg.cache;
  if (persist) options.persist_dir = cfg.run_dir;
  Gateway gateway(options);

  for (const auto& [role, profile] : cfg.profiles) {
    std::shared_ptr<Backend> backend;
    if (profile.backend_kind == "openai") {
      backend = std::make_shared<OpenAiBackend>(profile.endpoint_url);
    } else {
      auto scripted = std::make_shared<ScriptedBackend>();
      if (!profile.fixtures_path.empty()) {
        if (!std::filesystem::exists(profile.fixtures_path))
          throw ConfigError("fixtures file " + profile.fixtures_path + " does not exist");
        scripted->load_fixtures(profile.fixtures_path);
      }
      backend = scripted;
    }
    gateway.set_profile(profile, backend);
  }

  if (prompts && prompts->contains("critic"))
    gateway.set_critic_prompt(prompts->get("critic").body);
  return gateway;
}

}  // namespace qtp
