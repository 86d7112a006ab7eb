#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "metajudge/agents.hpp"
#include "metajudge/detail/sha256.hpp"
#include "metajudge/errors.hpp"
#include "metajudge/panel.hpp"
#include "metajudge/rubric.hpp"

namespace metajudge {

inline constexpr int kConfigSchemaVersion = 1;

// Declarative description of one experiment run. Loaded from a JSON config
// file, overridable by CLI flags (flag > file > default), validated before
// any agent call, and digested into every artifact the run produces.
struct RunConfig {
  std::string dataset;
  std::string judgments;  // judge output path / metajudge input path
  std::optional<AgentConfig> judge;
  std::string judge_template;  // path; empty selects the built-in template
  PanelPlan plan;
  std::string rubric_spec = "short";  // variant name or path to a rubric file
  std::map<std::string, double> weight_overrides;
  std::string out = "out";
  int parallelism = 4;
  std::uint64_t seed = 0;
  bool lenient = false;
};

namespace detail {

inline Backend parse_backend_string(const std::string& spec) {
  constexpr std::string_view scripted = "scripted:";
  constexpr std::string_view remote = "remote:";
  if (spec.rfind(scripted, 0) == 0) {
    return ScriptedBackend{spec.substr(scripted.size())};
  }
  if (spec.rfind(remote, 0) == 0) {
    const std::string rest = spec.substr(remote.size());
    const std::size_t hash = rest.find('#');
    if (hash == std::string::npos) {
      throw ValidationError("remote backend spec needs '<url>#<model>': " + spec);
    }
    RemoteChatBackend backend;
    backend.endpoint = rest.substr(0, hash);
    backend.model = rest.substr(hash + 1);
    return backend;
  }
  throw ValidationError("unknown backend spec '" + spec +
                        "' (expected scripted:... or remote:<url>#<model>)");
}

inline Backend backend_from_json(const nlohmann::json& doc) {
  if (doc.is_string()) return parse_backend_string(doc.get<std::string>());
  if (!doc.is_object()) throw ValidationError("backend must be a string or object");
  const std::string type = doc.value("type", "");
  if (type == "scripted") {
    return ScriptedBackend{doc.at("fixture").get<std::string>()};
  }
  if (type == "remote") {
    RemoteChatBackend backend;
    backend.endpoint = doc.at("endpoint").get<std::string>();
    backend.model = doc.at("model").get<std::string>();
    backend.temperature = doc.value("temperature", 0.0);
    backend.max_output_tokens = doc.value("max_output_tokens", 1024);
    backend.api_key_env = doc.value("api_key_env", "");
    return backend;
  }
  throw ValidationError("unknown backend type '" + type + "'");
}

inline nlohmann::json backend_to_json(const Backend& backend) {
  nlohmann::json doc;
  if (const auto* scripted = std::get_if<ScriptedBackend>(&backend)) {
    doc["type"] = "scripted";
    doc["fixture"] = scripted->fixture_id;
  } else {
    const auto& remote = std::get<RemoteChatBackend>(backend);
    doc["type"] = "remote";
    doc["endpoint"] = remote.endpoint;
    doc["model"] = remote.model;
    doc["temperature"] = remote.temperature;
    doc["max_output_tokens"] = remote.max_output_tokens;
    doc["api_key_env"] = remote.api_key_env;
  }
  return doc;
}

inline AgentConfig agent_from_json(const nlohmann::json& doc, const std::string& fallback_id) {
  AgentConfig agent;
  if (doc.is_string()) {
    agent.agent_id = fallback_id;
    agent.backend = parse_backend_string(doc.get<std::string>());
    return agent;
  }
  agent.agent_id = doc.value("id", fallback_id);
  agent.backend = backend_from_json(doc.at("backend"));
  if (doc.contains("role")) {
    auto role = parse_role(doc.at("role").get<std::string>());
    if (!role) throw ValidationError("unknown role '" + doc.at("role").get<std::string>() + "'");
    agent.role = persona_for(*role);
  }
  agent.agent_weight = doc.value("weight", 0.0);
  agent.timeout = std::chrono::milliseconds(doc.value("timeout_ms", std::int64_t{30000}));
  agent.retries = doc.value("retries", 3);
  agent.retry_initial_delay =
      std::chrono::milliseconds(doc.value("retry_initial_delay_ms", std::int64_t{1000}));
  agent.unit_cost = doc.value("unit_cost", 0.0);
  return agent;
}

inline nlohmann::json agent_to_json(const AgentConfig& agent) {
  nlohmann::json doc;
  doc["id"] = agent.agent_id;
  doc["backend"] = backend_to_json(agent.backend);
  if (agent.role) doc["role"] = std::string(to_string(agent.role->role));
  doc["weight"] = agent.agent_weight;
  doc["timeout_ms"] = agent.timeout.count();
  doc["retries"] = agent.retries;
  doc["retry_initial_delay_ms"] = agent.retry_initial_delay.count();
  doc["unit_cost"] = agent.unit_cost;
  return doc;
}

}  // namespace detail

// Resolves a rubric spec: a builtin variant name or a path to a rubric file.
inline Rubric resolve_rubric(const std::string& spec) {
  if (auto variant = parse_rubric_variant(spec)) return builtin_rubric(*variant);
  std::ifstream in(spec);
  if (!in) {
    throw ValidationError("rubric '" + spec +
                          "' is neither a builtin variant nor a readable file");
  }
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& error) {
    throw ValidationError("rubric file " + spec + ": " + error.what());
  }
  return rubric_from_json(doc);
}

inline RunConfig run_config_from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw ValidationError("config must be a JSON object");
  const int version = doc.value("schema_version", kConfigSchemaVersion);
  if (version != kConfigSchemaVersion) {
    throw VersionMismatchError("config schema_version " + std::to_string(version) +
                               " unsupported");
  }

  RunConfig config;
  config.dataset = doc.value("dataset", "");
  config.judgments = doc.value("judgments", "");
  config.out = doc.value("out", "out");
  config.parallelism = doc.value("parallelism", 4);
  config.seed = doc.value("seed", std::uint64_t{0});
  config.lenient = doc.value("lenient", false);
  config.rubric_spec = doc.value("rubric", "short");

  if (doc.contains("judge")) {
    config.judge = detail::agent_from_json(doc.at("judge"), "judge");
  }
  config.judge_template = doc.value("judge_template", "");

  if (doc.contains("agents")) {
    int index = 0;
    for (const auto& entry : doc.at("agents")) {
      config.plan.agents.push_back(
          detail::agent_from_json(entry, "agent" + std::to_string(++index)));
    }
  }
  const std::string mode = doc.value("mode", "independent");
  if (mode == "independent") config.plan.mode = PanelMode::Independent;
  else if (mode == "discussion") config.plan.mode = PanelMode::Discussion;
  else throw ValidationError("unknown panel mode '" + mode + "'");
  config.plan.passes = doc.value("passes", 2);
  if (doc.contains("summarizer")) {
    AgentConfig summarizer = detail::agent_from_json(doc.at("summarizer"), "summarizer");
    if (!summarizer.role) summarizer.role = persona_for(Role::Summarizer);
    config.plan.summarizer = std::move(summarizer);
  }

  const std::string strategy = doc.value("strategy", "weighted_average");
  auto parsed_strategy = parse_strategy(strategy);
  if (!parsed_strategy) throw ValidationError("unknown strategy '" + strategy + "'");
  config.plan.aggregation = *parsed_strategy;
  config.plan.vote_threshold = doc.value("threshold", 4.5);

  if (doc.contains("criterion_weights")) {
    for (const auto& [name, value] : doc.at("criterion_weights").items()) {
      config.weight_overrides[name] = value.get<double>();
    }
  }
  return config;
}

inline RunConfig load_run_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw NotFoundError("config file not found: " + path.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& error) {
    throw ValidationError("config file " + path.string() + ": " + error.what());
  }
  return run_config_from_json(doc);
}

// Materializes the rubric, applies weight overrides, defaults agent weights,
// and validates the whole plan. Must be called (and must succeed) before any
// agent transport is created.
inline void finalize_run_config(RunConfig& config) {
  config.plan.rubric = resolve_rubric(config.rubric_spec);
  if (!config.weight_overrides.empty()) {
    for (const auto& [name, weight] : config.weight_overrides) {
      bool matched = false;
      for (auto& criterion : config.plan.rubric.criteria) {
        if (criterion.name == name) {
          criterion.weight = weight;
          matched = true;
        }
      }
      if (!matched) {
        throw ValidationError("weight override names unknown criterion '" + name + "'");
      }
    }
    if (auto violations = validate_rubric(config.plan.rubric); !violations.empty()) {
      throw ValidationError("criterion weight overrides invalid: " +
                            violations.front().message);
    }
  }
  assign_default_agent_weights(config.plan);
  if (!config.plan.agents.empty()) validate_plan(config.plan);
  if (config.parallelism < 1) throw ValidationError("parallelism must be >= 1");
}

// Canonical JSON echo of a resolved config; object keys are sorted, so the
// dump is stable and digestable.
inline nlohmann::json to_json(const RunConfig& config) {
  nlohmann::json doc;
  doc["schema_version"] = kConfigSchemaVersion;
  doc["dataset"] = config.dataset;
  doc["judgments"] = config.judgments;
  if (config.judge) doc["judge"] = detail::agent_to_json(*config.judge);
  doc["judge_template"] = config.judge_template;
  doc["agents"] = nlohmann::json::array();
  for (const auto& agent : config.plan.agents) {
    doc["agents"].push_back(detail::agent_to_json(agent));
  }
  doc["mode"] = std::string(to_string(config.plan.mode));
  doc["passes"] = config.plan.passes;
  if (config.plan.summarizer) {
    doc["summarizer"] = detail::agent_to_json(*config.plan.summarizer);
  }
  doc["rubric"] = config.rubric_spec;
  if (!config.weight_overrides.empty()) {
    nlohmann::json overrides;
    for (const auto& [name, weight] : config.weight_overrides) overrides[name] = weight;
    doc["criterion_weights"] = std::move(overrides);
  }
  doc["strategy"] = std::string(to_string(config.plan.aggregation));
  doc["threshold"] = config.plan.vote_threshold;
  doc["out"] = config.out;
  doc["parallelism"] = config.parallelism;
  doc["seed"] = config.seed;
  doc["lenient"] = config.lenient;
  return doc;
}

inline std::string config_digest(const RunConfig& config) {
  return detail::sha256_hex(to_json(config).dump());
}

// Short content-addressed run id derived from the digest.
inline std::string run_id_for(const RunConfig& config) {
  return config_digest(config).substr(0, 16);
}

}  // namespace metajudge
