#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "json.hpp"

#include "guardprobe/agent.hpp"
#include "guardprobe/core.hpp"
#include "guardprobe/guards.hpp"
#include "guardprobe/optimizer.hpp"
#include "guardprobe/probe.hpp"
#include "guardprobe/templates.hpp"
#include "guardprobe/tokenizer.hpp"

namespace guardprobe {

// How a simulated agent is assembled from registry pieces.
struct AgentBlueprint {
  AgentConfig config;
  std::string responder_kind;  // echo | repeater | fixed | remote
  std::string fixed_reply;
  double drop_prob = 0.0;
  std::uint64_t responder_seed = 0;
  // remote responder settings
  std::string endpoint;
  std::string api_key_env;
  int timeout_ms = 5000;
  int retries = 2;
};

// Everything the config file declares, resolved and constructed.
class Registry {
 public:
  std::map<std::string, std::shared_ptr<const Tokenizer>> tokenizers;
  std::map<std::string, std::shared_ptr<const Guardrail>> guards;
  std::map<std::string, std::shared_ptr<const SafetyScorer>> scorers;
  std::map<std::string, AgentBlueprint> agents;
  std::vector<RepeatTemplate> templates;

  const Guardrail& guard(const std::string& id) const;
  std::shared_ptr<const Guardrail> guard_ptr(const std::string& id) const;
  const WhiteBoxGuard& white_box_guard(const std::string& id) const;
  const SafetyScorer* scorer(const std::string& id) const;  // null for empty id
  const RepeatTemplate& repeat_template(const std::string& id) const;

  // Fresh agent instance (query counters start at zero).
  std::shared_ptr<Agent> build_agent(const std::string& id) const;
};

struct ProjectConfig {
  nlohmann::json raw;
  std::string digest;           // canonical dump of the full config
  std::string registry_digest;  // guards + scorers + tokenizers sections only
  std::filesystem::path base_dir;

  Registry registry;
  QuerySet queries;
  std::string query_digest;

  OptimizerConfig optimizer;
  std::string candidate_id;
  std::string scorer_id;  // empty = no safety scorer term
  size_t workers = 1;

  ProbeOptions probe;
  std::string template_id = default_template_id();

  std::filesystem::path out_dir;
  std::filesystem::path cache_dir;
};

// Parses and validates a config file. Parse failures carry file:line; semantic
// failures carry the JSON path of the offending key.
ProjectConfig load_config(const std::filesystem::path& path);

ProjectConfig config_from_json(const nlohmann::json& doc, const std::filesystem::path& base_dir);

QuerySet load_query_file(const std::filesystem::path& path);

std::string queries_digest(const QuerySet& qs);

}  // namespace guardprobe
