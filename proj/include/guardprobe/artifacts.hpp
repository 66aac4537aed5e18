#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "guardprobe/core.hpp"
#include "guardprobe/optimizer.hpp"
#include "guardprobe/probe.hpp"

namespace guardprobe {

// One line of the prompts artifact. Token ids are the source of truth; the
// text renderings are advisory copies.
struct PromptRecord {
  AdversarialPrompt prompt;
  std::uint64_t seed = 0;
  std::string config_digest;

  nlohmann::json to_json() const;
  static PromptRecord from_json(const nlohmann::json& doc);
};

void write_prompt_records(const std::filesystem::path& path,
                          const std::vector<PromptRecord>& records);
std::vector<PromptRecord> read_prompt_records(const std::filesystem::path& path);

nlohmann::json report_to_json(const ProbeReport& report);
ProbeReport report_from_json(const nlohmann::json& doc);

nlohmann::json trace_entry_to_json(const TraceEntry& entry);

// Run manifest: digests plus artifact paths; a manifest fully determines a
// rerun. Rewrites are skipped when only created_at would change, so reruns
// leave byte-identical trees.
struct RunManifest {
  std::string run_id;
  std::string command;
  std::string config_digest;
  std::string registry_digest;
  std::string query_digest;
  std::map<std::string, std::string> artifacts;
  std::string created_at;

  nlohmann::json to_json() const;
};

void write_manifest(const std::filesystem::path& path, const RunManifest& manifest);

// Writes text to path. Returns true if the file changed (content differs or
// the file did not exist).
bool write_file_if_changed(const std::filesystem::path& path, const std::string& content);

}  // namespace guardprobe
