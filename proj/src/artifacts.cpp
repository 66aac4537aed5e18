#include "guardprobe/artifacts.hpp"

#include <fstream>
#include <sstream>

#include "guardprobe/util.hpp"

namespace guardprobe {

namespace fs = std::filesystem;
using nlohmann::json;

json PromptRecord::to_json() const {
  json doc;
  doc["candidate_guard_id"] = prompt.candidate_guard_id;
  if (prompt.query) {
    doc["query_id"] = prompt.query->id;
    doc["query_text"] = prompt.query->text;
  } else {
    doc["query_id"] = nullptr;
    doc["query_text"] = nullptr;
  }
  doc["prefix_token_ids"] = prompt.prefix_tokens;
  doc["prefix_text"] = prompt.prefix_text;
  doc["full_text"] = prompt.full_text;
  doc["final_loss"] = prompt.final_loss;
  doc["epochs_run"] = prompt.epochs_run;
  doc["seed"] = seed;
  doc["config_digest"] = config_digest;
  return doc;
}

PromptRecord PromptRecord::from_json(const json& doc) {
  PromptRecord rec;
  rec.prompt.candidate_guard_id = doc.at("candidate_guard_id").get<std::string>();
  if (doc.contains("query_id") && !doc["query_id"].is_null()) {
    rec.prompt.query = Query{doc["query_id"].get<std::string>(),
                             doc.value("query_text", std::string())};
  }
  rec.prompt.prefix_tokens = doc.at("prefix_token_ids").get<std::vector<TokenId>>();
  rec.prompt.prefix_text = doc.value("prefix_text", "");
  rec.prompt.full_text = doc.at("full_text").get<std::string>();
  rec.prompt.final_loss = doc.value("final_loss", 0.0);
  rec.prompt.epochs_run = doc.value("epochs_run", 0);
  rec.seed = doc.value("seed", std::uint64_t{0});
  rec.config_digest = doc.value("config_digest", "");
  return rec;
}

void write_prompt_records(const fs::path& path, const std::vector<PromptRecord>& records) {
  std::ostringstream out;
  for (const PromptRecord& rec : records) {
    out << rec.to_json().dump() << '\n';
  }
  write_file_if_changed(path, out.str());
}

std::vector<PromptRecord> read_prompt_records(const fs::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("cannot open prompts artifact: " + path.string());
  }
  std::vector<PromptRecord> records;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      records.push_back(PromptRecord::from_json(json::parse(line)));
    } catch (const json::exception& e) {
      throw ConfigError(path.string() + ":" + std::to_string(line_no) +
                        ": bad prompt record: " + e.what());
    }
  }
  if (records.empty()) {
    throw ConfigError("prompts artifact is empty: " + path.string());
  }
  return records;
}

json trace_entry_to_json(const TraceEntry& entry) {
  json doc;
  doc["query_id"] = entry.query_id;
  doc["prompt_digest"] = entry.prompt_digest;
  doc["response_text"] = entry.response_text;
  doc["refused"] = entry.refused;
  return doc;
}

json report_to_json(const ProbeReport& report) {
  json doc;
  doc["candidate_guard_id"] = report.candidate_guard_id;
  doc["agent_id"] = report.agent_id;
  doc["stage"] = probe_stage_name(report.stage);
  if (report.template_id) {
    doc["template_id"] = *report.template_id;
  }
  doc["r_t"] = report.r_t;
  doc["stats"] = {{"total", report.stats.total},
                  {"refusals", report.stats.refusals},
                  {"rate", report.stats.rate}};
  doc["distance"] = {{"r", report.distance.r},
                     {"r_t", report.distance.r_t},
                     {"lambda", report.distance.lambda},
                     {"d", report.distance.d},
                     {"guard_present", report.distance.guard_present}};
  json trace = json::array();
  for (const TraceEntry& e : report.trace) {
    trace.push_back(trace_entry_to_json(e));
  }
  doc["trace"] = std::move(trace);
  return doc;
}

ProbeReport report_from_json(const json& doc) {
  ProbeReport report;
  report.candidate_guard_id = doc.at("candidate_guard_id").get<std::string>();
  report.agent_id = doc.at("agent_id").get<std::string>();
  report.stage =
      doc.at("stage").get<std::string>() == "output" ? ProbeStage::kOutput : ProbeStage::kInput;
  if (doc.contains("template_id")) {
    report.template_id = doc["template_id"].get<std::string>();
  }
  report.r_t = doc.at("r_t").get<double>();
  const json& stats = doc.at("stats");
  report.stats = RefusalStats{stats.at("total").get<std::uint64_t>(),
                              stats.at("refusals").get<std::uint64_t>(),
                              stats.at("rate").get<double>()};
  const json& dist = doc.at("distance");
  report.distance = DistanceResult{dist.at("r").get<double>(), dist.at("r_t").get<double>(),
                                   dist.at("lambda").get<double>(), dist.at("d").get<double>(),
                                   dist.at("guard_present").get<bool>()};
  if (doc.contains("trace")) {
    for (const json& e : doc["trace"]) {
      report.trace.push_back(TraceEntry{e.value("query_id", ""), e.value("prompt_digest", ""),
                                        e.value("response_text", ""), e.value("refused", false)});
    }
  }
  return report;
}

json RunManifest::to_json() const {
  json doc;
  doc["run_id"] = run_id;
  doc["command"] = command;
  doc["config_digest"] = config_digest;
  doc["registry_digest"] = registry_digest;
  doc["query_digest"] = query_digest;
  doc["artifacts"] = artifacts;
  doc["created_at"] = created_at;
  return doc;
}

void write_manifest(const fs::path& path, const RunManifest& manifest) {
  if (fs::exists(path)) {
    try {
      json existing = json::parse(read_file(path));
      json fresh = manifest.to_json();
      existing.erase("created_at");
      fresh.erase("created_at");
      if (existing == fresh) {
        return;  // identical rerun: keep the original manifest bytes
      }
    } catch (const json::exception&) {
      // fall through and rewrite
    }
  }
  std::ofstream out(path);
  out << manifest.to_json().dump(2) << '\n';
}

bool write_file_if_changed(const fs::path& path, const std::string& content) {
  if (fs::exists(path)) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream current;
    current << in.rdbuf();
    if (current.str() == content) return false;
  }
  if (path.has_parent_path()) {
    fs::create_directories(path.parent_path());
  }
  std::ofstream out(path, std::ios::binary);
  out << content;
  return true;
}

}  // namespace guardprobe
