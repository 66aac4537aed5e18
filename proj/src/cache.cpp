#include "guardprobe/cache.hpp"

#include <fstream>

#include "json.hpp"

#include "guardprobe/util.hpp"

namespace guardprobe {

namespace fs = std::filesystem;
using nlohmann::json;

ResponseCache::ResponseCache(fs::path dir) : dir_(std::move(dir)) {
  fs::create_directories(dir_);
}

std::string ResponseCache::key_digest(const std::string& agent_id, const std::string& prompt) {
  return digest_hex(agent_id + '\x1f' + prompt);
}

fs::path ResponseCache::entry_path(const std::string& digest) const {
  return dir_ / (digest + ".json");
}

std::optional<AgentResponse> ResponseCache::get(const std::string& agent_id,
                                                const std::string& prompt) const {
  std::lock_guard<std::mutex> lock(mutex_);
  const fs::path path = entry_path(key_digest(agent_id, prompt));
  std::ifstream in(path);
  if (!in) return std::nullopt;
  json doc;
  try {
    in >> doc;
  } catch (const json::exception&) {
    return std::nullopt;  // corrupt entry: treat as a miss and re-query
  }
  AgentResponse resp;
  resp.text = doc.value("text", "");
  resp.is_refusal = doc.value("refused", false);
  if (doc.contains("stage") && !doc["stage"].is_null()) {
    resp.refusal_stage =
        doc["stage"] == "input" ? RefusalStage::kInput : RefusalStage::kOutput;
  }
  return resp;
}

void ResponseCache::put(const std::string& agent_id, const std::string& prompt,
                        const AgentResponse& response) {
  std::lock_guard<std::mutex> lock(mutex_);
  json doc;
  doc["agent_id"] = agent_id;
  doc["prompt_digest"] = digest_hex(prompt);
  doc["text"] = response.text;
  doc["refused"] = response.is_refusal;
  if (response.refusal_stage) {
    doc["stage"] = *response.refusal_stage == RefusalStage::kInput ? "input" : "output";
  } else {
    doc["stage"] = nullptr;
  }
  const fs::path path = entry_path(key_digest(agent_id, prompt));
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp);
    out << doc.dump(2) << '\n';
  }
  fs::rename(tmp, path);
}

CachingAgent::CachingAgent(const AgentEndpoint& inner, ResponseCache& cache)
    : inner_(&inner), cache_(&cache) {}

AgentResponse CachingAgent::respond(const std::string& prompt) const {
  if (auto cached = cache_->get(inner_->id(), prompt)) {
    hits_.fetch_add(1);
    return *cached;
  }
  AgentResponse resp = inner_->respond(prompt);
  cache_->put(inner_->id(), prompt, resp);
  misses_.fetch_add(1);
  return resp;
}

}  // namespace guardprobe
