#pragma once

#include <filesystem>
#include <mutex>
#include <optional>
#include <string>

#include "guardprobe/agent.hpp"

namespace guardprobe {

// On-disk response cache keyed by (agent id, prompt digest). Entries survive
// across runs so a rerun with a warm cache issues no agent queries and a
// crashed run resumes where it stopped.
class ResponseCache {
 public:
  explicit ResponseCache(std::filesystem::path dir);

  static std::string key_digest(const std::string& agent_id, const std::string& prompt);

  std::optional<AgentResponse> get(const std::string& agent_id, const std::string& prompt) const;
  void put(const std::string& agent_id, const std::string& prompt, const AgentResponse& response);

  const std::filesystem::path& dir() const { return dir_; }

 private:
  std::filesystem::path entry_path(const std::string& digest) const;

  std::filesystem::path dir_;
  mutable std::mutex mutex_;
};

// AgentEndpoint decorator that consults the cache before querying the wrapped
// agent. Hit/miss counters back the zero-query rerun guarantee.
class CachingAgent : public AgentEndpoint {
 public:
  CachingAgent(const AgentEndpoint& inner, ResponseCache& cache);

  const std::string& id() const override { return inner_->id(); }
  AgentResponse respond(const std::string& prompt) const override;

  std::uint64_t hits() const { return hits_.load(); }
  std::uint64_t misses() const { return misses_.load(); }

 private:
  const AgentEndpoint* inner_;
  ResponseCache* cache_;
  mutable std::atomic<std::uint64_t> hits_{0};
  mutable std::atomic<std::uint64_t> misses_{0};
};

}  // namespace guardprobe
