#include "guardprobe/remote.hpp"

#include <cstdlib>

#include "httplib.h"
#include "json.hpp"

namespace guardprobe {

namespace {

using nlohmann::json;

struct PostResult {
  bool ok = false;
  bool retryable = false;
  std::string body;
  std::string error;
};

PostResult post_json(const RemoteOptions& options, const std::string& path,
                     const json& payload) {
  httplib::Client client(options.endpoint);
  client.set_connection_timeout(0, options.timeout_ms * 1000);
  client.set_read_timeout(0, options.timeout_ms * 1000);
  if (!options.api_key_env.empty()) {
    if (const char* key = std::getenv(options.api_key_env.c_str())) {
      client.set_default_headers({{"Authorization", std::string("Bearer ") + key}});
    }
  }

  PostResult result;
  for (int attempt = 0; attempt <= options.retries; ++attempt) {
    auto res = client.Post(path, payload.dump(), "application/json");
    if (res && res->status == 200) {
      result.ok = true;
      result.body = res->body;
      return result;
    }
    if (res) {
      result.error = "HTTP " + std::to_string(res->status);
      result.retryable = res->status >= 500;
      if (!result.retryable) return result;  // 4xx will not improve on retry
    } else {
      result.error = "connection failed: " + httplib::to_string(res.error());
      result.retryable = true;
    }
  }
  return result;
}

}  // namespace

RemoteGuard::RemoteGuard(std::string id, RemoteOptions options)
    : Guardrail(GuardrailSpec{std::move(id), Access::kBlackBox, {}}),
      options_(std::move(options)) {}

Verdict RemoteGuard::classify(const std::string& text) const {
  if (text.empty()) {
    throw EmptyInputError("classify(" + id() + "): empty input text");
  }
  const PostResult res = post_json(options_, "/classify", json{{"text", text}});
  if (!res.ok) {
    throw GuardBackendError("remote guard '" + id() + "': " + res.error, res.retryable);
  }
  json doc;
  try {
    doc = json::parse(res.body);
  } catch (const json::exception& e) {
    throw GuardBackendError("remote guard '" + id() + "': bad response: " + e.what(), false);
  }
  Verdict v;
  const std::string label = doc.value("label", "");
  if (label == "unsafe") {
    v.label = Label::kUnsafe;
  } else if (label == "safe") {
    v.label = Label::kSafe;
  } else {
    throw GuardBackendError("remote guard '" + id() + "': unknown label '" + label + "'", false);
  }
  if (doc.contains("scores") && doc["scores"].is_object()) {
    LabelScores scores;
    scores.safe = doc["scores"].value("safe", 0.0);
    scores.unsafe = doc["scores"].value("unsafe", 0.0);
    v.scores = scores;
  }
  return v;
}

RemoteResponder::RemoteResponder(RemoteOptions options) : options_(std::move(options)) {}

std::string RemoteResponder::respond(const std::string& prompt) const {
  const PostResult res = post_json(options_, "/respond", json{{"prompt", prompt}});
  if (!res.ok) {
    throw AgentBackendError("remote responder at " + options_.endpoint + ": " + res.error);
  }
  try {
    return json::parse(res.body).value("text", "");
  } catch (const json::exception& e) {
    throw AgentBackendError("remote responder at " + options_.endpoint +
                            ": bad response: " + e.what());
  }
}

RemoteScorer::RemoteScorer(std::string id, std::shared_ptr<const Tokenizer> tokenizer,
                           RemoteOptions options)
    : SafetyScorer(std::move(id)), tokenizer_(std::move(tokenizer)),
      options_(std::move(options)) {}

double RemoteScorer::score(const std::string& text) const {
  if (text.empty()) {
    throw EmptyInputError("score(" + id() + "): empty input text");
  }
  const PostResult res = post_json(options_, "/score", json{{"text", text}});
  if (!res.ok) {
    throw GuardBackendError("remote scorer '" + id() + "': " + res.error, res.retryable);
  }
  double value = 0.0;
  try {
    value = json::parse(res.body).value("value", 0.0);
  } catch (const json::exception& e) {
    throw GuardBackendError("remote scorer '" + id() + "': bad response: " + e.what(), false);
  }
  if (value < 0.0 || value > 1.0) {
    throw GuardBackendError("remote scorer '" + id() + "': value out of [0, 1]", false);
  }
  return value;
}

double RemoteScorer::score_tokens(std::span<const TokenId> tokens) const {
  if (!tokenizer_) {
    throw AccessError("remote scorer '" + id() + "' has no tokenizer for token input");
  }
  return score(tokenizer_->decode(tokens));
}

}  // namespace guardprobe
