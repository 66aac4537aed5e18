#pragma once

#include <string>

#include "guardprobe/agent.hpp"
#include "guardprobe/guards.hpp"

namespace guardprobe {

struct RemoteOptions {
  std::string endpoint;     // http://host:port
  std::string api_key_env;  // env var holding the bearer token; empty = none
  int timeout_ms = 5000;
  int retries = 2;  // additional attempts after the first
};

// Black-box guard behind an HTTP endpoint. POST /classify {"text": ...}
// -> {"label": "safe"|"unsafe", "scores": {"safe": x, "unsafe": y}?}.
class RemoteGuard : public Guardrail {
 public:
  RemoteGuard(std::string id, RemoteOptions options);

  Verdict classify(const std::string& text) const override;

 private:
  RemoteOptions options_;
};

// Text-in/text-out responder behind an HTTP endpoint.
// POST /respond {"prompt": ...} -> {"text": ...}.
class RemoteResponder : public Responder {
 public:
  explicit RemoteResponder(RemoteOptions options);

  std::string respond(const std::string& prompt) const override;

 private:
  RemoteOptions options_;
};

// Adapter slot for real safety scorers (hate-speech detectors and similar).
// POST /score {"text": ...} -> {"value": x in [0, 1]}. Not differentiable;
// optimization against it requires the gradient-free mode.
class RemoteScorer : public SafetyScorer {
 public:
  RemoteScorer(std::string id, std::shared_ptr<const Tokenizer> tokenizer,
               RemoteOptions options);

  double score(const std::string& text) const override;
  double score_tokens(std::span<const TokenId> tokens) const override;

 private:
  std::shared_ptr<const Tokenizer> tokenizer_;
  RemoteOptions options_;
};

}  // namespace guardprobe
