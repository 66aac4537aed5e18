#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "guardprobe/core.hpp"
#include "guardprobe/guards.hpp"
#include "guardprobe/templates.hpp"

namespace guardprobe {

enum class RefusalStage { kInput, kOutput };
enum class AgentKind { kSimulated, kExternal };

constexpr const char* kDefaultRefusalSentinel = "[REFUSED]";

struct VerdictLogEntry {
  std::string guard_id;
  RefusalStage stage = RefusalStage::kInput;
  Label label = Label::kSafe;
};

struct AgentResponse {
  std::string text;
  bool is_refusal = false;
  std::optional<RefusalStage> refusal_stage;
  std::vector<VerdictLogEntry> raw_verdicts;  // diagnostics; never persisted in reports
};

struct AgentConfig {
  std::string id;
  std::string responder_id;
  std::optional<std::string> input_guard_id;
  std::optional<std::string> output_guard_id;
  std::string refusal_sentinel = kDefaultRefusalSentinel;
};

// ---------------------------------------------------------------------------
// Base responders
// ---------------------------------------------------------------------------

class Responder {
 public:
  virtual ~Responder() = default;
  // Throws AgentBackendError when the backend fails.
  virtual std::string respond(const std::string& prompt) const = 0;
};

// Returns the prompt verbatim; the ideal repeater for output-stage tests.
class EchoResponder : public Responder {
 public:
  std::string respond(const std::string& prompt) const override { return prompt; }
};

class FixedResponder : public Responder {
 public:
  explicit FixedResponder(std::string reply) : reply_(std::move(reply)) {}
  std::string respond(const std::string&) const override { return reply_; }

 private:
  std::string reply_;
};

// Recognizes registered repeat templates and answers with the embedded
// payload, optionally dropping each payload word with probability drop_prob
// to emulate imperfect repetition. Non-template prompts get a fixed benign
// reply, mirroring an assistant that answers the question instead of echoing
// it.
class TemplateRepeaterResponder : public Responder {
 public:
  TemplateRepeaterResponder(std::vector<RepeatTemplate> templates, double drop_prob = 0.0,
                            std::uint64_t seed = 0, std::string fallback_reply = "OK.");

  std::string respond(const std::string& prompt) const override;

 private:
  std::vector<RepeatTemplate> templates_;
  double drop_prob_ = 0.0;
  std::uint64_t seed_ = 0;
  std::string fallback_;
};

// ---------------------------------------------------------------------------
// Agent pipeline
// ---------------------------------------------------------------------------

// Anything that can answer prompts: a simulated pipeline, a caching wrapper,
// or a remote adapter.
class AgentEndpoint {
 public:
  virtual ~AgentEndpoint() = default;
  virtual const std::string& id() const = 0;
  virtual AgentResponse respond(const std::string& prompt) const = 0;
};

// Guarded pipeline: optional input guardrail, base responder, optional output
// guardrail. An UNSAFE input verdict short-circuits: the responder is never
// invoked and the canonical refusal sentinel is returned.
class Agent : public AgentEndpoint {
 public:
  Agent(std::string id, std::shared_ptr<const Responder> responder,
        std::shared_ptr<const Guardrail> input_guard = nullptr,
        std::shared_ptr<const Guardrail> output_guard = nullptr,
        std::string refusal_sentinel = kDefaultRefusalSentinel);

  const std::string& id() const override { return id_; }
  const std::string& refusal_sentinel() const { return sentinel_; }

  AgentResponse respond(const std::string& prompt) const override;

  std::uint64_t queries_issued() const { return queries_.load(); }
  std::uint64_t responder_calls() const { return responder_calls_.load(); }

 private:
  std::string id_;
  std::shared_ptr<const Responder> responder_;
  std::shared_ptr<const Guardrail> input_guard_;
  std::shared_ptr<const Guardrail> output_guard_;
  std::string sentinel_;
  mutable std::atomic<std::uint64_t> queries_{0};
  mutable std::atomic<std::uint64_t> responder_calls_{0};
};

// ---------------------------------------------------------------------------
// Refusal detection
// ---------------------------------------------------------------------------

// Case-insensitive phrase catalog for natural-language refusals from external
// agents. Ambiguous texts resolve to "not a refusal" so under-counting biases
// toward non-identification.
struct RefusalCatalog {
  std::vector<std::string> phrases;

  bool matches(const std::string& text) const;

  static RefusalCatalog builtin();
};

bool detect_refusal(const std::string& text, AgentKind kind,
                    const RefusalCatalog& catalog = RefusalCatalog::builtin(),
                    const std::string& sentinel = kDefaultRefusalSentinel);

RefusalStats refusal_stats(std::span<const AgentResponse> responses);

}  // namespace guardprobe
