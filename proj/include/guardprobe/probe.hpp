#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "guardprobe/agent.hpp"
#include "guardprobe/core.hpp"
#include "guardprobe/guards.hpp"
#include "guardprobe/templates.hpp"
#include "guardprobe/textsim.hpp"

namespace guardprobe {

enum class ProbeStage { kInput, kOutput };
enum class Decision { kInputGuard, kOutputGuard, kNotPresent };

const char* probe_stage_name(ProbeStage stage);
const char* decision_name(Decision decision);

struct TraceEntry {
  std::string query_id;  // empty for prefix-alone prompts
  std::string prompt_digest;
  std::string response_text;
  bool refused = false;
};

struct ProbeReport {
  std::string candidate_guard_id;
  std::string agent_id;
  ProbeStage stage = ProbeStage::kInput;
  std::optional<std::string> template_id;  // output tests only
  RefusalStats stats;
  double r_t = 0.0;
  DistanceResult distance;
  std::vector<TraceEntry> trace;
};

struct ProbeOptions {
  double lambda = 2.0;
  size_t concurrency = 1;
  // Minimum fraction of prompts that must complete before a report is
  // produced; below this the test raises ProbeIncompleteError.
  double min_completion = 0.9;
  AgentKind agent_kind = AgentKind::kSimulated;
  RefusalCatalog catalog = RefusalCatalog::builtin();
  std::string refusal_sentinel = kDefaultRefusalSentinel;
  // Invoked per completed prompt, in order, before any distance computation.
  std::function<void(const TraceEntry&)> trace_sink;
};

// Fraction of prompts the candidate itself classifies UNSAFE; the calibration
// anchor shared by the input and output tests. Zero raises CalibrationError.
double calibrate_target_rate(const Guardrail& candidate,
                             std::span<const AdversarialPrompt> prompts);

// Queries the agent with each prompt's full text verbatim.
ProbeReport input_guard_test(const AgentEndpoint& agent, const std::string& candidate_id,
                             std::span<const AdversarialPrompt> prompts, double r_t,
                             const ProbeOptions& options = {});

// Wraps each prompt in the repeat template before querying; r_t is the same
// calibration value as the input test.
ProbeReport output_guard_test(const AgentEndpoint& agent, const std::string& candidate_id,
                              std::span<const AdversarialPrompt> prompts,
                              const RepeatTemplate& repeat_template, double r_t,
                              const ProbeOptions& options = {});

struct IdentifyResult {
  Decision decision = Decision::kNotPresent;
  double r_t = 0.0;
  ProbeReport input_report;
  std::optional<ProbeReport> output_report;  // absent when the input test decided
};

// Two-step workflow: run the input test; only when it is negative, run the
// output test. Calibration failures abort before any agent query.
IdentifyResult identify(const AgentEndpoint& agent, const Guardrail& candidate,
                        std::span<const AdversarialPrompt> prompts,
                        const RepeatTemplate& repeat_template, const ProbeOptions& options = {});

// ---------------------------------------------------------------------------
// Repeat-template evaluation against a surrogate responder
// ---------------------------------------------------------------------------

enum class RankKey { kCosine, kBleu, kRouge1, kRouge2, kRougeL, kRougeLsum };

struct TemplateScore {
  std::string template_id;
  SimilarityScores mean;
  size_t completed = 0;
};

// Sends every probe text through every template, scores responses against the
// embedded text, and ranks by the configured key (descending). Templates
// whose sends all fail are skipped with a note; at least one template must
// complete.
std::vector<TemplateScore> evaluate_templates(std::span<const RepeatTemplate> templates,
                                              const Responder& surrogate,
                                              std::span<const std::string> probe_texts,
                                              RankKey key = RankKey::kRougeL);

}  // namespace guardprobe
