#include "guardprobe/probe.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <thread>

#include "guardprobe/util.hpp"

namespace guardprobe {

const char* probe_stage_name(ProbeStage stage) {
  return stage == ProbeStage::kInput ? "input" : "output";
}

const char* decision_name(Decision decision) {
  switch (decision) {
    case Decision::kInputGuard:
      return "INPUT_GUARD";
    case Decision::kOutputGuard:
      return "OUTPUT_GUARD";
    case Decision::kNotPresent:
      return "NOT_PRESENT";
  }
  return "NOT_PRESENT";
}

double calibrate_target_rate(const Guardrail& candidate,
                             std::span<const AdversarialPrompt> prompts) {
  if (prompts.empty()) {
    throw EmptyInputError("calibrate_target_rate: no prompts");
  }
  std::uint64_t flagged = 0;
  for (const AdversarialPrompt& p : prompts) {
    if (candidate.classify(p.full_text).is_unsafe()) ++flagged;
  }
  const double r_t = static_cast<double>(flagged) / static_cast<double>(prompts.size());
  if (r_t == 0.0) {
    throw CalibrationError(
        "candidate guardrail '" + candidate.id() +
        "' classified none of its optimized prompts UNSAFE; re-optimize with more epochs "
        "or a different seed before probing");
  }
  return r_t;
}

namespace {

struct QueryOutcome {
  bool completed = false;
  AgentResponse response;
};

ProbeReport run_stage(const AgentEndpoint& agent, const std::string& candidate_id,
                      std::span<const AdversarialPrompt> prompts, ProbeStage stage,
                      const RepeatTemplate* repeat_template, double r_t,
                      const ProbeOptions& options) {
  if (prompts.empty()) {
    throw EmptyInputError("guard test: no prompts");
  }
  if (stage == ProbeStage::kOutput) {
    repeat_template->validate();
  }

  std::vector<std::string> wire_texts;
  wire_texts.reserve(prompts.size());
  for (const AdversarialPrompt& p : prompts) {
    wire_texts.push_back(stage == ProbeStage::kInput ? p.full_text
                                                     : repeat_template->wrap(p.full_text));
  }

  std::vector<QueryOutcome> outcomes(prompts.size());
  auto run_one = [&](size_t i) {
    try {
      outcomes[i].response = agent.respond(wire_texts[i]);
      outcomes[i].completed = true;
    } catch (const std::exception&) {
      outcomes[i].completed = false;
    }
  };

  if (options.concurrency <= 1 || prompts.size() <= 1) {
    for (size_t i = 0; i < prompts.size(); ++i) run_one(i);
  } else {
    std::atomic<size_t> next{0};
    auto worker = [&] {
      for (;;) {
        const size_t i = next.fetch_add(1);
        if (i >= prompts.size()) return;
        run_one(i);
      }
    };
    std::vector<std::thread> pool;
    const size_t count = std::min(options.concurrency, prompts.size());
    pool.reserve(count);
    for (size_t t = 0; t < count; ++t) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }

  ProbeReport report;
  report.candidate_guard_id = candidate_id;
  report.agent_id = agent.id();
  report.stage = stage;
  if (repeat_template != nullptr) report.template_id = repeat_template->id;
  report.r_t = r_t;

  // Trace is assembled (and sunk) in prompt order before any statistics.
  size_t completed = 0;
  for (size_t i = 0; i < prompts.size(); ++i) {
    if (!outcomes[i].completed) continue;
    ++completed;
    const AgentResponse& resp = outcomes[i].response;
    TraceEntry entry;
    entry.query_id = prompts[i].query ? prompts[i].query->id : "";
    entry.prompt_digest = digest_hex(wire_texts[i]);
    entry.response_text = resp.text;
    entry.refused = options.agent_kind == AgentKind::kSimulated
                        ? resp.is_refusal
                        : detect_refusal(resp.text, AgentKind::kExternal, options.catalog,
                                         options.refusal_sentinel);
    if (options.trace_sink) options.trace_sink(entry);
    report.trace.push_back(std::move(entry));
  }

  const double completion =
      static_cast<double>(completed) / static_cast<double>(prompts.size());
  if (completed == 0 || completion < options.min_completion) {
    throw ProbeIncompleteError("guard test on agent '" + agent.id() + "': only " +
                               std::to_string(completed) + " of " +
                               std::to_string(prompts.size()) + " queries completed");
  }

  std::vector<bool> flags;
  flags.reserve(report.trace.size());
  for (const TraceEntry& e : report.trace) flags.push_back(e.refused);
  report.stats = refusal_stats(flags);
  report.distance = normalized_distance(report.stats.rate, r_t, options.lambda);
  return report;
}

}  // namespace

ProbeReport input_guard_test(const AgentEndpoint& agent, const std::string& candidate_id,
                             std::span<const AdversarialPrompt> prompts, double r_t,
                             const ProbeOptions& options) {
  return run_stage(agent, candidate_id, prompts, ProbeStage::kInput, nullptr, r_t, options);
}

ProbeReport output_guard_test(const AgentEndpoint& agent, const std::string& candidate_id,
                              std::span<const AdversarialPrompt> prompts,
                              const RepeatTemplate& repeat_template, double r_t,
                              const ProbeOptions& options) {
  return run_stage(agent, candidate_id, prompts, ProbeStage::kOutput, &repeat_template, r_t,
                   options);
}

IdentifyResult identify(const AgentEndpoint& agent, const Guardrail& candidate,
                        std::span<const AdversarialPrompt> prompts,
                        const RepeatTemplate& repeat_template, const ProbeOptions& options) {
  IdentifyResult result;
  result.r_t = calibrate_target_rate(candidate, prompts);  // aborts before any agent query

  result.input_report = input_guard_test(agent, candidate.id(), prompts, result.r_t, options);
  if (result.input_report.distance.guard_present) {
    result.decision = Decision::kInputGuard;
    return result;
  }

  result.output_report =
      output_guard_test(agent, candidate.id(), prompts, repeat_template, result.r_t, options);
  result.decision = result.output_report->distance.guard_present ? Decision::kOutputGuard
                                                                 : Decision::kNotPresent;
  return result;
}

std::vector<TemplateScore> evaluate_templates(std::span<const RepeatTemplate> templates,
                                              const Responder& surrogate,
                                              std::span<const std::string> probe_texts,
                                              RankKey key) {
  if (templates.empty()) {
    throw EmptyInputError("evaluate_templates: no templates");
  }
  if (probe_texts.empty()) {
    throw EmptyInputError("evaluate_templates: no probe texts");
  }

  std::vector<TemplateScore> scores;
  for (const RepeatTemplate& t : templates) {
    t.validate();
    SimilarityScores sum;
    size_t completed = 0;
    for (const std::string& text : probe_texts) {
      std::string reply;
      try {
        reply = surrogate.respond(t.wrap(text));
      } catch (const std::exception&) {
        continue;  // surrogate unavailable for this send
      }
      const SimilarityScores s = similarity(text, reply);
      sum.cosine += s.cosine;
      sum.bleu += s.bleu;
      sum.rouge1 += s.rouge1;
      sum.rouge2 += s.rouge2;
      sum.rouge_l += s.rouge_l;
      sum.rouge_lsum += s.rouge_lsum;
      ++completed;
    }
    if (completed == 0) {
      std::fprintf(stderr, "evaluate_templates: surrogate completed no sends for template '%s'; skipping\n",
                   t.id.c_str());
      continue;
    }
    const double n = static_cast<double>(completed);
    TemplateScore entry;
    entry.template_id = t.id;
    entry.mean = SimilarityScores{sum.cosine / n,  sum.bleu / n,    sum.rouge1 / n,
                                  sum.rouge2 / n,  sum.rouge_l / n, sum.rouge_lsum / n};
    entry.completed = completed;
    scores.push_back(std::move(entry));
  }

  if (scores.empty()) {
    throw ProbeIncompleteError("evaluate_templates: surrogate completed no template");
  }

  auto key_of = [key](const TemplateScore& s) {
    switch (key) {
      case RankKey::kCosine:
        return s.mean.cosine;
      case RankKey::kBleu:
        return s.mean.bleu;
      case RankKey::kRouge1:
        return s.mean.rouge1;
      case RankKey::kRouge2:
        return s.mean.rouge2;
      case RankKey::kRougeL:
        return s.mean.rouge_l;
      case RankKey::kRougeLsum:
        return s.mean.rouge_lsum;
    }
    return s.mean.rouge_l;
  };
  std::stable_sort(scores.begin(), scores.end(), [&](const TemplateScore& a, const TemplateScore& b) {
    return key_of(a) > key_of(b);
  });
  return scores;
}

}  // namespace guardprobe
