#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "guardprobe/core.hpp"
#include "guardprobe/guards.hpp"

namespace guardprobe {

enum class SearchMode { kGradientGuided, kCoordinateFree };
enum class PrefixInit { kFiller, kRandom };

struct OptimizerConfig {
  size_t prefix_length = 32;
  double alpha = 0.01;
  double beta = 1000.0;
  size_t epochs = 200;
  size_t batch_size = 64;
  size_t top_k = 256;
  std::uint64_t seed = 0;
  SearchMode search_mode = SearchMode::kGradientGuided;
  PrefixInit init = PrefixInit::kFiller;
  // Epochs without improvement before the search stops early.
  size_t patience = 50;
  double cross_entropy_cap = kCrossEntropyCap;

  void validate() const;
};

struct LossBreakdown {
  double l1 = 0.0;     // cross-entropy toward UNSAFE on the candidate
  double l2 = 0.0;     // negated cross-entropy toward SAFE (<= 0)
  double l3 = 0.0;     // scorer cross-entropy toward risk 0
  double total = 0.0;  // l1 + alpha*l2 + beta*l3
};

// Candidate guard + optional safety scorer + loss weights, bundled so loss
// values and token gradients come from one place.
class LossObjective {
 public:
  LossObjective(const WhiteBoxGuard& guard, const SafetyScorer* scorer, double alpha,
                double beta, double cap = kCrossEntropyCap);

  LossBreakdown evaluate(std::span<const TokenId> tokens) const;

  bool differentiable() const;

  // Entry (p, v) is the first-order change in total loss if the token at
  // positions[p] is replaced by vocabulary token v (gradient linearization,
  // zero for the incumbent token). Throws AccessError when any participating
  // backend lacks gradients.
  GradMatrix replacement_gradients(std::span<const TokenId> tokens,
                                   std::span<const size_t> positions) const;

  const WhiteBoxGuard& guard() const { return *guard_; }
  double alpha() const { return alpha_; }
  double beta() const { return beta_; }

 private:
  const WhiteBoxGuard* guard_;
  const SafetyScorer* scorer_;  // may be null (l3 = 0)
  double alpha_;
  double beta_;
  double cap_;
};

// Loss for an explicit prefix-plus-query token sequence.
LossBreakdown compute_loss(const WhiteBoxGuard& candidate, const SafetyScorer* scorer,
                           std::span<const TokenId> prompt_tokens, const OptimizerConfig& config);

// Gradient matrix for the combined objective over the given mutable
// positions, per the white-box module contract.
GradMatrix token_gradients(const LossObjective& objective, std::span<const TokenId> tokens,
                           std::span<const size_t> mutable_positions);

struct EpochLogEntry {
  size_t epoch = 0;
  LossBreakdown best;  // incumbent after this epoch
};

struct OptimizeResult {
  AdversarialPrompt prompt;
  std::vector<EpochLogEntry> epoch_log;
  bool converged_early = false;
};

// Greedy coordinate search over the prefix positions. Per epoch: propose
// batch_size single-token swaps (top-k gradient candidates in gradient-guided
// mode, uniform over the vocabulary otherwise), evaluate the exact loss for
// each, and keep the best proposal only if it strictly improves the
// incumbent. Query tokens are never mutated.
OptimizeResult optimize_prefix(const WhiteBoxGuard& candidate, const SafetyScorer* scorer,
                               const Query& query, const OptimizerConfig& config);

// Prefix-alone variant used by the no-query ablation mode; `slot` salts the
// seed so independent prefixes stay distinct.
OptimizeResult optimize_prefix_alone(const WhiteBoxGuard& candidate, const SafetyScorer* scorer,
                                     size_t slot, const OptimizerConfig& config);

struct OptimizeFailure {
  std::string query_id;
  std::string error;
};

struct OptimizeSetResult {
  std::vector<OptimizeResult> results;  // input order, failed queries omitted
  std::vector<OptimizeFailure> failures;

  std::vector<AdversarialPrompt> prompts() const;
};

// One independent optimization per query. Throws SetOptimizationError when
// 10% or more of the queries fail. `workers` > 1 runs queries in parallel;
// results are deterministic either way because each query owns its seed.
OptimizeSetResult optimize_set(const WhiteBoxGuard& candidate, const SafetyScorer* scorer,
                               const QuerySet& query_set, const OptimizerConfig& config,
                               size_t workers = 1);

}  // namespace guardprobe
