#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace guardprobe {

// ---------------------------------------------------------------------------
// Errors. The CLI maps these onto its exit-code contract.
// ---------------------------------------------------------------------------

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParameterError : public Error {
 public:
  using Error::Error;
};

// The candidate guardrail never refused its own optimized prompts; the
// normalized distance is undefined and identification cannot proceed.
class CalibrationError : public Error {
 public:
  using Error::Error;
};

class EmptyInputError : public Error {
 public:
  using Error::Error;
};

// White-box or differentiable access was required but is not available.
class AccessError : public Error {
 public:
  using Error::Error;
};

class GuardBackendError : public Error {
 public:
  GuardBackendError(const std::string& what, bool retryable)
      : Error(what), retryable_(retryable) {}
  bool retryable() const { return retryable_; }

 private:
  bool retryable_ = false;
};

class AgentBackendError : public Error {
 public:
  using Error::Error;
};

class SetOptimizationError : public Error {
 public:
  using Error::Error;
};

class ProbeIncompleteError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// ---------------------------------------------------------------------------
// Domain types
// ---------------------------------------------------------------------------

using TokenId = std::uint32_t;

enum class Label { kSafe, kUnsafe };

const char* label_name(Label label);

struct LabelScores {
  double safe = 0.0;
  double unsafe = 0.0;
};

// Binary safety verdict emitted by any guardrail. Scores, when present, are
// the guard's per-label probabilities.
struct Verdict {
  Label label = Label::kSafe;
  std::optional<LabelScores> scores;

  bool is_unsafe() const { return label == Label::kUnsafe; }
};

struct Query {
  std::string id;
  std::string text;
};

struct QuerySet {
  std::vector<Query> queries;

  size_t size() const { return queries.size(); }
  bool empty() const { return queries.empty(); }

  // Throws ParameterError on duplicate ids or empty query text.
  void validate() const;
};

// An optimized adversarial prefix bound to the query it was optimized with.
// `query` is absent only for prefix-alone optimization (the no-query ablation
// mode); then full_text equals prefix_text.
struct AdversarialPrompt {
  std::vector<TokenId> prefix_tokens;
  std::string prefix_text;
  std::optional<Query> query;
  std::string full_text;
  std::string candidate_guard_id;
  double final_loss = 0.0;
  int epochs_run = 0;
};

struct RefusalStats {
  std::uint64_t total = 0;
  std::uint64_t refusals = 0;
  double rate = 0.0;
};

struct DistanceResult {
  double r = 0.0;
  double r_t = 0.0;
  double lambda = 0.0;
  double d = 0.0;
  bool guard_present = false;
};

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

// d = (min(r, r_t) / r_t)^lambda, with the presence decision d > 0.5 (strict:
// d == 0.5 is not presence). r_t == 0 raises CalibrationError, lambda < 1 and
// out-of-range rates raise ParameterError.
DistanceResult normalized_distance(double r, double r_t, double lambda);

// Exact refusal rate from counts. total == 0 raises EmptyInputError.
RefusalStats refusal_stats_from_counts(std::uint64_t refusals, std::uint64_t total);

RefusalStats refusal_stats(const std::vector<bool>& refused_flags);

}  // namespace guardprobe
