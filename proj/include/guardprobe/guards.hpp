#pragma once

#include <memory>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "guardprobe/core.hpp"
#include "guardprobe/tokenizer.hpp"

namespace guardprobe {

enum class Access { kWhiteBox, kBlackBox };

struct GuardrailSpec {
  std::string id;
  Access access = Access::kBlackBox;
  std::string tokenizer_id;  // required for white-box guards
};

struct SafetyScore {
  double value = 0.0;  // 0 = no risk, 1 = potential risk
};

// Cross-entropy values are capped here so the combined optimization loss stays
// finite even when a guard emits a point-mass verdict.
constexpr double kCrossEntropyCap = 1e4;

struct LogitPair {
  double unsafe_logit = 0.0;
  double safe_logit = 0.0;
};

struct VerdictLosses {
  double loss_unsafe = 0.0;  // cross-entropy against target UNSAFE
  double loss_safe = 0.0;    // cross-entropy against target SAFE
};

// Dense [position x vocabulary] matrix used for token gradients.
class GradMatrix {
 public:
  GradMatrix() = default;
  GradMatrix(size_t rows, size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

  size_t rows() const { return rows_; }
  size_t cols() const { return cols_; }
  double& at(size_t r, size_t c) { return data_[r * cols_ + c]; }
  double at(size_t r, size_t c) const { return data_[r * cols_ + c]; }

 private:
  size_t rows_ = 0;
  size_t cols_ = 0;
  std::vector<double> data_;
};

struct LogitGradients {
  GradMatrix d_unsafe;  // d unsafe_logit / d onehot(position, token)
  GradMatrix d_safe;
};

// Black-box guardrail surface: text in, verdict out.
class Guardrail {
 public:
  explicit Guardrail(GuardrailSpec spec) : spec_(std::move(spec)) {}
  virtual ~Guardrail() = default;

  const GuardrailSpec& spec() const { return spec_; }
  const std::string& id() const { return spec_.id; }

  // Throws EmptyInputError on empty text, GuardBackendError when the backend
  // is unreachable.
  virtual Verdict classify(const std::string& text) const = 0;

 private:
  GuardrailSpec spec_;
};

// White-box surface: two-class verdict logits over a token sequence, with
// optional differentiability. classify() routes through the same logits so
// the label always agrees with the loss ordering.
class WhiteBoxGuard : public Guardrail {
 public:
  WhiteBoxGuard(GuardrailSpec spec, std::shared_ptr<const Tokenizer> tokenizer);

  const Tokenizer& tokenizer() const { return *tokenizer_; }
  std::shared_ptr<const Tokenizer> tokenizer_ptr() const { return tokenizer_; }

  virtual LogitPair verdict_logits(std::span<const TokenId> tokens) const = 0;

  VerdictLosses verdict_losses(std::span<const TokenId> tokens,
                               double cap = kCrossEntropyCap) const;

  Verdict classify(const std::string& text) const override;
  Verdict classify_tokens(std::span<const TokenId> tokens) const;

  virtual bool differentiable() const { return false; }

  // d logits / d onehot for the given positions. Throws AccessError when the
  // guard is not differentiable; callers fall back to gradient-free search.
  virtual LogitGradients logit_gradients(std::span<const TokenId> tokens,
                                         std::span<const size_t> positions) const;

 private:
  std::shared_ptr<const Tokenizer> tokenizer_;
};

// verdict_losses over any white-box guard, per the module contract.
VerdictLosses verdict_losses(const WhiteBoxGuard& guard, std::span<const TokenId> tokens,
                             double cap = kCrossEntropyCap);

// ---------------------------------------------------------------------------
// Mock guard families. All three are pure functions of the token sequence and
// are constructed with explicit trigger behavior so identification fixtures
// have a known ground truth.
// ---------------------------------------------------------------------------

// UNSAFE iff at least one trigger token is present. Soft logits scale with the
// trigger count so white-box losses carry a usable signal, but the guard is
// deliberately non-differentiable to exercise the gradient-free path.
class KeywordGuard : public WhiteBoxGuard {
 public:
  KeywordGuard(GuardrailSpec spec, std::shared_ptr<const Tokenizer> tokenizer,
               const std::vector<std::string>& trigger_words, double trigger_weight = 4.0);

  LogitPair verdict_logits(std::span<const TokenId> tokens) const override;

  const std::unordered_set<TokenId>& trigger_ids() const { return triggers_; }

 private:
  std::unordered_set<TokenId> triggers_;
  double weight_ = 4.0;
};

// Linear bag-of-tokens classifier: unsafe_logit = bias + sum of per-token
// weights, safe_logit = threshold. Differentiable with exact gradients.
class LinearGuard : public WhiteBoxGuard {
 public:
  LinearGuard(GuardrailSpec spec, std::shared_ptr<const Tokenizer> tokenizer,
              std::unordered_map<TokenId, double> weights, double bias, double threshold);

  // Keyword-equivalent construction: weight w on each trigger word, bias 0,
  // threshold w/2, so UNSAFE iff a trigger token is present.
  static std::unique_ptr<LinearGuard> keyword_equivalent(
      GuardrailSpec spec, std::shared_ptr<const Tokenizer> tokenizer,
      const std::vector<std::string>& trigger_words, double weight = 4.0);

  LogitPair verdict_logits(std::span<const TokenId> tokens) const override;
  bool differentiable() const override { return true; }
  LogitGradients logit_gradients(std::span<const TokenId> tokens,
                                 std::span<const size_t> positions) const override;

  double token_weight(TokenId id) const;

 private:
  std::unordered_map<TokenId, double> weights_;
  double bias_ = 0.0;
  double threshold_ = 0.0;
};

// Mean-embedding logistic classifier trained at construction to flag
// sequences containing any of the pattern tokens. Embeddings are seeded and
// fixed; only the readout is trained, so training is convex and
// deterministic.
class TinyClassifierGuard : public WhiteBoxGuard {
 public:
  struct TrainConfig {
    size_t embedding_dim = 256;
    size_t examples = 768;  // mixed sequences, on top of the homogeneous set
    size_t sequence_length = 8;
    size_t steps = 3000;
    double learning_rate = 2.0;
    double weight_decay = 1e-5;
    std::uint64_t seed = 1;
  };

  TinyClassifierGuard(GuardrailSpec spec, std::shared_ptr<const Tokenizer> tokenizer,
                      const std::vector<std::string>& pattern_words, const TrainConfig& train);

  TinyClassifierGuard(GuardrailSpec spec, std::shared_ptr<const Tokenizer> tokenizer,
                      const std::vector<std::string>& pattern_words)
      : TinyClassifierGuard(std::move(spec), std::move(tokenizer), pattern_words,
                            TrainConfig{}) {}

  LogitPair verdict_logits(std::span<const TokenId> tokens) const override;
  bool differentiable() const override { return true; }
  LogitGradients logit_gradients(std::span<const TokenId> tokens,
                                 std::span<const size_t> positions) const override;

  // Fraction of held-out training-style sequences classified correctly;
  // fixtures assert this is high before relying on the guard.
  double training_accuracy() const { return training_accuracy_; }

  // unsafe_logit contribution of a single token at one position of an
  // n-token sequence is token_score(id) / n. A text whose tokens all score
  // below -bias() can never flag, whatever its composition.
  double token_score(TokenId id) const;
  double bias() const { return bias_; }

 private:
  std::vector<double> embeddings_;   // vocab x dim, row-major
  std::vector<double> readout_;      // dim
  std::vector<double> score_table_;  // readout . embedding, per token
  double bias_ = 0.0;
  size_t dim_ = 0;
  double training_accuracy_ = 0.0;
  std::unordered_set<TokenId> pattern_;
};

// ---------------------------------------------------------------------------
// Safety scorers
// ---------------------------------------------------------------------------

class SafetyScorer {
 public:
  explicit SafetyScorer(std::string id) : id_(std::move(id)) {}
  virtual ~SafetyScorer() = default;

  const std::string& id() const { return id_; }

  virtual double score_tokens(std::span<const TokenId> tokens) const = 0;
  virtual double score(const std::string& text) const = 0;

  virtual bool differentiable() const { return false; }
  // d score / d onehot(position, token).
  virtual GradMatrix score_gradients(std::span<const TokenId> tokens,
                                     std::span<const size_t> positions) const;

 private:
  std::string id_;
};

SafetyScore safety_score(const SafetyScorer& scorer, const std::string& text);

// score = fraction of tokens that carry a risk flag. Linear, so gradients are
// exact. An empty flag set yields 0 for every input.
class TokenFlagScorer : public SafetyScorer {
 public:
  TokenFlagScorer(std::string id, std::shared_ptr<const Tokenizer> tokenizer,
                  const std::vector<std::string>& flagged_words);

  double score_tokens(std::span<const TokenId> tokens) const override;
  double score(const std::string& text) const override;
  bool differentiable() const override { return true; }
  GradMatrix score_gradients(std::span<const TokenId> tokens,
                             std::span<const size_t> positions) const override;

  const std::unordered_set<TokenId>& flagged_ids() const { return flags_; }

 private:
  std::shared_ptr<const Tokenizer> tokenizer_;
  std::unordered_set<TokenId> flags_;
};

}  // namespace guardprobe
