#include "guardprobe/guards.hpp"

#include <algorithm>
#include <cmath>

#include "guardprobe/util.hpp"

namespace guardprobe {

namespace {

// log(1 + e^x) without overflow.
double softplus(double x) {
  const double rectified = std::max(x, 0.0);
  return rectified + std::log1p(std::exp(-std::abs(x)));
}

double sigmoid(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

void require_text(const std::string& text, const std::string& who) {
  if (text.empty()) {
    throw EmptyInputError(who + ": empty input text");
  }
}

std::unordered_set<TokenId> resolve_word_set(const Tokenizer& tok,
                                             const std::vector<std::string>& words,
                                             const std::string& owner) {
  std::unordered_set<TokenId> ids;
  for (const std::string& w : words) {
    if (w == Tokenizer::kFillerWord) {
      throw ConfigError(owner + ": the filler word '" + w + "' may not be a trigger/flag");
    }
    if (!tok.contains(w)) {
      throw ConfigError(owner + ": word '" + w + "' is not in tokenizer '" + tok.id() +
                        "'; add it to the vocabulary");
    }
    ids.insert(tok.id_of(w));
  }
  return ids;
}

}  // namespace

// ---------------------------------------------------------------------------
// WhiteBoxGuard
// ---------------------------------------------------------------------------

WhiteBoxGuard::WhiteBoxGuard(GuardrailSpec spec, std::shared_ptr<const Tokenizer> tokenizer)
    : Guardrail(std::move(spec)), tokenizer_(std::move(tokenizer)) {
  if (!tokenizer_) {
    throw ConfigError("white-box guard '" + id() + "' requires a tokenizer");
  }
}

VerdictLosses WhiteBoxGuard::verdict_losses(std::span<const TokenId> tokens, double cap) const {
  const LogitPair z = verdict_logits(tokens);
  // -ln P(unsafe) = softplus(zs - zu), -ln P(safe) = softplus(zu - zs).
  return VerdictLosses{
      std::min(softplus(z.safe_logit - z.unsafe_logit), cap),
      std::min(softplus(z.unsafe_logit - z.safe_logit), cap),
  };
}

Verdict WhiteBoxGuard::classify(const std::string& text) const {
  require_text(text, "classify(" + id() + ")");
  return classify_tokens(tokenizer_->encode(text));
}

Verdict WhiteBoxGuard::classify_tokens(std::span<const TokenId> tokens) const {
  const LogitPair z = verdict_logits(tokens);
  Verdict v;
  v.label = z.unsafe_logit > z.safe_logit ? Label::kUnsafe : Label::kSafe;
  const double p_unsafe = sigmoid(z.unsafe_logit - z.safe_logit);
  v.scores = LabelScores{1.0 - p_unsafe, p_unsafe};
  return v;
}

LogitGradients WhiteBoxGuard::logit_gradients(std::span<const TokenId>,
                                              std::span<const size_t>) const {
  throw AccessError("guard '" + id() + "' is not differentiable; use gradient-free search");
}

VerdictLosses verdict_losses(const WhiteBoxGuard& guard, std::span<const TokenId> tokens,
                             double cap) {
  return guard.verdict_losses(tokens, cap);
}

// ---------------------------------------------------------------------------
// KeywordGuard
// ---------------------------------------------------------------------------

KeywordGuard::KeywordGuard(GuardrailSpec spec, std::shared_ptr<const Tokenizer> tokenizer,
                           const std::vector<std::string>& trigger_words, double trigger_weight)
    : WhiteBoxGuard(std::move(spec), std::move(tokenizer)), weight_(trigger_weight) {
  if (trigger_words.empty()) {
    throw ConfigError("keyword guard '" + id() + "': trigger list is empty");
  }
  if (!(trigger_weight > 0.0)) {
    throw ConfigError("keyword guard '" + id() + "': trigger weight must be positive");
  }
  triggers_ = resolve_word_set(this->tokenizer(), trigger_words, "keyword guard '" + id() + "'");
}

LogitPair KeywordGuard::verdict_logits(std::span<const TokenId> tokens) const {
  size_t count = 0;
  for (TokenId t : tokens) {
    count += triggers_.count(t);
  }
  // unsafe wins exactly when count >= 1; extra triggers keep sharpening the
  // verdict, which gives the optimizer a usable improvement signal.
  return LogitPair{weight_ * static_cast<double>(count), weight_ / 2.0};
}

// ---------------------------------------------------------------------------
// LinearGuard
// ---------------------------------------------------------------------------

LinearGuard::LinearGuard(GuardrailSpec spec, std::shared_ptr<const Tokenizer> tokenizer,
                         std::unordered_map<TokenId, double> weights, double bias,
                         double threshold)
    : WhiteBoxGuard(std::move(spec), std::move(tokenizer)),
      weights_(std::move(weights)),
      bias_(bias),
      threshold_(threshold) {}

std::unique_ptr<LinearGuard> LinearGuard::keyword_equivalent(
    GuardrailSpec spec, std::shared_ptr<const Tokenizer> tokenizer,
    const std::vector<std::string>& trigger_words, double weight) {
  const auto ids =
      resolve_word_set(*tokenizer, trigger_words, "linear guard '" + spec.id + "'");
  std::unordered_map<TokenId, double> weights;
  for (TokenId t : ids) {
    weights.emplace(t, weight);
  }
  return std::make_unique<LinearGuard>(std::move(spec), std::move(tokenizer),
                                       std::move(weights), 0.0, weight / 2.0);
}

double LinearGuard::token_weight(TokenId id) const {
  auto it = weights_.find(id);
  return it == weights_.end() ? 0.0 : it->second;
}

LogitPair LinearGuard::verdict_logits(std::span<const TokenId> tokens) const {
  double z = bias_;
  for (TokenId t : tokens) {
    z += token_weight(t);
  }
  return LogitPair{z, threshold_};
}

LogitGradients LinearGuard::logit_gradients(std::span<const TokenId>,
                                            std::span<const size_t> positions) const {
  const size_t vocab = tokenizer().size();
  LogitGradients g;
  g.d_unsafe = GradMatrix(positions.size(), vocab);
  g.d_safe = GradMatrix(positions.size(), vocab);
  for (size_t row = 0; row < positions.size(); ++row) {
    for (size_t v = 0; v < vocab; ++v) {
      g.d_unsafe.at(row, v) = token_weight(static_cast<TokenId>(v));
    }
  }
  return g;
}

// ---------------------------------------------------------------------------
// TinyClassifierGuard
// ---------------------------------------------------------------------------

TinyClassifierGuard::TinyClassifierGuard(GuardrailSpec spec,
                                         std::shared_ptr<const Tokenizer> tokenizer,
                                         const std::vector<std::string>& pattern_words,
                                         const TrainConfig& train)
    : WhiteBoxGuard(std::move(spec), std::move(tokenizer)), dim_(train.embedding_dim) {
  const Tokenizer& tok = this->tokenizer();
  pattern_ = resolve_word_set(tok, pattern_words, "tiny classifier '" + id() + "'");
  if (pattern_.empty()) {
    throw ConfigError("tiny classifier '" + id() + "': pattern list is empty");
  }

  const size_t vocab = tok.size();
  std::vector<TokenId> benign;
  benign.reserve(vocab);
  for (TokenId v = 0; v < vocab; ++v) {
    if (!pattern_.count(v)) benign.push_back(v);
  }
  if (benign.empty()) {
    throw ConfigError("tiny classifier '" + id() + "': vocabulary is all pattern tokens");
  }

  Rng rng(train.seed);
  embeddings_.resize(vocab * dim_);
  for (double& e : embeddings_) {
    e = 0.5 * rng.normal();
  }

  // Synthetic corpus. Homogeneous single-token sequences cover every
  // vocabulary word, which pins each individual token score to the right
  // side of the boundary; mixed sequences teach the sparse-pattern case
  // (exactly one pattern token per positive).
  std::vector<std::vector<TokenId>> seqs;
  std::vector<double> labels;
  std::vector<TokenId> pattern_list(pattern_.begin(), pattern_.end());
  std::sort(pattern_list.begin(), pattern_list.end());

  for (TokenId v : benign) {
    seqs.push_back(std::vector<TokenId>(train.sequence_length, v));
    labels.push_back(0.0);
  }
  for (TokenId p : pattern_list) {
    seqs.push_back(std::vector<TokenId>(train.sequence_length, p));
    labels.push_back(1.0);
  }
  for (size_t i = 0; i < train.examples; ++i) {
    std::vector<TokenId> s(train.sequence_length);
    for (TokenId& t : s) {
      t = benign[rng.uniform(benign.size())];
    }
    const bool positive = (i % 2 == 0);
    if (positive) {
      s[rng.uniform(s.size())] = pattern_list[rng.uniform(pattern_list.size())];
    }
    seqs.push_back(std::move(s));
    labels.push_back(positive ? 1.0 : 0.0);
  }

  const size_t corpus = seqs.size();
  std::vector<std::vector<double>> features(corpus, std::vector<double>(dim_, 0.0));
  for (size_t i = 0; i < corpus; ++i) {
    for (TokenId t : seqs[i]) {
      for (size_t k = 0; k < dim_; ++k) {
        features[i][k] += embeddings_[t * dim_ + k];
      }
    }
    for (double& f : features[i]) {
      f /= static_cast<double>(train.sequence_length);
    }
  }

  // Positives are rarer than negatives once the homogeneous set is added;
  // weight them so the classes balance.
  double positive_count = 0.0;
  for (double l : labels) positive_count += l;
  const double positive_weight = (static_cast<double>(corpus) - positive_count) /
                                 std::max(positive_count, 1.0);

  // Full-batch logistic regression on the frozen embeddings.
  readout_.assign(dim_, 0.0);
  bias_ = 0.0;
  for (size_t step = 0; step < train.steps; ++step) {
    std::vector<double> grad_u(dim_, 0.0);
    double grad_b = 0.0;
    for (size_t i = 0; i < corpus; ++i) {
      double z = bias_;
      for (size_t k = 0; k < dim_; ++k) {
        z += readout_[k] * features[i][k];
      }
      const double weight = labels[i] > 0.5 ? positive_weight : 1.0;
      const double err = weight * (sigmoid(z) - labels[i]);
      for (size_t k = 0; k < dim_; ++k) {
        grad_u[k] += err * features[i][k];
      }
      grad_b += err;
    }
    const double scale = train.learning_rate / static_cast<double>(corpus);
    for (size_t k = 0; k < dim_; ++k) {
      readout_[k] -= scale * grad_u[k] + train.learning_rate * train.weight_decay * readout_[k];
    }
    bias_ -= scale * grad_b;
  }

  size_t correct = 0;
  for (size_t i = 0; i < corpus; ++i) {
    double z = bias_;
    for (size_t k = 0; k < dim_; ++k) {
      z += readout_[k] * features[i][k];
    }
    correct += ((z > 0.0) == (labels[i] > 0.5)) ? 1 : 0;
  }
  training_accuracy_ = static_cast<double>(correct) / static_cast<double>(corpus);

  // The model is linear in per-token scores; cache them once.
  score_table_.resize(vocab);
  for (TokenId v = 0; v < vocab; ++v) {
    double s = 0.0;
    for (size_t k = 0; k < dim_; ++k) {
      s += readout_[k] * embeddings_[v * dim_ + k];
    }
    score_table_[v] = s;
  }
}

double TinyClassifierGuard::token_score(TokenId id) const {
  return score_table_[id];
}

LogitPair TinyClassifierGuard::verdict_logits(std::span<const TokenId> tokens) const {
  double z = bias_;
  if (!tokens.empty()) {
    double acc = 0.0;
    for (TokenId t : tokens) {
      acc += token_score(t);
    }
    z += acc / static_cast<double>(tokens.size());
  }
  return LogitPair{z, 0.0};
}

LogitGradients TinyClassifierGuard::logit_gradients(std::span<const TokenId> tokens,
                                                    std::span<const size_t> positions) const {
  const size_t vocab = tokenizer().size();
  const double n = tokens.empty() ? 1.0 : static_cast<double>(tokens.size());
  LogitGradients g;
  g.d_unsafe = GradMatrix(positions.size(), vocab);
  g.d_safe = GradMatrix(positions.size(), vocab);
  for (size_t row = 0; row < positions.size(); ++row) {
    for (size_t v = 0; v < vocab; ++v) {
      g.d_unsafe.at(row, v) = token_score(static_cast<TokenId>(v)) / n;
    }
  }
  return g;
}

// ---------------------------------------------------------------------------
// Safety scorers
// ---------------------------------------------------------------------------

GradMatrix SafetyScorer::score_gradients(std::span<const TokenId>,
                                         std::span<const size_t>) const {
  throw AccessError("safety scorer '" + id() + "' is not differentiable");
}

SafetyScore safety_score(const SafetyScorer& scorer, const std::string& text) {
  require_text(text, "safety_score(" + scorer.id() + ")");
  return SafetyScore{scorer.score(text)};
}

TokenFlagScorer::TokenFlagScorer(std::string id, std::shared_ptr<const Tokenizer> tokenizer,
                                 const std::vector<std::string>& flagged_words)
    : SafetyScorer(std::move(id)), tokenizer_(std::move(tokenizer)) {
  if (!tokenizer_) {
    throw ConfigError("token-flag scorer '" + this->id() + "' requires a tokenizer");
  }
  flags_ = resolve_word_set(*tokenizer_, flagged_words, "scorer '" + this->id() + "'");
}

double TokenFlagScorer::score_tokens(std::span<const TokenId> tokens) const {
  if (tokens.empty() || flags_.empty()) return 0.0;
  size_t flagged = 0;
  for (TokenId t : tokens) {
    flagged += flags_.count(t);
  }
  return static_cast<double>(flagged) / static_cast<double>(tokens.size());
}

double TokenFlagScorer::score(const std::string& text) const {
  require_text(text, "score(" + id() + ")");
  return score_tokens(tokenizer_->encode(text));
}

GradMatrix TokenFlagScorer::score_gradients(std::span<const TokenId> tokens,
                                            std::span<const size_t> positions) const {
  const size_t vocab = tokenizer_->size();
  GradMatrix g(positions.size(), vocab);
  if (tokens.empty() || flags_.empty()) return g;
  const double n = static_cast<double>(tokens.size());
  for (size_t row = 0; row < positions.size(); ++row) {
    for (TokenId f : flags_) {
      g.at(row, f) = 1.0 / n;
    }
  }
  return g;
}

}  // namespace guardprobe
