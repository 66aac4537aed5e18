#include "guardprobe/optimizer.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <numeric>
#include <thread>

#include "guardprobe/util.hpp"

namespace guardprobe {

namespace {

double sigmoid(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

struct Proposal {
  size_t position = 0;
  TokenId token = 0;
};

}  // namespace

void OptimizerConfig::validate() const {
  if (prefix_length < 1) throw ParameterError("optimizer: prefix_length must be >= 1");
  if (epochs < 1) throw ParameterError("optimizer: epochs must be >= 1");
  if (batch_size < 1) throw ParameterError("optimizer: batch_size must be >= 1");
  if (top_k < 1) throw ParameterError("optimizer: top_k must be >= 1");
  if (patience < 1) throw ParameterError("optimizer: patience must be >= 1");
  if (!(cross_entropy_cap > 0.0)) throw ParameterError("optimizer: cross_entropy_cap must be > 0");
}

LossObjective::LossObjective(const WhiteBoxGuard& guard, const SafetyScorer* scorer, double alpha,
                             double beta, double cap)
    : guard_(&guard), scorer_(scorer), alpha_(alpha), beta_(beta), cap_(cap) {
  if (guard.spec().access != Access::kWhiteBox) {
    throw AccessError("candidate guard '" + guard.id() + "' is not registered white-box");
  }
}

LossBreakdown LossObjective::evaluate(std::span<const TokenId> tokens) const {
  const VerdictLosses v = guard_->verdict_losses(tokens, cap_);
  LossBreakdown lb;
  lb.l1 = v.loss_unsafe;
  lb.l2 = -v.loss_safe;
  if (scorer_ != nullptr) {
    const double s = scorer_->score_tokens(tokens);
    lb.l3 = s >= 1.0 ? cap_ : std::min(-std::log1p(-s), cap_);
  }
  lb.total = lb.l1 + alpha_ * lb.l2 + beta_ * lb.l3;
  return lb;
}

bool LossObjective::differentiable() const {
  if (!guard_->differentiable()) return false;
  if (beta_ != 0.0 && scorer_ != nullptr && !scorer_->differentiable()) return false;
  return true;
}

GradMatrix LossObjective::replacement_gradients(std::span<const TokenId> tokens,
                                                std::span<const size_t> positions) const {
  if (beta_ != 0.0 && scorer_ != nullptr && !scorer_->differentiable()) {
    throw AccessError("safety scorer '" + scorer_->id() +
                      "' is not differentiable; use gradient-free search");
  }
  const LogitGradients g = guard_->logit_gradients(tokens, positions);  // throws AccessError

  const LogitPair z = guard_->verdict_logits(tokens);
  const double p_unsafe = sigmoid(z.unsafe_logit - z.safe_logit);
  const double p_safe = 1.0 - p_unsafe;
  // d(l1 + alpha*l2)/dz, from l1 = softplus(zs - zu) and l2 = -softplus(zu - zs).
  const double coeff_unsafe = -p_safe - alpha_ * p_unsafe;
  const double coeff_safe = -coeff_unsafe;

  const size_t vocab = guard_->tokenizer().size();
  GradMatrix out(positions.size(), vocab);
  for (size_t row = 0; row < positions.size(); ++row) {
    for (size_t v = 0; v < vocab; ++v) {
      out.at(row, v) = coeff_unsafe * g.d_unsafe.at(row, v) + coeff_safe * g.d_safe.at(row, v);
    }
  }

  if (beta_ != 0.0 && scorer_ != nullptr) {
    const double s = scorer_->score_tokens(tokens);
    const double dl3_ds = 1.0 / std::max(1.0 - s, 1e-12);
    const GradMatrix sg = scorer_->score_gradients(tokens, positions);
    for (size_t row = 0; row < positions.size(); ++row) {
      for (size_t v = 0; v < vocab; ++v) {
        out.at(row, v) += beta_ * dl3_ds * sg.at(row, v);
      }
    }
  }

  // Shift each row so the entry for the incumbent token is zero; entries then
  // read as first-order replacement deltas.
  for (size_t row = 0; row < positions.size(); ++row) {
    const double base = out.at(row, tokens[positions[row]]);
    for (size_t v = 0; v < vocab; ++v) {
      out.at(row, v) -= base;
    }
  }
  return out;
}

LossBreakdown compute_loss(const WhiteBoxGuard& candidate, const SafetyScorer* scorer,
                           std::span<const TokenId> prompt_tokens,
                           const OptimizerConfig& config) {
  const LossObjective objective(candidate, scorer, config.alpha, config.beta,
                                config.cross_entropy_cap);
  return objective.evaluate(prompt_tokens);
}

GradMatrix token_gradients(const LossObjective& objective, std::span<const TokenId> tokens,
                           std::span<const size_t> mutable_positions) {
  return objective.replacement_gradients(tokens, mutable_positions);
}

namespace {

OptimizeResult run_search(const WhiteBoxGuard& candidate, const SafetyScorer* scorer,
                          std::optional<Query> query, std::uint64_t seed,
                          const OptimizerConfig& cfg) {
  cfg.validate();
  const Tokenizer& tok = candidate.tokenizer();
  const size_t vocab = tok.size();
  const size_t prefix_len = cfg.prefix_length;

  const LossObjective objective(candidate, scorer, cfg.alpha, cfg.beta, cfg.cross_entropy_cap);
  if (cfg.search_mode == SearchMode::kGradientGuided && !objective.differentiable()) {
    throw AccessError("gradient-guided search requires differentiable guard and scorer; "
                      "switch to coordinate-free mode for guard '" + candidate.id() + "'");
  }

  std::vector<TokenId> query_tokens;
  if (query) {
    if (query->text.empty()) throw ParameterError("optimize_prefix: query text is empty");
    query_tokens = tok.encode(query->text);
  }

  Rng rng(seed);
  std::vector<TokenId> tokens(prefix_len, tok.filler_id());
  if (cfg.init == PrefixInit::kRandom) {
    for (TokenId& t : tokens) {
      t = static_cast<TokenId>(rng.uniform(vocab));
    }
  }
  tokens.insert(tokens.end(), query_tokens.begin(), query_tokens.end());

  std::vector<size_t> positions(prefix_len);
  std::iota(positions.begin(), positions.end(), size_t{0});

  LossBreakdown incumbent = objective.evaluate(tokens);

  OptimizeResult result;
  result.epoch_log.reserve(cfg.epochs);

  const size_t top_k = std::min(cfg.top_k, vocab);
  std::vector<std::vector<TokenId>> candidates_per_position;
  std::vector<TokenId> order(vocab);

  size_t last_improvement = 0;
  size_t epochs_run = 0;
  for (size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    epochs_run = epoch;

    if (cfg.search_mode == SearchMode::kGradientGuided) {
      const GradMatrix deltas = objective.replacement_gradients(tokens, positions);
      candidates_per_position.assign(prefix_len, {});
      for (size_t p = 0; p < prefix_len; ++p) {
        std::iota(order.begin(), order.end(), TokenId{0});
        std::partial_sort(order.begin(), order.begin() + static_cast<long>(top_k), order.end(),
                          [&](TokenId a, TokenId b) {
                            const double da = deltas.at(p, a);
                            const double db = deltas.at(p, b);
                            return da < db || (da == db && a < b);
                          });
        candidates_per_position[p].assign(order.begin(), order.begin() + static_cast<long>(top_k));
      }
    }

    bool have_best = false;
    Proposal best;
    LossBreakdown best_loss;
    for (size_t i = 0; i < cfg.batch_size; ++i) {
      Proposal prop;
      prop.position = static_cast<size_t>(rng.uniform(prefix_len));
      if (cfg.search_mode == SearchMode::kGradientGuided) {
        prop.token = candidates_per_position[prop.position][rng.uniform(top_k)];
      } else {
        prop.token = static_cast<TokenId>(rng.uniform(vocab));
      }

      const TokenId previous = tokens[prop.position];
      tokens[prop.position] = prop.token;
      const LossBreakdown lb = objective.evaluate(tokens);
      tokens[prop.position] = previous;

      // Ties resolve to the lowest (position, token) pair.
      const bool better =
          !have_best || lb.total < best_loss.total ||
          (lb.total == best_loss.total &&
           std::make_pair(prop.position, prop.token) < std::make_pair(best.position, best.token));
      if (better) {
        have_best = true;
        best = prop;
        best_loss = lb;
      }
    }

    if (have_best && best_loss.total < incumbent.total) {
      tokens[best.position] = best.token;
      incumbent = best_loss;
      last_improvement = epoch;
    }

    result.epoch_log.push_back(EpochLogEntry{epoch, incumbent});

    if (epoch - last_improvement >= cfg.patience) {
      result.converged_early = true;
      break;
    }
  }

  AdversarialPrompt& prompt = result.prompt;
  prompt.prefix_tokens.assign(tokens.begin(), tokens.begin() + static_cast<long>(prefix_len));
  prompt.prefix_text = tok.decode(prompt.prefix_tokens);
  prompt.query = std::move(query);
  prompt.full_text =
      prompt.query ? prompt.prefix_text + " " + prompt.query->text : prompt.prefix_text;
  prompt.candidate_guard_id = candidate.id();
  prompt.final_loss = incumbent.total;
  prompt.epochs_run = static_cast<int>(epochs_run);
  return result;
}

}  // namespace

OptimizeResult optimize_prefix(const WhiteBoxGuard& candidate, const SafetyScorer* scorer,
                               const Query& query, const OptimizerConfig& config) {
  // Seeding from the query text keeps identical queries bit-identical.
  const std::uint64_t seed = mix_seed(config.seed, fnv1a64(query.text));
  return run_search(candidate, scorer, query, seed, config);
}

OptimizeResult optimize_prefix_alone(const WhiteBoxGuard& candidate, const SafetyScorer* scorer,
                                     size_t slot, const OptimizerConfig& config) {
  const std::uint64_t seed =
      mix_seed(config.seed, fnv1a64("prefix-alone/" + std::to_string(slot)));
  return run_search(candidate, scorer, std::nullopt, seed, config);
}

std::vector<AdversarialPrompt> OptimizeSetResult::prompts() const {
  std::vector<AdversarialPrompt> out;
  out.reserve(results.size());
  for (const OptimizeResult& r : results) {
    out.push_back(r.prompt);
  }
  return out;
}

OptimizeSetResult optimize_set(const WhiteBoxGuard& candidate, const SafetyScorer* scorer,
                               const QuerySet& query_set, const OptimizerConfig& config,
                               size_t workers) {
  if (query_set.empty()) {
    throw EmptyInputError("optimize_set: query set is empty");
  }
  query_set.validate();

  const size_t n = query_set.size();
  std::vector<std::optional<OptimizeResult>> slots(n);
  std::vector<std::optional<OptimizeFailure>> failures(n);

  auto run_one = [&](size_t i) {
    try {
      slots[i] = optimize_prefix(candidate, scorer, query_set.queries[i], config);
    } catch (const AccessError&) {
      throw;  // misconfiguration, not a per-query failure
    } catch (const std::exception& e) {
      failures[i] = OptimizeFailure{query_set.queries[i].id, e.what()};
    }
  };

  if (workers <= 1 || n <= 1) {
    for (size_t i = 0; i < n; ++i) run_one(i);
  } else {
    std::atomic<size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    auto worker = [&] {
      for (;;) {
        const size_t i = next.fetch_add(1);
        if (i >= n) return;
        try {
          run_one(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
          return;
        }
      }
    };
    std::vector<std::thread> pool;
    const size_t count = std::min(workers, n);
    pool.reserve(count);
    for (size_t i = 0; i < count; ++i) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
  }

  OptimizeSetResult out;
  for (size_t i = 0; i < n; ++i) {
    if (slots[i]) {
      out.results.push_back(std::move(*slots[i]));
    } else if (failures[i]) {
      out.failures.push_back(std::move(*failures[i]));
    }
  }

  if (out.failures.size() * 10 >= n) {
    throw SetOptimizationError("optimize_set: " + std::to_string(out.failures.size()) + " of " +
                               std::to_string(n) + " query optimizations failed");
  }
  return out;
}

}  // namespace guardprobe
