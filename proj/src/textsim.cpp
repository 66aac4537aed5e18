#include "guardprobe/textsim.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <string_view>

#include "guardprobe/util.hpp"

namespace guardprobe {

namespace {

using Tokens = std::vector<std::string>;

std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::string current;
  for (char c : text) {
    if (c == '\n') {
      if (!current.empty()) lines.push_back(std::move(current));
      current.clear();
    } else {
      current.push_back(c);
    }
  }
  if (!current.empty()) lines.push_back(std::move(current));
  return lines;
}

std::map<Tokens, size_t> ngram_counts(const Tokens& tokens, size_t n) {
  std::map<Tokens, size_t> counts;
  if (tokens.size() < n) return counts;
  for (size_t i = 0; i + n <= tokens.size(); ++i) {
    counts[Tokens(tokens.begin() + static_cast<long>(i),
                  tokens.begin() + static_cast<long>(i + n))]++;
  }
  return counts;
}

size_t lcs_length(const Tokens& a, const Tokens& b) {
  if (a.empty() || b.empty()) return 0;
  std::vector<size_t> prev(b.size() + 1, 0);
  std::vector<size_t> cur(b.size() + 1, 0);
  for (size_t i = 1; i <= a.size(); ++i) {
    for (size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

double f1(double matches, double ref_len, double cand_len) {
  if (matches <= 0.0 || ref_len <= 0.0 || cand_len <= 0.0) return 0.0;
  const double precision = matches / cand_len;
  const double recall = matches / ref_len;
  return 2.0 * precision * recall / (precision + recall);
}

}  // namespace

std::vector<std::string> similarity_tokens(const std::string& text) {
  std::vector<std::string> tokens;
  std::string current;
  for (char raw : text) {
    const auto c = static_cast<unsigned char>(raw);
    if (std::isalnum(c)) {
      current.push_back(static_cast<char>(std::tolower(c)));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

std::vector<double> hashed_embedding(const std::string& text, size_t dim) {
  std::vector<double> vec(dim, 0.0);
  for (const std::string& tok : similarity_tokens(text)) {
    const std::uint64_t h = fnv1a64(tok);
    const size_t bucket = h % dim;
    const double sign = (h >> 63) ? -1.0 : 1.0;
    vec[bucket] += sign;
  }
  double norm = 0.0;
  for (double v : vec) norm += v * v;
  if (norm > 0.0) {
    norm = std::sqrt(norm);
    for (double& v : vec) v /= norm;
  }
  return vec;
}

double cosine_similarity(const std::string& a, const std::string& b) {
  const std::vector<double> va = hashed_embedding(a);
  const std::vector<double> vb = hashed_embedding(b);
  double dot = 0.0;
  for (size_t i = 0; i < va.size(); ++i) dot += va[i] * vb[i];
  return dot;
}

double bleu_score(const std::string& reference, const std::string& candidate) {
  const Tokens ref = similarity_tokens(reference);
  const Tokens cand = similarity_tokens(candidate);
  if (ref.empty() || cand.empty()) return 0.0;

  const size_t max_n = std::min<size_t>(4, std::min(ref.size(), cand.size()));
  double log_precision_sum = 0.0;
  for (size_t n = 1; n <= max_n; ++n) {
    const auto ref_counts = ngram_counts(ref, n);
    const auto cand_counts = ngram_counts(cand, n);
    size_t clipped = 0;
    size_t total = 0;
    for (const auto& [gram, count] : cand_counts) {
      total += count;
      auto it = ref_counts.find(gram);
      if (it != ref_counts.end()) clipped += std::min(count, it->second);
    }
    if (clipped == 0) return 0.0;
    log_precision_sum += std::log(static_cast<double>(clipped) / static_cast<double>(total));
  }
  const double geo_mean = std::exp(log_precision_sum / static_cast<double>(max_n));

  double brevity = 1.0;
  if (cand.size() < ref.size()) {
    brevity = std::exp(1.0 - static_cast<double>(ref.size()) / static_cast<double>(cand.size()));
  }
  return brevity * geo_mean;
}

double rouge_n(const std::string& reference, const std::string& candidate, size_t n) {
  const Tokens ref = similarity_tokens(reference);
  const Tokens cand = similarity_tokens(candidate);
  const auto ref_counts = ngram_counts(ref, n);
  const auto cand_counts = ngram_counts(cand, n);
  size_t matches = 0;
  size_t ref_total = 0;
  size_t cand_total = 0;
  for (const auto& [gram, count] : ref_counts) ref_total += count;
  for (const auto& [gram, count] : cand_counts) {
    cand_total += count;
    auto it = ref_counts.find(gram);
    if (it != ref_counts.end()) matches += std::min(count, it->second);
  }
  return f1(static_cast<double>(matches), static_cast<double>(ref_total),
            static_cast<double>(cand_total));
}

double rouge_l(const std::string& reference, const std::string& candidate) {
  const Tokens ref = similarity_tokens(reference);
  const Tokens cand = similarity_tokens(candidate);
  const size_t lcs = lcs_length(ref, cand);
  return f1(static_cast<double>(lcs), static_cast<double>(ref.size()),
            static_cast<double>(cand.size()));
}

double rouge_lsum(const std::string& reference, const std::string& candidate) {
  const std::vector<std::string> ref_lines = split_lines(reference);
  const std::vector<std::string> cand_lines = split_lines(candidate);
  if (ref_lines.size() <= 1 && cand_lines.size() <= 1) {
    return rouge_l(reference, candidate);
  }

  std::vector<Tokens> cand_tokens;
  cand_tokens.reserve(cand_lines.size());
  size_t cand_total = 0;
  for (const std::string& line : cand_lines) {
    cand_tokens.push_back(similarity_tokens(line));
    cand_total += cand_tokens.back().size();
  }

  // Union LCS per reference line: each candidate token may be credited once.
  size_t ref_total = 0;
  double matches = 0.0;
  for (const std::string& line : ref_lines) {
    const Tokens ref_toks = similarity_tokens(line);
    ref_total += ref_toks.size();
    size_t best = 0;
    for (const Tokens& cand_toks : cand_tokens) {
      best = std::max(best, lcs_length(ref_toks, cand_toks));
    }
    matches += static_cast<double>(best);
  }
  return f1(matches, static_cast<double>(ref_total), static_cast<double>(cand_total));
}

SimilarityScores similarity(const std::string& reference, const std::string& candidate) {
  SimilarityScores s;
  s.cosine = cosine_similarity(reference, candidate);
  s.bleu = bleu_score(reference, candidate);
  s.rouge1 = rouge_n(reference, candidate, 1);
  s.rouge2 = rouge_n(reference, candidate, 2);
  s.rouge_l = rouge_l(reference, candidate);
  s.rouge_lsum = rouge_lsum(reference, candidate);
  return s;
}

}  // namespace guardprobe
