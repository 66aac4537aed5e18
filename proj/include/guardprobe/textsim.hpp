#pragma once

#include <string>
#include <vector>

namespace guardprobe {

struct SimilarityScores {
  double cosine = 0.0;
  double bleu = 0.0;
  double rouge1 = 0.0;
  double rouge2 = 0.0;
  double rouge_l = 0.0;
  double rouge_lsum = 0.0;
};

// Lowercased alphanumeric runs, the shared tokenization for all metrics here.
std::vector<std::string> similarity_tokens(const std::string& text);

// Deterministic hashed bag-of-tokens embedding (signed buckets, L2 normed).
std::vector<double> hashed_embedding(const std::string& text, size_t dim = 256);

double cosine_similarity(const std::string& a, const std::string& b);

// Sentence BLEU with uniform weights over n-grams up to min(4, len) and the
// standard brevity penalty. Identical non-empty strings score exactly 1.
double bleu_score(const std::string& reference, const std::string& candidate);

// F1-flavored ROUGE variants. Either side empty scores 0.
double rouge_n(const std::string& reference, const std::string& candidate, size_t n);
double rouge_l(const std::string& reference, const std::string& candidate);
// Newline-split union-LCS variant; equals rouge_l for single-line texts.
double rouge_lsum(const std::string& reference, const std::string& candidate);

SimilarityScores similarity(const std::string& reference, const std::string& candidate);

}  // namespace guardprobe
