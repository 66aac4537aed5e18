#pragma once

#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "guardprobe/core.hpp"

namespace guardprobe {

// Word-level tokenizer over a fixed vocabulary. The vocabulary doubles as the
// search space for prefix optimization, so its size is the knob for
// restricted-vocabulary runs. Words outside the vocabulary encode to the
// filler token, which is guaranteed benign (it may not be registered as a
// trigger or flag word by any mock guard or scorer).
class Tokenizer {
 public:
  static constexpr const char* kFillerWord = "!";

  Tokenizer(std::string id, std::vector<std::string> vocab);

  const std::string& id() const { return id_; }
  size_t size() const { return words_.size(); }
  TokenId filler_id() const { return filler_id_; }

  // Adds a word if absent; returns its id. Only valid while assembling the
  // run's fixtures (guards intern their trigger words at construction).
  TokenId intern(std::string_view word);

  bool contains(std::string_view word) const;

  // Lookup without fallback; throws ParameterError if the word is unknown.
  TokenId id_of(std::string_view word) const;

  TokenId encode_word(std::string_view word) const;
  std::vector<TokenId> encode(std::string_view text) const;

  const std::string& word(TokenId id) const;
  std::string decode(std::span<const TokenId> ids) const;

 private:
  std::string id_;
  std::vector<std::string> words_;
  std::unordered_map<std::string, TokenId> index_;
  TokenId filler_id_ = 0;
};

}  // namespace guardprobe
