#include "guardprobe/tokenizer.hpp"

#include "guardprobe/util.hpp"

namespace guardprobe {

Tokenizer::Tokenizer(std::string id, std::vector<std::string> vocab) : id_(std::move(id)) {
  words_.reserve(vocab.size() + 1);
  for (std::string& w : vocab) {
    if (w.empty()) {
      throw ConfigError("tokenizer '" + id_ + "': empty vocabulary entry");
    }
    if (index_.count(w)) {
      throw ConfigError("tokenizer '" + id_ + "': duplicate vocabulary word '" + w + "'");
    }
    index_.emplace(w, static_cast<TokenId>(words_.size()));
    words_.push_back(std::move(w));
  }
  filler_id_ = intern(kFillerWord);
}

TokenId Tokenizer::intern(std::string_view word) {
  auto it = index_.find(std::string(word));
  if (it != index_.end()) return it->second;
  const auto id = static_cast<TokenId>(words_.size());
  words_.emplace_back(word);
  index_.emplace(words_.back(), id);
  return id;
}

bool Tokenizer::contains(std::string_view word) const {
  return index_.count(std::string(word)) > 0;
}

TokenId Tokenizer::id_of(std::string_view word) const {
  auto it = index_.find(std::string(word));
  if (it == index_.end()) {
    throw ParameterError("tokenizer '" + id_ + "': unknown word '" + std::string(word) + "'");
  }
  return it->second;
}

TokenId Tokenizer::encode_word(std::string_view word) const {
  auto it = index_.find(std::string(word));
  return it == index_.end() ? filler_id_ : it->second;
}

std::vector<TokenId> Tokenizer::encode(std::string_view text) const {
  std::vector<TokenId> ids;
  for (const std::string& w : split_words(text)) {
    ids.push_back(encode_word(w));
  }
  return ids;
}

const std::string& Tokenizer::word(TokenId id) const {
  if (id >= words_.size()) {
    throw ParameterError("tokenizer '" + id_ + "': token id out of range");
  }
  return words_[id];
}

std::string Tokenizer::decode(std::span<const TokenId> ids) const {
  std::string out;
  for (size_t i = 0; i < ids.size(); ++i) {
    if (i > 0) out.push_back(' ');
    out += word(ids[i]);
  }
  return out;
}

}  // namespace guardprobe
