#pragma once

#include <filesystem>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include "guardprobe/guards.hpp"
#include "guardprobe/tokenizer.hpp"

namespace guardprobe::testing {

inline std::filesystem::path fixtures_dir() {
  return std::filesystem::path(GUARDPROBE_FIXTURES_DIR);
}

inline std::filesystem::path cli_path() {
  return std::filesystem::path(GUARDPROBE_CLI_PATH);
}

inline std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line[0] != '#') lines.push_back(line);
  }
  return lines;
}

inline std::shared_ptr<Tokenizer> toy_tokenizer() {
  return std::make_shared<Tokenizer>("toy", read_lines(fixtures_dir() / "vocab_toy.txt"));
}

// Compact vocabulary for fast unit tests; includes the mock trigger families.
inline std::shared_ptr<Tokenizer> small_tokenizer() {
  return std::make_shared<Tokenizer>(
      "small", std::vector<std::string>{
                   "!",      "the",    "a",     "what",   "is",    "capital", "of",
                   "france", "tell",   "me",    "about",  "care",  "how",     "many",
                   "days",   "week",   "zebra", "okapi",  "lemur", "ibex",    "quasar",
                   "pulsar", "nebula", "comet", "glacier", "fjord", "tundra", "taiga",
                   "venom",  "toxin",  "water", "sky"});
}

// Guard with explicit verdict logits, for loss-formula checks.
class FixedLogitsGuard : public WhiteBoxGuard {
 public:
  FixedLogitsGuard(const std::shared_ptr<const Tokenizer>& tok, double unsafe_logit,
                   double safe_logit)
      : WhiteBoxGuard(GuardrailSpec{"fixed", Access::kWhiteBox, tok->id()}, tok),
        logits_{unsafe_logit, safe_logit} {}

  LogitPair verdict_logits(std::span<const TokenId>) const override { return logits_; }

 private:
  LogitPair logits_;
};

// Guard whose backend always fails, for error-path checks.
class BrokenGuard : public Guardrail {
 public:
  explicit BrokenGuard(std::string id)
      : Guardrail(GuardrailSpec{std::move(id), Access::kBlackBox, {}}) {}

  Verdict classify(const std::string&) const override {
    throw GuardBackendError("backend unavailable", true);
  }
};

}  // namespace guardprobe::testing
