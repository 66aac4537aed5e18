#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace guardprobe {

// FNV-1a. Used for cache keys and artifact digests; not collision-resistant
// against adversaries, which is fine for local run bookkeeping.
std::uint64_t fnv1a64(std::string_view data, std::uint64_t seed = 14695981039346656037ULL);

// 32-hex-char digest built from two independently seeded FNV-1a lanes.
std::string digest_hex(std::string_view data);

// Deterministic RNG wrapper. mt19937_64 output is pinned by the standard;
// the distribution helpers below are hand-rolled so streams are bit-identical
// across standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, n). n must be > 0.
  std::uint64_t uniform(std::uint64_t n);

  // Uniform double in [0, 1) with 53 bits of entropy.
  double uniform_double();

  // Standard normal via Box-Muller on uniform_double draws.
  double normal();

 private:
  std::mt19937_64 engine_;
};

// Stable way to derive per-task seeds from a base seed and a salt.
std::uint64_t mix_seed(std::uint64_t base, std::uint64_t salt);

std::vector<std::string> split_words(std::string_view text);
std::string join_words(const std::vector<std::string>& words);
std::string to_lower(std::string_view s);
bool contains_ci(std::string_view haystack, std::string_view needle);

// UTC timestamp like 2026-08-11T12:00:00Z.
std::string utc_timestamp_now();

// Whole-file read; throws on failure (the exception type is the caller's
// layer, so this throws std::runtime_error).
std::string read_file(const std::filesystem::path& path);

}  // namespace guardprobe
