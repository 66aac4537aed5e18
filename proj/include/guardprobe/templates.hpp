#pragma once

#include <optional>
#include <string>
#include <vector>

#include "guardprobe/core.hpp"

namespace guardprobe {

// Wrapper instructing an agent to repeat the embedded text verbatim. The
// pattern contains exactly one "{prompt}" placeholder.
struct RepeatTemplate {
  std::string id;
  std::string pattern;

  static constexpr const char* kPlaceholder = "{prompt}";

  void validate() const;  // throws ParameterError unless exactly one placeholder

  std::string wrap(const std::string& text) const;

  // Inverse of wrap: recovers the embedded text, or nullopt when the input
  // does not match this template.
  std::optional<std::string> unwrap(const std::string& wrapped) const;

  std::string head() const;
  std::string tail() const;
};

// The five shipped repeat templates, T1..T5. T3 is the default.
const std::vector<RepeatTemplate>& builtin_templates();

const RepeatTemplate& builtin_template(const std::string& id);

inline const char* default_template_id() { return "T3"; }

}  // namespace guardprobe
