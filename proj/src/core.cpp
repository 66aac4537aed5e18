#include "guardprobe/core.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

namespace guardprobe {

const char* label_name(Label label) {
  return label == Label::kUnsafe ? "unsafe" : "safe";
}

void QuerySet::validate() const {
  std::unordered_set<std::string> seen;
  for (const Query& q : queries) {
    if (q.text.empty()) {
      throw ParameterError("query '" + q.id + "' has empty text");
    }
    if (!seen.insert(q.id).second) {
      throw ParameterError("duplicate query id '" + q.id + "'");
    }
  }
}

DistanceResult normalized_distance(double r, double r_t, double lambda) {
  if (!(r >= 0.0 && r <= 1.0)) {
    throw ParameterError("refusal rate r must lie in [0, 1]");
  }
  if (r_t == 0.0) {
    throw CalibrationError(
        "target refusal rate is 0: the candidate guardrail never refused its own "
        "adversarial prompts; re-optimize (e.g. raise epochs) before testing");
  }
  if (!(r_t > 0.0 && r_t <= 1.0)) {
    throw ParameterError("target refusal rate r_t must lie in (0, 1]");
  }
  if (!(lambda >= 1.0)) {
    throw ParameterError("scaling factor lambda must be >= 1");
  }
  const double ratio = std::min(r, r_t) / r_t;
  const double d = std::pow(ratio, lambda);
  return DistanceResult{r, r_t, lambda, d, d > 0.5};
}

RefusalStats refusal_stats_from_counts(std::uint64_t refusals, std::uint64_t total) {
  if (total == 0) {
    throw EmptyInputError("refusal_stats: no responses");
  }
  if (refusals > total) {
    throw ParameterError("refusal_stats: refusals exceed total");
  }
  return RefusalStats{total, refusals,
                      static_cast<double>(refusals) / static_cast<double>(total)};
}

RefusalStats refusal_stats(const std::vector<bool>& refused_flags) {
  const auto refusals =
      static_cast<std::uint64_t>(std::count(refused_flags.begin(), refused_flags.end(), true));
  return refusal_stats_from_counts(refusals, refused_flags.size());
}

}  // namespace guardprobe
