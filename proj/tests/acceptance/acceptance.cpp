// Acceptance suite: one pass/fail line per criterion, nonzero exit when any
// criterion fails. Thresholds and tolerances are pinned in code.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "guardprobe/agent.hpp"
#include "guardprobe/artifacts.hpp"
#include "guardprobe/cache.hpp"
#include "guardprobe/core.hpp"
#include "guardprobe/guards.hpp"
#include "guardprobe/optimizer.hpp"
#include "guardprobe/probe.hpp"
#include "guardprobe/runner.hpp"
#include "guardprobe/templates.hpp"
#include "guardprobe/tokenizer.hpp"
#include "guardprobe/util.hpp"

using namespace guardprobe;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct AcceptanceFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

#define REQUIRE_THAT(cond, message)                                   \
  do {                                                                \
    if (!(cond)) {                                                    \
      throw AcceptanceFailure(std::string(message) + " [" #cond "]"); \
    }                                                                 \
  } while (0)

int g_failures = 0;

void criterion(int number, const std::string& title, const std::function<void()>& body) {
  const auto start = std::chrono::steady_clock::now();
  try {
    body();
    const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                        std::chrono::steady_clock::now() - start)
                        .count();
    std::printf("[PASS] %2d. %s (%lld ms)\n", number, title.c_str(),
                static_cast<long long>(ms));
  } catch (const std::exception& e) {
    ++g_failures;
    std::printf("[FAIL] %2d. %s\n       %s\n", number, title.c_str(), e.what());
  }
  std::fflush(stdout);
}

fs::path fixtures_dir() { return fs::path(GUARDPROBE_FIXTURES_DIR); }

fs::path temp_dir(const std::string& tag) {
  const fs::path dir = fs::temp_directory_path() / ("guardprobe-acceptance-" + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::vector<std::string> read_lines(const fs::path& path) {
  std::ifstream in(path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line[0] != '#') lines.push_back(line);
  }
  return lines;
}

// ---------------------------------------------------------------------------
// Shared synthetic world: three guard families with disjoint trigger behavior
// over the desk-scale vocabulary, plus 10-prompt sets optimized per candidate.
// ---------------------------------------------------------------------------

struct World {
  std::shared_ptr<Tokenizer> tok;
  std::vector<std::shared_ptr<const WhiteBoxGuard>> candidates;  // A, B, C
  std::map<std::string, std::vector<AdversarialPrompt>> prompts;
  std::map<std::string, std::vector<OptimizeResult>> runs;
  OptimizerConfig config;
};

OptimizerConfig acceptance_config() {
  OptimizerConfig cfg;
  cfg.prefix_length = 32;
  cfg.epochs = 200;     // <= 200 per the runtime budget
  cfg.batch_size = 64;
  cfg.seed = 20240811;
  cfg.search_mode = SearchMode::kCoordinateFree;
  return cfg;
}

QuerySet ten_queries() {
  QuerySet qs;
  const auto lines = read_lines(fixtures_dir() / "queries_50.txt");
  for (size_t i = 0; i < 10 && i < lines.size(); ++i) {
    char id[16];
    std::snprintf(id, sizeof(id), "q%03zu", i);
    qs.queries.push_back(Query{id, lines[i]});
  }
  return qs;
}

const World& world() {
  static const World w = [] {
    World out;
    out.tok = std::make_shared<Tokenizer>("toy", read_lines(fixtures_dir() / "vocab_toy.txt"));
    REQUIRE_THAT(out.tok->size() <= 1024, "restricted vocabulary must stay within 1024 tokens");

    out.candidates.push_back(std::make_shared<KeywordGuard>(
        GuardrailSpec{"guard-a", Access::kWhiteBox, "toy"}, out.tok,
        std::vector<std::string>{"zebra", "okapi", "lemur", "ibex"}));
    out.candidates.push_back(LinearGuard::keyword_equivalent(
        GuardrailSpec{"guard-b", Access::kWhiteBox, "toy"}, out.tok,
        {"quasar", "pulsar", "nebula", "comet"}));
    TinyClassifierGuard::TrainConfig train;
    train.seed = 11;
    out.candidates.push_back(std::make_shared<TinyClassifierGuard>(
        GuardrailSpec{"guard-c", Access::kWhiteBox, "toy"}, out.tok,
        std::vector<std::string>{"glacier", "fjord", "tundra", "taiga"}, train));

    out.config = acceptance_config();
    const QuerySet qs = ten_queries();
    for (const auto& candidate : out.candidates) {
      OptimizeSetResult set = optimize_set(*candidate, nullptr, qs, out.config, 4);
      REQUIRE_THAT(set.failures.empty(), "optimization must not drop queries");
      out.prompts[candidate->id()] = set.prompts();
      out.runs[candidate->id()] = std::move(set.results);
    }

    // Ground-truth verification: every candidate flags all of its own
    // prompts and none of the other candidates' prompts, raw and wrapped.
    const RepeatTemplate& t3 = builtin_template("T3");
    for (const auto& candidate : out.candidates) {
      for (const auto& other : out.candidates) {
        for (const AdversarialPrompt& p : out.prompts[other->id()]) {
          const bool same = candidate->id() == other->id();
          REQUIRE_THAT(candidate->classify(p.full_text).is_unsafe() == same,
                       "trigger behavior must be disjoint on optimized prompts");
          REQUIRE_THAT(candidate->classify(t3.wrap(p.full_text)).is_unsafe() == same,
                       "trigger behavior must be disjoint on wrapped prompts");
        }
      }
    }
    return out;
  }();
  return w;
}

std::shared_ptr<const Responder> repeater() {
  static const auto r = std::make_shared<TemplateRepeaterResponder>(builtin_templates());
  return r;
}

std::string dump_report(const ProbeReport& report) { return report_to_json(report).dump(); }

// Compact desk config used by the CLI-level criteria.
json cli_config(const fs::path& out_dir, const fs::path& queries_path) {
  json cfg;
  cfg["tokenizers"] =
      json::array({json{{"id", "toy"}, {"vocab_path", (fixtures_dir() / "vocab_toy.txt").string()}}});
  cfg["guards"] = json::array({
      json{{"id", "guard-a"},
           {"kind", "keyword"},
           {"tokenizer", "toy"},
           {"triggers", {"zebra", "okapi", "lemur", "ibex"}}},
      json{{"id", "guard-b"},
           {"kind", "linear"},
           {"tokenizer", "toy"},
           {"triggers", {"quasar", "pulsar", "nebula", "comet"}}},
  });
  cfg["scorers"] = json::array({json{{"id", "flagwords"},
                                     {"kind", "token_flag"},
                                     {"tokenizer", "toy"},
                                     {"flags", {"venom", "toxin", "hazard", "peril"}}}});
  cfg["queries"] = {{"path", queries_path.string()}};
  cfg["optimizer"] = {{"candidate", "guard-a"}, {"prefix_length", 32},
                      {"epochs", 200},          {"batch_size", 64},
                      {"seed", 20240811},       {"search_mode", "coordinate_free"},
                      {"workers", 4}};
  cfg["agents"] = json::array({
      json{{"id", "agent-a"}, {"responder", "repeater"}, {"input_guard", "guard-a"}},
      json{{"id", "agent-bare"}, {"responder", "repeater"}},
  });
  cfg["probe"] = {{"lambda", 2.0}, {"template", "T3"}};
  cfg["paths"] = {{"out_dir", out_dir.string()}, {"cache_dir", (out_dir / "cache").string()}};
  return cfg;
}

fs::path write_ten_query_file(const fs::path& dir) {
  const fs::path path = dir / "queries_10.txt";
  std::ofstream out(path);
  const auto lines = read_lines(fixtures_dir() / "queries_50.txt");
  for (size_t i = 0; i < 10 && i < lines.size(); ++i) out << lines[i] << '\n';
  return path;
}

std::map<fs::path, std::string> snapshot_tree(const fs::path& root) {
  std::map<fs::path, std::string> snap;
  for (const auto& entry : fs::recursive_directory_iterator(root)) {
    if (entry.is_regular_file()) snap[entry.path()] = read_file(entry.path());
  }
  return snap;
}

// ---------------------------------------------------------------------------
// Criteria
// ---------------------------------------------------------------------------

void criterion_metric_exactness() {
  const DistanceResult full = normalized_distance(0.98, 0.98, 2.0);
  REQUIRE_THAT(std::abs(full.d - 1.0) <= 1e-12, "(0.98, 0.98, 2) must give d = 1.00");
  REQUIRE_THAT(full.guard_present, "d = 1.00 must signal presence");

  const DistanceResult zero = normalized_distance(0.0, 0.98, 2.0);
  REQUIRE_THAT(std::abs(zero.d - 0.0) <= 1e-12, "(0, 0.98, 2) must give d = 0");

  const DistanceResult quarter = normalized_distance(0.49, 0.98, 2.0);
  REQUIRE_THAT(std::abs(quarter.d - 0.25) <= 1e-12, "(0.49, 0.98, 2) must give d = 0.25");

  bool raised = false;
  try {
    normalized_distance(0.5, 0.0, 2.0);
  } catch (const CalibrationError&) {
    raised = true;
  }
  REQUIRE_THAT(raised, "r_t = 0 must raise CalibrationError");
}

void run_nine_cells(ProbeStage stage) {
  const World& w = world();
  const RepeatTemplate& t3 = builtin_template("T3");

  for (const auto& agent_guard : w.candidates) {
    std::shared_ptr<Agent> agent;
    if (stage == ProbeStage::kInput) {
      agent = std::make_shared<Agent>("agent-" + agent_guard->id(), repeater(), agent_guard);
    } else {
      agent = std::make_shared<Agent>("agent-" + agent_guard->id(),
                                      std::make_shared<EchoResponder>(), nullptr, agent_guard);
    }
    for (const auto& candidate : w.candidates) {
      const auto& prompts = w.prompts.at(candidate->id());
      const double r_t = calibrate_target_rate(*candidate, prompts);
      const ProbeReport report =
          stage == ProbeStage::kInput
              ? input_guard_test(*agent, candidate->id(), prompts, r_t)
              : output_guard_test(*agent, candidate->id(), prompts, t3, r_t);
      const bool matching = agent_guard->id() == candidate->id();
      std::ostringstream cell;
      cell << "cell(agent=" << agent_guard->id() << ", candidate=" << candidate->id()
           << ") d=" << report.distance.d;
      if (matching) {
        REQUIRE_THAT(report.distance.d >= 0.9, "matching " + cell.str() + " must be >= 0.9");
      } else {
        REQUIRE_THAT(report.distance.d <= 0.1, "non-matching " + cell.str() + " must be <= 0.1");
      }
    }
  }
}

void criterion_two_step_workflow() {
  const World& w = world();
  const RepeatTemplate& t3 = builtin_template("T3");
  const auto& guard_a = w.candidates[0];
  const auto& guard_b = w.candidates[1];
  const auto& guard_c = w.candidates[2];
  const size_t n = w.prompts.at("guard-a").size();

  {
    Agent agent("agent-ab", repeater(), guard_a, guard_b);
    const IdentifyResult res = identify(agent, *guard_a, w.prompts.at("guard-a"), t3);
    REQUIRE_THAT(res.decision == Decision::kInputGuard, "candidate A must decide INPUT_GUARD");
    REQUIRE_THAT(!res.output_report.has_value(), "output test must be skipped for candidate A");
    REQUIRE_THAT(agent.queries_issued() == n, "candidate A must use exactly one test pass");
  }
  {
    Agent agent("agent-ab", repeater(), guard_a, guard_b);
    const IdentifyResult res = identify(agent, *guard_b, w.prompts.at("guard-b"), t3);
    REQUIRE_THAT(res.decision == Decision::kOutputGuard, "candidate B must decide OUTPUT_GUARD");
    REQUIRE_THAT(agent.queries_issued() == 2 * n, "candidate B must run both test passes");
  }
  {
    Agent agent("agent-ab", repeater(), guard_a, guard_b);
    const IdentifyResult res = identify(agent, *guard_c, w.prompts.at("guard-c"), t3);
    REQUIRE_THAT(res.decision == Decision::kNotPresent, "candidate C must decide NOT_PRESENT");
  }
}

void criterion_robustness_invariants() {
  const World& w = world();
  const RepeatTemplate& t3 = builtin_template("T3");
  const auto& guard_a = w.candidates[0];
  const auto& guard_b = w.candidates[1];
  const auto& guard_c = w.candidates[2];
  const auto& prompts = w.prompts.at("guard-a");
  const double r_t = calibrate_target_rate(*guard_a, prompts);

  // Input test: identical across attached output guards {none, A, B}.
  std::vector<std::string> input_dumps;
  for (const std::shared_ptr<const Guardrail>& out :
       std::initializer_list<std::shared_ptr<const Guardrail>>{nullptr, guard_a, guard_b}) {
    Agent agent("agent-robust", repeater(), guard_a, out);
    input_dumps.push_back(dump_report(input_guard_test(agent, "guard-a", prompts, r_t)));
  }
  REQUIRE_THAT(input_dumps[0] == input_dumps[1] && input_dumps[0] == input_dumps[2],
               "input-test report must not depend on the attached output guard");

  // Output test: identical across input guards that do not flag the prompts.
  auto echo = std::make_shared<EchoResponder>();
  std::vector<std::string> output_dumps;
  for (const std::shared_ptr<const Guardrail>& in :
       std::initializer_list<std::shared_ptr<const Guardrail>>{nullptr, guard_b, guard_c}) {
    Agent agent("agent-robust", echo, in, guard_a);
    output_dumps.push_back(dump_report(output_guard_test(agent, "guard-a", prompts, t3, r_t)));
  }
  REQUIRE_THAT(output_dumps[0] == output_dumps[1] && output_dumps[0] == output_dumps[2],
               "output-test report must not depend on non-flagging input guards");
}

void criterion_optimizer_oracle() {
  std::vector<std::string> vocab{"!"};
  for (int i = 0; i < 15; ++i) vocab.push_back("w" + std::to_string(i));
  auto tok = std::make_shared<Tokenizer>("tiny16", vocab);
  const Query query{"q0", "w1 w2"};
  const std::vector<TokenId> query_ids = tok->encode(query.text);

  Rng rng(4242);
  for (int inst = 0; inst < 20; ++inst) {
    std::unordered_map<TokenId, double> weights;
    for (TokenId v = 0; v < tok->size(); ++v) {
      weights[v] = 4.0 * rng.uniform_double() - 2.0;
    }
    const double threshold = 2.0 * rng.uniform_double() - 1.0;
    LinearGuard guard(GuardrailSpec{"inst", Access::kWhiteBox, "tiny16"}, tok, weights, 0.0,
                      threshold);

    OptimizerConfig cfg;
    cfg.prefix_length = 2;
    cfg.epochs = 200;
    cfg.batch_size = 16;
    cfg.beta = 0.0;
    cfg.seed = 1000 + static_cast<std::uint64_t>(inst);
    cfg.search_mode =
        inst % 2 == 0 ? SearchMode::kCoordinateFree : SearchMode::kGradientGuided;
    cfg.top_k = 8;

    const OptimizeResult result = optimize_prefix(guard, nullptr, query, cfg);

    // Monotone best-so-far across every logged epoch.
    double last = std::numeric_limits<double>::infinity();
    for (const EpochLogEntry& e : result.epoch_log) {
      REQUIRE_THAT(e.best.total <= last, "best-so-far loss must never increase");
      last = e.best.total;
    }

    // Independent oracle: exhaustive enumeration of all 256 prefixes with
    // direct loss arithmetic from the guard's logits.
    double exhaustive_min = std::numeric_limits<double>::infinity();
    auto softplus = [](double x) {
      return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
    };
    for (TokenId a = 0; a < tok->size(); ++a) {
      for (TokenId b = 0; b < tok->size(); ++b) {
        double z = 0.0;
        std::vector<TokenId> seq{a, b};
        seq.insert(seq.end(), query_ids.begin(), query_ids.end());
        for (TokenId t : seq) z += weights.at(t);
        const double margin = z - threshold;
        exhaustive_min =
            std::min(exhaustive_min, softplus(-margin) + cfg.alpha * (-softplus(margin)));
      }
    }
    REQUIRE_THAT(result.prompt.final_loss <= exhaustive_min + 1e-9,
                 "final loss must reach the exhaustive minimum within 1e-9");
  }
}

void criterion_loss_identity() {
  const World& w = world();
  for (const auto& [candidate_id, runs] : w.runs) {
    for (const OptimizeResult& run : runs) {
      for (const EpochLogEntry& e : run.epoch_log) {
        const double recombined =
            e.best.l1 + w.config.alpha * e.best.l2 + w.config.beta * e.best.l3;
        REQUIRE_THAT(std::abs(e.best.total - recombined) <= 1e-9,
                     "logged breakdown must satisfy total = l1 + alpha*l2 + beta*l3");
      }
    }
  }

  // Degenerate weights: total collapses to l1 exactly at every epoch.
  OptimizerConfig cfg = acceptance_config();
  cfg.alpha = 0.0;
  cfg.beta = 0.0;
  cfg.epochs = 40;
  const auto& candidate = *world().candidates[0];
  const OptimizeResult run =
      optimize_prefix(dynamic_cast<const WhiteBoxGuard&>(candidate), nullptr,
                      Query{"q0", "what is the capital of france"}, cfg);
  for (const EpochLogEntry& e : run.epoch_log) {
    REQUIRE_THAT(e.best.total == e.best.l1, "alpha = beta = 0 must reduce total to l1 exactly");
  }
}

void criterion_template_evaluator() {
  const std::vector<std::string> probes = {
      "zebra okapi what is the capital of france",
      "quasar pulsar how many days are in a week",
      "glacier fjord what color is the sky on a clear day",
  };
  TemplateRepeaterResponder perfect(builtin_templates());
  const auto scores = evaluate_templates(builtin_templates(), perfect, probes);
  REQUIRE_THAT(scores.size() == 5, "all five shipped templates must be evaluated");
  for (const TemplateScore& s : scores) {
    REQUIRE_THAT(s.mean.bleu == 1.0, "perfect repetition must give BLEU = 1.0 on " + s.template_id);
    REQUIRE_THAT(s.mean.rouge_l == 1.0,
                 "perfect repetition must give ROUGE-L = 1.0 on " + s.template_id);
  }

  FixedResponder empty("");
  const auto zeros = evaluate_templates(builtin_templates(), empty, probes);
  for (const TemplateScore& s : zeros) {
    REQUIRE_THAT(s.mean.rouge_l == 0.0, "empty responses must give ROUGE-L = 0.0");
  }
}

void criterion_ablation_direction() {
  // Scorer-aware setup: the candidate's trigger set overlaps a cross guard,
  // and the safety scorer flags exactly the cross guard's triggers.
  const fs::path dir = temp_dir("ablate");
  const fs::path queries = write_ten_query_file(dir);

  json cfg;
  cfg["tokenizers"] = json::array(
      {json{{"id", "toy"}, {"vocab_path", (fixtures_dir() / "vocab_toy.txt").string()}}});
  cfg["guards"] = json::array({
      json{{"id", "guard-cand"},
           {"kind", "keyword"},
           {"tokenizer", "toy"},
           {"triggers", {"okapi", "lemur", "zebra", "ibex"}}},
      json{{"id", "guard-cross"},
           {"kind", "keyword"},
           {"tokenizer", "toy"},
           {"triggers", {"zebra", "ibex", "quasar", "pulsar"}}},
  });
  cfg["scorers"] = json::array({json{{"id", "risk"},
                                     {"kind", "token_flag"},
                                     {"tokenizer", "toy"},
                                     {"flags", {"zebra", "ibex", "quasar", "pulsar"}}}});
  cfg["queries"] = {{"path", queries.string()}};
  cfg["optimizer"] = {{"candidate", "guard-cand"}, {"scorer", "risk"},
                      {"prefix_length", 32},       {"epochs", 200},
                      {"batch_size", 64},          {"seed", 20240811},
                      {"search_mode", "coordinate_free"},
                      {"workers", 4}};
  cfg["agents"] = json::array({
      json{{"id", "agent-cand"}, {"responder", "repeater"}, {"input_guard", "guard-cand"}},
      json{{"id", "agent-cross"}, {"responder", "repeater"}, {"input_guard", "guard-cross"}},
  });
  cfg["probe"] = {{"lambda", 2.0}, {"template", "T3"}};
  cfg["paths"] = {{"out_dir", (dir / "out").string()},
                  {"cache_dir", (dir / "cache").string()}};

  const fs::path config_path = dir / "config.json";
  {
    std::ofstream out(config_path);
    out << cfg.dump(2);
  }
  const fs::path sweep_path = dir / "sweep.json";
  {
    std::ofstream out(sweep_path);
    out << json{{"axis", "beta"},
                {"values", {0.0, 1000.0}},
                {"candidate", "guard-cand"},
                {"scorer", "risk"},
                {"agents", {"agent-cand", "agent-cross"}}}
               .dump();
  }

  const AblateOutcome out = run_ablate(AblateArgs{config_path, sweep_path, {}});
  REQUIRE_THAT(out.exit_code == kExitOk, "ablation sweep must complete: " + out.error);
  REQUIRE_THAT(out.points.size() == 2, "sweep must cover both grid points");

  auto rate_of = [&](const AblationPoint& p, const std::string& agent) {
    for (const AblationCell& c : p.cells) {
      if (c.agent_id == agent) return c.refusal_rate;
    }
    throw AcceptanceFailure("missing sweep cell for " + agent);
  };
  const AblationPoint& beta_zero = out.points[0];
  const AblationPoint& beta_full = out.points[1];
  REQUIRE_THAT(beta_zero.completed && beta_full.completed, "both grid points must complete");

  const double cross_at_zero = rate_of(beta_zero, "agent-cross");
  const double cross_at_full = rate_of(beta_full, "agent-cross");
  const double cand_at_full = rate_of(beta_full, "agent-cand");
  REQUIRE_THAT(cross_at_zero > cross_at_full,
               "dropping the compatibility term must strictly raise cross-guard refusals");
  REQUIRE_THAT(cand_at_full >= 0.9,
               "the candidate's refusal rate must stay >= 0.9 with the full loss");
}

void criterion_cli_determinism() {
  const fs::path dir = temp_dir("determinism");
  const fs::path queries = write_ten_query_file(dir);
  const fs::path out_dir = dir / "out";
  const json cfg = cli_config(out_dir, queries);
  const fs::path config_path = dir / "config.json";
  {
    std::ofstream out(config_path);
    out << cfg.dump(2);
  }

  const OptimizeOutcome opt1 = run_optimize(OptimizeArgs{config_path, {}, false});
  REQUIRE_THAT(opt1.exit_code == kExitOk, "first optimize must succeed: " + opt1.error);
  const IdentifyOutcome id1 =
      run_identify(IdentifyArgs{config_path, opt1.artifact_path, "agent-a", {}, true});
  REQUIRE_THAT(id1.exit_code == kExitOk, "first identify must succeed: " + id1.error);
  REQUIRE_THAT(id1.decision == Decision::kInputGuard, "agent-a must be identified INPUT_GUARD");
  REQUIRE_THAT(id1.agent_queries > 0, "cold run must query the agent");

  const auto before = snapshot_tree(out_dir);

  const OptimizeOutcome opt2 = run_optimize(OptimizeArgs{config_path, {}, false});
  REQUIRE_THAT(opt2.exit_code == kExitOk, "second optimize must succeed: " + opt2.error);
  const IdentifyOutcome id2 =
      run_identify(IdentifyArgs{config_path, opt2.artifact_path, "agent-a", {}, true});
  REQUIRE_THAT(id2.exit_code == kExitOk, "second identify must succeed: " + id2.error);
  REQUIRE_THAT(id2.agent_queries == 0, "warm rerun must issue zero agent queries");
  REQUIRE_THAT(id2.cache_hits > 0, "warm rerun must be served from the cache");

  const auto after = snapshot_tree(out_dir);
  REQUIRE_THAT(before.size() == after.size(), "rerun must not add or remove artifacts");
  for (const auto& [path, bytes] : before) {
    auto it = after.find(path);
    REQUIRE_THAT(it != after.end(), "artifact missing after rerun: " + path.string());
    REQUIRE_THAT(it->second == bytes, "artifact changed on rerun: " + path.string());
  }
}

}  // namespace

int main() {
  std::printf("acceptance suite\n");

  criterion(1, "normalized distance reproduces hand-computed values exactly",
            criterion_metric_exactness);
  criterion(2, "input-stage identification separates all nine agent/candidate cells",
            [] { run_nine_cells(ProbeStage::kInput); });
  criterion(3, "output-stage identification separates all nine cells via repetition",
            [] { run_nine_cells(ProbeStage::kOutput); });
  criterion(4, "two-step workflow picks the stage with minimal queries",
            criterion_two_step_workflow);
  criterion(5, "probe reports are bit-identical under foreign guards",
            criterion_robustness_invariants);
  criterion(6, "search reaches the exhaustive optimum on 20 tiny instances",
            criterion_optimizer_oracle);
  criterion(7, "logged loss breakdowns recombine exactly", criterion_loss_identity);
  criterion(8, "template evaluator scores perfect and empty repetition exactly",
            criterion_template_evaluator);
  criterion(9, "compatibility loss suppresses cross-guard refusals directionally",
            criterion_ablation_direction);
  criterion(10, "optimize + identify reruns are byte-identical with zero queries",
            criterion_cli_determinism);

  if (g_failures > 0) {
    std::printf("acceptance: %d criterion(s) failed\n", g_failures);
    return 1;
  }
  std::printf("acceptance: all criteria passed\n");
  return 0;
}
