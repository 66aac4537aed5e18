#include <cstdio>
#include <string>

#include "CLI11.hpp"

#include "guardprobe/runner.hpp"

namespace {

using namespace guardprobe;

struct CommonFlags {
  std::string config;
  std::string candidate;
  std::string scorer;
  std::string queries;
  std::string out_dir;
  std::string cache_dir;
  std::string search_mode;
  std::string template_id;
  std::uint64_t seed = 0;
  std::size_t epochs = 0;
  std::size_t workers = 0;
  double lambda = 0.0;
  bool seed_set = false;
  bool epochs_set = false;
  bool workers_set = false;
  bool lambda_set = false;

  ConfigOverrides overrides() const {
    ConfigOverrides o;
    if (!candidate.empty()) o.candidate_id = candidate;
    if (!scorer.empty()) o.scorer_id = scorer;
    if (!queries.empty()) o.queries_path = queries;
    if (!out_dir.empty()) o.out_dir = out_dir;
    if (!cache_dir.empty()) o.cache_dir = cache_dir;
    if (!search_mode.empty()) o.search_mode = search_mode;
    if (!template_id.empty()) o.template_id = template_id;
    if (seed_set) o.seed = seed;
    if (epochs_set) o.epochs = epochs;
    if (workers_set) o.workers = workers;
    if (lambda_set) o.lambda = lambda;
    return o;
  }
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config,-c", flags.config, "Config file (JSON)")->required();
  cmd->add_option("--candidate", flags.candidate, "Candidate guard id override");
  cmd->add_option("--out", flags.out_dir, "Output directory override");
}

int fail(const std::string& verb, const std::string& error, int code) {
  std::fprintf(stderr, "guardprobe %s: %s\n", verb.c_str(), error.c_str());
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Black-box guardrail identification via adversarial prefix probes"};
  app.require_subcommand(1);

  CommonFlags flags;
  std::string prompts_path;
  std::string agent_id;
  std::string sweep_path;
  std::string reports_dir;
  bool without_query_set = false;
  bool no_cache = false;

  CLI::App* optimize = app.add_subcommand(
      "optimize", "Optimize adversarial prompts against the candidate guard");
  add_common(optimize, flags);
  optimize->add_option("--scorer", flags.scorer, "Safety scorer id override");
  optimize->add_option("--queries", flags.queries, "Query file override (one per line)");
  optimize->add_option("--seed", flags.seed, "Seed override")
      ->each([&](const std::string&) { flags.seed_set = true; });
  optimize->add_option("--epochs", flags.epochs, "Epoch count override")
      ->each([&](const std::string&) { flags.epochs_set = true; });
  optimize->add_option("--mode", flags.search_mode,
                       "Search mode: gradient_guided | coordinate_free");
  optimize->add_option("--workers", flags.workers, "Parallel per-query optimizations")
      ->each([&](const std::string&) { flags.workers_set = true; });
  optimize->add_flag("--without-query-set", without_query_set,
                     "Optimize standalone prefixes with no query text");

  CLI::App* calibrate =
      app.add_subcommand("calibrate", "Measure the candidate's own refusal rate r_t");
  add_common(calibrate, flags);
  calibrate->add_option("--prompts", prompts_path, "Prompts artifact (JSONL)")->required();

  CLI::App* identify = app.add_subcommand(
      "identify", "Run the two-step input/output guard identification on an agent");
  add_common(identify, flags);
  identify->add_option("--prompts", prompts_path, "Prompts artifact (JSONL)")->required();
  identify->add_option("--agent", agent_id, "Agent id from the config registry")->required();
  identify->add_option("--template", flags.template_id, "Repeat template id (default T3)");
  identify->add_option("--lambda", flags.lambda, "Distance scaling factor")
      ->each([&](const std::string&) { flags.lambda_set = true; });
  identify->add_option("--cache", flags.cache_dir, "Response cache directory override");
  identify->add_flag("--no-cache", no_cache, "Query the agent directly, bypassing the cache");

  CLI::App* ablate = app.add_subcommand("ablate", "Sweep a hyper-parameter axis");
  add_common(ablate, flags);
  ablate->add_option("--sweep", sweep_path, "Sweep spec (JSON)")->required();

  CLI::App* render = app.add_subcommand("render-report", "Render report tables (md + csv)");
  render->add_option("--in", reports_dir, "Directory of *.report.json files")->required();
  render->add_option("--out", flags.out_dir, "Output directory (default: same as --in)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  if (optimize->parsed()) {
    const OptimizeOutcome out =
        run_optimize(OptimizeArgs{flags.config, flags.overrides(), without_query_set});
    if (out.exit_code != kExitOk) return fail("optimize", out.error, out.exit_code);
    std::printf("wrote %zu prompt records to %s\n", out.records,
                out.artifact_path.string().c_str());
    return kExitOk;
  }

  if (calibrate->parsed()) {
    const CalibrateOutcome out =
        run_calibrate(CalibrateArgs{flags.config, prompts_path, flags.overrides()});
    if (out.exit_code != kExitOk) return fail("calibrate", out.error, out.exit_code);
    std::printf("r_t = %.4f (%s)\n", out.r_t, out.output_path.string().c_str());
    return kExitOk;
  }

  if (identify->parsed()) {
    const IdentifyOutcome out = run_identify(
        IdentifyArgs{flags.config, prompts_path, agent_id, flags.overrides(), !no_cache});
    if (out.exit_code != kExitOk) return fail("identify", out.error, out.exit_code);
    std::printf("decision: %s (r_t = %.4f, agent queries = %llu, cache hits = %llu)\n",
                decision_name(out.decision), out.r_t,
                static_cast<unsigned long long>(out.agent_queries),
                static_cast<unsigned long long>(out.cache_hits));
    std::printf("reports under %s\n", out.decision_path.parent_path().string().c_str());
    return kExitOk;
  }

  if (ablate->parsed()) {
    const AblateOutcome out =
        run_ablate(AblateArgs{flags.config, sweep_path, flags.overrides()});
    if (out.exit_code != kExitOk) return fail("ablate", out.error, out.exit_code);
    std::printf("sweep over %s: %zu points -> %s\n", out.axis.c_str(), out.points.size(),
                out.report_path.string().c_str());
    return kExitOk;
  }

  if (render->parsed()) {
    const RenderOutcome out = run_render(
        RenderArgs{reports_dir, flags.out_dir.empty() ? reports_dir : flags.out_dir});
    if (out.exit_code != kExitOk) return fail("render-report", out.error, out.exit_code);
    std::printf("wrote %s and %s\n", out.markdown_path.string().c_str(),
                out.csv_path.string().c_str());
    return kExitOk;
  }

  return kExitConfig;
}
