#include "guardprobe/runner.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "guardprobe/cache.hpp"
#include "guardprobe/util.hpp"

namespace guardprobe {

namespace fs = std::filesystem;
using nlohmann::json;

int exit_code_for(const std::exception& error) {
  if (dynamic_cast<const ConfigError*>(&error)) return kExitConfig;
  if (dynamic_cast<const AccessError*>(&error)) return kExitAccess;
  if (dynamic_cast<const CalibrationError*>(&error)) return kExitCalibration;
  if (dynamic_cast<const ProbeIncompleteError*>(&error)) return kExitIncomplete;
  return kExitError;
}

ProjectConfig load_config_with_overrides(const fs::path& config_path,
                                         const ConfigOverrides& o) {
  ProjectConfig cfg = load_config(config_path);
  if (o.candidate_id) cfg.candidate_id = *o.candidate_id;
  if (o.scorer_id) cfg.scorer_id = *o.scorer_id;
  if (o.queries_path) {
    cfg.queries = load_query_file(*o.queries_path);
    cfg.query_digest = queries_digest(cfg.queries);
  }
  if (o.out_dir) cfg.out_dir = *o.out_dir;
  if (o.cache_dir) cfg.cache_dir = *o.cache_dir;
  if (o.seed) cfg.optimizer.seed = *o.seed;
  if (o.epochs) cfg.optimizer.epochs = *o.epochs;
  if (o.search_mode) {
    if (*o.search_mode == "gradient_guided") {
      cfg.optimizer.search_mode = SearchMode::kGradientGuided;
    } else if (*o.search_mode == "coordinate_free") {
      cfg.optimizer.search_mode = SearchMode::kCoordinateFree;
    } else {
      throw ConfigError("unknown search mode '" + *o.search_mode + "'");
    }
  }
  if (o.workers) cfg.workers = *o.workers;
  if (o.lambda) {
    if (!(*o.lambda >= 1.0)) throw ConfigError("lambda must be >= 1");
    cfg.probe.lambda = *o.lambda;
  }
  if (o.template_id) {
    cfg.template_id = *o.template_id;
    cfg.registry.repeat_template(cfg.template_id);
  }
  return cfg;
}

namespace {

std::string sanitize_for_filename(const std::string& s) {
  std::string out;
  for (char c : s) {
    out.push_back(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' ? c : '_');
  }
  return out;
}

RunManifest make_manifest(const ProjectConfig& cfg, const std::string& command) {
  RunManifest m;
  m.run_id = command + "-" + cfg.digest.substr(0, 12);
  m.command = command;
  m.config_digest = cfg.digest;
  m.registry_digest = cfg.registry_digest;
  m.query_digest = cfg.query_digest;
  m.created_at = utc_timestamp_now();
  return m;
}

std::vector<PromptRecord> optimize_records(const ProjectConfig& cfg, bool without_query_set) {
  const WhiteBoxGuard& candidate = cfg.registry.white_box_guard(cfg.candidate_id);
  const SafetyScorer* scorer = cfg.registry.scorer(cfg.scorer_id);

  std::vector<PromptRecord> records;
  if (without_query_set) {
    const size_t n = cfg.queries.empty() ? 10 : cfg.queries.size();
    for (size_t slot = 0; slot < n; ++slot) {
      OptimizeResult r = optimize_prefix_alone(candidate, scorer, slot, cfg.optimizer);
      records.push_back(PromptRecord{std::move(r.prompt), cfg.optimizer.seed, cfg.digest});
    }
  } else {
    if (cfg.queries.empty()) {
      throw ConfigError("no queries configured; provide queries or use the no-query mode");
    }
    OptimizeSetResult set = optimize_set(candidate, scorer, cfg.queries, cfg.optimizer,
                                         cfg.workers);
    for (OptimizeResult& r : set.results) {
      records.push_back(PromptRecord{std::move(r.prompt), cfg.optimizer.seed, cfg.digest});
    }
    if (!set.failures.empty()) {
      std::fprintf(stderr, "optimize: %zu query optimizations failed\n", set.failures.size());
    }
  }
  return records;
}

}  // namespace

OptimizeOutcome run_optimize(const OptimizeArgs& args) {
  OptimizeOutcome out;
  try {
    ProjectConfig cfg = load_config_with_overrides(args.config_path, args.overrides);
    if (cfg.candidate_id.empty()) {
      throw ConfigError("optimizer.candidate is not set (and no --candidate override)");
    }

    std::vector<PromptRecord> records = optimize_records(cfg, args.without_query_set);

    fs::create_directories(cfg.out_dir);
    out.artifact_path = cfg.out_dir / "prompts.jsonl";
    write_prompt_records(out.artifact_path, records);
    out.records = records.size();

    RunManifest manifest = make_manifest(cfg, "optimize");
    manifest.artifacts["prompts"] = out.artifact_path.filename().string();
    out.manifest_path = cfg.out_dir / "manifest.optimize.json";
    write_manifest(out.manifest_path, manifest);
  } catch (const std::exception& e) {
    out.exit_code = exit_code_for(e);
    out.error = e.what();
  }
  return out;
}

CalibrateOutcome run_calibrate(const CalibrateArgs& args) {
  CalibrateOutcome out;
  try {
    ProjectConfig cfg = load_config_with_overrides(args.config_path, args.overrides);
    const std::vector<PromptRecord> records = read_prompt_records(args.prompts_path);
    // The artifact names its candidate; only an explicit flag overrides it.
    const std::string candidate_id = args.overrides.candidate_id
                                         ? *args.overrides.candidate_id
                                         : records.front().prompt.candidate_guard_id;

    std::vector<AdversarialPrompt> prompts;
    prompts.reserve(records.size());
    for (const PromptRecord& r : records) prompts.push_back(r.prompt);

    out.r_t = calibrate_target_rate(cfg.registry.guard(candidate_id), prompts);

    fs::create_directories(cfg.out_dir);
    out.output_path = cfg.out_dir / "calibration.json";
    json doc;
    doc["candidate_guard_id"] = candidate_id;
    doc["r_t"] = out.r_t;
    doc["prompts"] = args.prompts_path.filename().string();
    write_file_if_changed(out.output_path, doc.dump(2) + "\n");
  } catch (const std::exception& e) {
    out.exit_code = exit_code_for(e);
    out.error = e.what();
  }
  return out;
}

IdentifyOutcome run_identify(const IdentifyArgs& args) {
  IdentifyOutcome out;
  try {
    ProjectConfig cfg = load_config_with_overrides(args.config_path, args.overrides);
    const std::vector<PromptRecord> records = read_prompt_records(args.prompts_path);
    const std::string candidate_id = args.overrides.candidate_id
                                         ? *args.overrides.candidate_id
                                         : records.front().prompt.candidate_guard_id;
    for (const PromptRecord& r : records) {
      if (r.prompt.candidate_guard_id != candidate_id) {
        throw ConfigError("prompts artifact mixes candidates: found '" +
                          r.prompt.candidate_guard_id + "', expected '" + candidate_id + "'");
      }
    }

    std::vector<AdversarialPrompt> prompts;
    prompts.reserve(records.size());
    for (const PromptRecord& r : records) prompts.push_back(r.prompt);

    const Guardrail& candidate = cfg.registry.guard(candidate_id);
    std::shared_ptr<Agent> agent = cfg.registry.build_agent(args.agent_id);

    std::optional<ResponseCache> cache;
    std::optional<CachingAgent> cached_agent;
    const AgentEndpoint* endpoint = agent.get();
    if (args.use_cache) {
      cache.emplace(cfg.cache_dir);
      cached_agent.emplace(*agent, *cache);
      endpoint = &*cached_agent;
    }

    fs::create_directories(cfg.out_dir);
    const std::string stem =
        sanitize_for_filename(args.agent_id) + "__" + sanitize_for_filename(candidate_id);

    // Per-prompt traces stream to disk before any distance computation.
    std::ostringstream trace_stream;
    ProbeOptions probe = cfg.probe;
    const fs::path trace_path = cfg.out_dir / (stem + ".trace.jsonl");
    probe.trace_sink = [&trace_stream](const TraceEntry& e) {
      trace_stream << trace_entry_to_json(e).dump() << '\n';
    };

    const RepeatTemplate& tmpl = cfg.registry.repeat_template(cfg.template_id);
    IdentifyResult result;
    try {
      result = identify(*endpoint, candidate, prompts, tmpl, probe);
    } catch (...) {
      write_file_if_changed(trace_path, trace_stream.str());  // keep partial trace
      throw;
    }
    write_file_if_changed(trace_path, trace_stream.str());

    out.decision = result.decision;
    out.r_t = result.r_t;
    out.agent_queries = agent->queries_issued();
    if (cached_agent) out.cache_hits = cached_agent->hits();

    out.input_report_path = cfg.out_dir / (stem + ".input.report.json");
    write_file_if_changed(out.input_report_path,
                          report_to_json(result.input_report).dump(2) + "\n");
    if (result.output_report) {
      out.output_report_path = cfg.out_dir / (stem + ".output.report.json");
      write_file_if_changed(*out.output_report_path,
                            report_to_json(*result.output_report).dump(2) + "\n");
    }

    json decision_doc;
    decision_doc["agent_id"] = args.agent_id;
    decision_doc["candidate_guard_id"] = candidate_id;
    decision_doc["decision"] = decision_name(result.decision);
    decision_doc["r_t"] = result.r_t;
    decision_doc["input_d"] = result.input_report.distance.d;
    if (result.output_report) {
      decision_doc["output_d"] = result.output_report->distance.d;
    }
    out.decision_path = cfg.out_dir / (stem + ".decision.json");
    write_file_if_changed(out.decision_path, decision_doc.dump(2) + "\n");

    RunManifest manifest = make_manifest(cfg, "identify");
    manifest.run_id += "-" + stem;
    manifest.artifacts["prompts"] = args.prompts_path.string();
    manifest.artifacts["decision"] = out.decision_path.filename().string();
    manifest.artifacts["input_report"] = out.input_report_path.filename().string();
    if (out.output_report_path) {
      manifest.artifacts["output_report"] = out.output_report_path->filename().string();
    }
    manifest.artifacts["trace"] = trace_path.filename().string();
    out.manifest_path = cfg.out_dir / ("manifest.identify." + stem + ".json");
    write_manifest(out.manifest_path, manifest);
  } catch (const std::exception& e) {
    out.exit_code = exit_code_for(e);
    out.error = e.what();
  }
  return out;
}

AblateOutcome run_ablate(const AblateArgs& args) {
  AblateOutcome out;
  try {
    ProjectConfig base = load_config_with_overrides(args.config_path, args.overrides);

    json sweep;
    try {
      sweep = json::parse(read_file(args.sweep_path));
    } catch (const std::exception& e) {
      throw ConfigError("sweep spec " + args.sweep_path.string() + ": " + e.what());
    }
    const std::string axis = sweep.at("axis").get<std::string>();
    if (axis != "alpha" && axis != "beta" && axis != "epochs" && axis != "query_set_on_off") {
      throw ConfigError("sweep axis must be alpha, beta, epochs or query_set_on_off");
    }
    const json values = sweep.at("values");
    if (!values.is_array() || values.empty()) {
      throw ConfigError("sweep values must be a non-empty array");
    }
    const std::string candidate_id =
        sweep.value("candidate", base.candidate_id);
    if (candidate_id.empty()) {
      throw ConfigError("sweep: no candidate guard configured");
    }
    const std::string scorer_id = sweep.value("scorer", base.scorer_id);
    std::vector<std::string> agent_ids;
    if (sweep.contains("agents")) {
      for (const json& a : sweep["agents"]) agent_ids.push_back(a.get<std::string>());
    } else {
      for (const auto& [id, bp] : base.registry.agents) agent_ids.push_back(id);
    }
    if (agent_ids.empty()) {
      throw ConfigError("sweep: no agents to test");
    }

    out.axis = axis;
    for (const json& value : values) {
      AblationPoint point;
      point.axis_value = value.is_string() ? value.get<std::string>() : value.dump();
      try {
        ProjectConfig cfg = base;
        cfg.candidate_id = candidate_id;
        cfg.scorer_id = scorer_id;
        bool without_query_set = false;
        if (axis == "alpha") {
          cfg.optimizer.alpha = value.get<double>();
        } else if (axis == "beta") {
          cfg.optimizer.beta = value.get<double>();
        } else if (axis == "epochs") {
          cfg.optimizer.epochs = value.get<size_t>();
        } else {
          without_query_set = !value.get<bool>();
        }

        std::vector<PromptRecord> records = optimize_records(cfg, without_query_set);
        std::vector<AdversarialPrompt> prompts;
        prompts.reserve(records.size());
        for (PromptRecord& r : records) prompts.push_back(std::move(r.prompt));

        point.r_t = calibrate_target_rate(cfg.registry.guard(candidate_id), prompts);
        for (const std::string& agent_id : agent_ids) {
          std::shared_ptr<Agent> agent = cfg.registry.build_agent(agent_id);
          const ProbeReport report =
              input_guard_test(*agent, candidate_id, prompts, point.r_t, cfg.probe);
          point.cells.push_back(
              AblationCell{agent_id, report.stats.rate, report.distance.d});
        }
        point.completed = true;
      } catch (const std::exception& e) {
        point.error = e.what();
      }
      out.points.push_back(std::move(point));
    }

    const size_t completed =
        static_cast<size_t>(std::count_if(out.points.begin(), out.points.end(),
                                          [](const AblationPoint& p) { return p.completed; }));
    // The sweep as a whole needs at least 80% of its grid points.
    if (completed * 5 < out.points.size() * 4) {
      throw ProbeIncompleteError("ablation sweep: only " + std::to_string(completed) + " of " +
                                 std::to_string(out.points.size()) + " grid points completed");
    }

    json doc;
    doc["axis"] = axis;
    doc["candidate_guard_id"] = candidate_id;
    json points = json::array();
    for (const AblationPoint& p : out.points) {
      json pj;
      pj["value"] = p.axis_value;
      pj["completed"] = p.completed;
      if (!p.completed) pj["error"] = p.error;
      pj["r_t"] = p.r_t;
      json cells = json::array();
      for (const AblationCell& c : p.cells) {
        cells.push_back({{"agent_id", c.agent_id},
                         {"refusal_rate", c.refusal_rate},
                         {"distance", c.distance}});
      }
      pj["cells"] = std::move(cells);
      points.push_back(std::move(pj));
    }
    doc["points"] = std::move(points);

    fs::create_directories(base.out_dir);
    out.report_path = base.out_dir / "sweep.json";
    write_file_if_changed(out.report_path, doc.dump(2) + "\n");

    std::ostringstream csv;
    csv << "axis,value,agent_id,refusal_rate,distance,r_t\n";
    for (const AblationPoint& p : out.points) {
      for (const AblationCell& c : p.cells) {
        char line[256];
        std::snprintf(line, sizeof(line), "%s,%s,%s,%.6f,%.6f,%.6f\n", axis.c_str(),
                      p.axis_value.c_str(), c.agent_id.c_str(), c.refusal_rate, c.distance,
                      p.r_t);
        csv << line;
      }
    }
    out.csv_path = base.out_dir / "sweep.csv";
    write_file_if_changed(out.csv_path, csv.str());
  } catch (const std::exception& e) {
    out.exit_code = exit_code_for(e);
    out.error = e.what();
  }
  return out;
}

namespace {

std::string format_distance(double d, bool bold) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", d);
  return bold ? "**" + std::string(buf) + "**" : std::string(buf);
}

struct Matrix {
  std::vector<std::string> agents;
  std::vector<std::string> candidates;
  std::map<std::pair<std::string, std::string>, const ProbeReport*> cells;
};

Matrix build_matrix(const std::vector<ProbeReport>& reports, ProbeStage stage) {
  Matrix m;
  std::set<std::string> agents;
  std::set<std::string> candidates;
  for (const ProbeReport& r : reports) {
    if (r.stage != stage) continue;
    agents.insert(r.agent_id);
    candidates.insert(r.candidate_guard_id);
    m.cells[{r.agent_id, r.candidate_guard_id}] = &r;
  }
  m.agents.assign(agents.begin(), agents.end());
  m.candidates.assign(candidates.begin(), candidates.end());
  return m;
}

}  // namespace

std::string render_markdown(const std::vector<ProbeReport>& reports) {
  std::ostringstream md;
  for (ProbeStage stage : {ProbeStage::kInput, ProbeStage::kOutput}) {
    const Matrix m = build_matrix(reports, stage);
    if (m.cells.empty()) continue;
    md << "## " << (stage == ProbeStage::kInput ? "Input" : "Output") << " guard tests\n\n";
    md << "| Agent guard |";
    for (const std::string& c : m.candidates) md << ' ' << c << " |";
    md << "\n|---|";
    for (size_t i = 0; i < m.candidates.size(); ++i) md << "---|";
    md << '\n';
    for (const std::string& a : m.agents) {
      md << "| " << a << " |";
      for (const std::string& c : m.candidates) {
        auto it = m.cells.find({a, c});
        if (it == m.cells.end()) {
          md << " - |";
        } else {
          const double d = it->second->distance.d;
          md << ' ' << format_distance(d, it->second->distance.guard_present) << " |";
        }
      }
      md << '\n';
    }
    md << '\n';
  }
  return md.str();
}

std::string render_csv(const std::vector<ProbeReport>& reports) {
  std::ostringstream csv;
  csv << "stage,agent_id,candidate_guard_id,r,r_t,lambda,d,guard_present\n";
  for (const ProbeReport& r : reports) {
    char line[320];
    std::snprintf(line, sizeof(line), "%s,%s,%s,%.6f,%.6f,%.6f,%.6f,%d\n",
                  probe_stage_name(r.stage), r.agent_id.c_str(), r.candidate_guard_id.c_str(),
                  r.distance.r, r.distance.r_t, r.distance.lambda, r.distance.d,
                  r.distance.guard_present ? 1 : 0);
    csv << line;
  }
  return csv.str();
}

RenderOutcome run_render(const RenderArgs& args) {
  RenderOutcome out;
  try {
    std::vector<ProbeReport> reports;
    std::vector<fs::path> files;
    if (!fs::is_directory(args.reports_dir)) {
      throw ConfigError("not a directory: " + args.reports_dir.string());
    }
    for (const auto& entry : fs::directory_iterator(args.reports_dir)) {
      const std::string name = entry.path().filename().string();
      if (entry.is_regular_file() && name.size() > 12 &&
          name.substr(name.size() - 12) == ".report.json") {
        files.push_back(entry.path());
      }
    }
    std::sort(files.begin(), files.end());
    for (const fs::path& f : files) {
      reports.push_back(report_from_json(json::parse(read_file(f))));
    }
    if (reports.empty()) {
      throw ConfigError("no *.report.json files in " + args.reports_dir.string());
    }

    fs::create_directories(args.out_dir);
    out.markdown_path = args.out_dir / "tables.md";
    out.csv_path = args.out_dir / "tables.csv";
    write_file_if_changed(out.markdown_path, render_markdown(reports));
    write_file_if_changed(out.csv_path, render_csv(reports));
  } catch (const std::exception& e) {
    out.exit_code = exit_code_for(e);
    out.error = e.what();
  }
  return out;
}

}  // namespace guardprobe
