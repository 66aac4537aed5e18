#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "guardprobe/artifacts.hpp"
#include "guardprobe/config.hpp"
#include "guardprobe/probe.hpp"

namespace guardprobe {

// Exit-code contract: 0 ok, 2 config, 3 access, 4 calibration, 5 incomplete
// probe, 1 anything else.
constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitConfig = 2;
constexpr int kExitAccess = 3;
constexpr int kExitCalibration = 4;
constexpr int kExitIncomplete = 5;

int exit_code_for(const std::exception& error);

// Shared CLI-style overrides applied on top of the config file.
struct ConfigOverrides {
  std::optional<std::string> candidate_id;
  std::optional<std::string> scorer_id;
  std::optional<std::filesystem::path> queries_path;
  std::optional<std::filesystem::path> out_dir;
  std::optional<std::filesystem::path> cache_dir;
  std::optional<std::uint64_t> seed;
  std::optional<size_t> epochs;
  std::optional<std::string> search_mode;  // gradient_guided | coordinate_free
  std::optional<size_t> workers;
  std::optional<double> lambda;
  std::optional<std::string> template_id;
};

ProjectConfig load_config_with_overrides(const std::filesystem::path& config_path,
                                         const ConfigOverrides& overrides);

// ---------------------------------------------------------------------------
// optimize
// ---------------------------------------------------------------------------

struct OptimizeArgs {
  std::filesystem::path config_path;
  ConfigOverrides overrides;
  bool without_query_set = false;  // prefix-alone ablation mode
};

struct OptimizeOutcome {
  int exit_code = kExitOk;
  std::string error;
  std::filesystem::path artifact_path;
  std::filesystem::path manifest_path;
  size_t records = 0;
  size_t failures = 0;
};

OptimizeOutcome run_optimize(const OptimizeArgs& args);

// ---------------------------------------------------------------------------
// calibrate
// ---------------------------------------------------------------------------

struct CalibrateArgs {
  std::filesystem::path config_path;
  std::filesystem::path prompts_path;
  ConfigOverrides overrides;
};

struct CalibrateOutcome {
  int exit_code = kExitOk;
  std::string error;
  double r_t = 0.0;
  std::filesystem::path output_path;
};

CalibrateOutcome run_calibrate(const CalibrateArgs& args);

// ---------------------------------------------------------------------------
// identify
// ---------------------------------------------------------------------------

struct IdentifyArgs {
  std::filesystem::path config_path;
  std::filesystem::path prompts_path;
  std::string agent_id;
  ConfigOverrides overrides;
  bool use_cache = true;
};

struct IdentifyOutcome {
  int exit_code = kExitOk;
  std::string error;
  Decision decision = Decision::kNotPresent;
  double r_t = 0.0;
  std::filesystem::path input_report_path;
  std::optional<std::filesystem::path> output_report_path;
  std::filesystem::path decision_path;
  std::filesystem::path manifest_path;
  std::uint64_t agent_queries = 0;  // live queries; 0 on a warm-cache rerun
  std::uint64_t cache_hits = 0;
};

IdentifyOutcome run_identify(const IdentifyArgs& args);

// ---------------------------------------------------------------------------
// ablate
// ---------------------------------------------------------------------------

struct AblateArgs {
  std::filesystem::path config_path;
  std::filesystem::path sweep_path;
  ConfigOverrides overrides;
};

struct AblationCell {
  std::string agent_id;
  double refusal_rate = 0.0;
  double distance = 0.0;
};

struct AblationPoint {
  std::string axis_value;
  bool completed = false;
  std::string error;
  double r_t = 0.0;
  std::vector<AblationCell> cells;
};

struct AblateOutcome {
  int exit_code = kExitOk;
  std::string error;
  std::string axis;
  std::vector<AblationPoint> points;
  std::filesystem::path report_path;
  std::filesystem::path csv_path;
};

AblateOutcome run_ablate(const AblateArgs& args);

// ---------------------------------------------------------------------------
// render-report
// ---------------------------------------------------------------------------

struct RenderArgs {
  std::filesystem::path reports_dir;
  std::filesystem::path out_dir;
};

struct RenderOutcome {
  int exit_code = kExitOk;
  std::string error;
  std::filesystem::path markdown_path;
  std::filesystem::path csv_path;
};

RenderOutcome run_render(const RenderArgs& args);

// Markdown matrix (rows: agents, columns: candidates) with d > 0.5 bolded,
// one section per probe stage present in the reports.
std::string render_markdown(const std::vector<ProbeReport>& reports);
std::string render_csv(const std::vector<ProbeReport>& reports);

}  // namespace guardprobe
