#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "stochain/chain_model.hpp"
#include "stochain/flow_graph.hpp"
#include "stochain/simulator.hpp"
#include "stochain/types.hpp"

namespace stochain {

// ---------------------------------------------------------------------------
// Parsed scenario. The text format is line-oriented ("key value..." lines,
// `model`/`analysis` sections closed by `end`); see docs/scenario_format.md.
// Parsing completes before anything is computed, and unknown keys are errors.
// ---------------------------------------------------------------------------

struct FlowGraphAnalysis {
  long horizon = 4096;
  FlowMode mode = FlowMode::expected;
  Real threshold = 0.1;
};

struct PropertiesAnalysis {
  long steps = 8;
  // Sample count for the Monte Carlo fallback when closed-form moments are
  // missing.
  int samples = 256;
};

struct M2Analysis {
  Vector x0;
  long t0 = 0;
  long horizon = 1024;
  int trials = 100;
};

struct SimulateAnalysis {
  Vector x0;
  long t0 = 0;
  long horizon = 1000;
  std::uint64_t path = 0;
  bool csv = false;
};

struct VerifyAnalysis {
  VerifyConfig config;
};

struct ApproxCompareAnalysis {
  enum class Variant { identity, prefix_identity, diagonal };
  Variant variant = Variant::identity;
  long prefix_steps = 0;
  std::vector<std::vector<Index>> blocks;  // diagonal variant, 0-based

  long l1_horizon = 4096;
  FlowMode mode = FlowMode::expected;
  Real threshold = 0.1;

  bool compare_patterns = false;
  EmpiricalPatternOptions empirical;
};

using Analysis = std::variant<FlowGraphAnalysis, PropertiesAnalysis, M2Analysis,
                              SimulateAnalysis, VerifyAnalysis,
                              ApproxCompareAnalysis>;

struct Scenario {
  std::string name;
  std::uint64_t seed = 0;
  ModelPtr model;  // built with `seed`
  // Rebuilds the model hierarchy under a different seed (CLI override).
  std::function<ModelPtr(std::uint64_t)> build_model;
  std::vector<Analysis> analyses;
  std::vector<std::string> echo_lines;  // scenario text, comments included
};

Scenario parse_scenario_text(const std::string& text);
Scenario parse_scenario_file(const std::string& path);

// ---------------------------------------------------------------------------
// Execution. Reports are structured text (docs/report_schema.md) and are
// byte-identical for a fixed scenario + seed, across runs and worker counts.
// Wall-clock lines are kept separate so the deterministic body can be
// compared directly.
// ---------------------------------------------------------------------------

struct RunOptions {
  std::string out_dir;  // empty: no files are written
  std::optional<std::uint64_t> seed_override;
  int workers = 1;
};

struct RunReport {
  std::string name;
  std::string body;    // full report text except timing lines
  std::string timing;  // "timing ..." lines
  bool any_mismatch = false;  // some verify analysis had match = false
  long long total_steps = 0;
  std::vector<std::string> files;  // written artifacts, relative to out_dir
};

RunReport run_scenario(const Scenario& scenario, const RunOptions& options = {});
RunReport run_scenario_file(const std::string& path,
                            const RunOptions& options = {});

// Report body with the timing lines spliced in; this is what lands on disk.
std::string report_file_text(const RunReport& report);

// ---------------------------------------------------------------------------
// Bundled scenarios.
// ---------------------------------------------------------------------------

struct ScenarioInfo {
  std::string name;
  std::string description;  // one line naming the construct exercised
};

const std::vector<ScenarioInfo>& list_scenarios();
bool is_bundled_scenario(const std::string& name);
const std::string& bundled_scenario_text(const std::string& name);

}  // namespace stochain
