// Command-line front end: runs scenario files or bundled scenarios and
// prints their reports. Exit codes: 0 success, 2 usage/parse/analysis error,
// 3 a verify analysis found a prediction mismatch (with --fail-on-mismatch).
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "stochain/errors.hpp"
#include "stochain/harness.hpp"

namespace {

stochain::Scenario load_scenario(const std::string& ref) {
  if (std::filesystem::exists(ref)) {
    return stochain::parse_scenario_file(ref);
  }
  if (stochain::is_bundled_scenario(ref)) {
    return stochain::parse_scenario_text(stochain::bundled_scenario_text(ref));
  }
  throw stochain::Error("'" + ref +
                        "' is neither a scenario file nor a bundled scenario "
                        "(see 'stochain list')");
}

std::string default_out_dir() {
  if (const char* env = std::getenv("STOCHAIN_OUT")) return env;
  return "stochain-out";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"stochain: random stochastic chain scenarios"};
  app.require_subcommand(1);

  std::string scenario_ref;
  std::string out_dir = default_out_dir();
  std::optional<std::uint64_t> seed_override;
  int workers = 1;
  bool fail_on_mismatch = false;
  bool no_files = false;

  CLI::App* run = app.add_subcommand("run", "run a scenario and print its report");
  run->add_option("scenario", scenario_ref,
                  "scenario file path or bundled scenario name")
      ->required();
  run->add_option("--out", out_dir,
                  "directory for report and CSV files (default: $STOCHAIN_OUT "
                  "or ./stochain-out)");
  run->add_flag("--no-files", no_files, "print the report only, write nothing");
  run->add_option("--seed", seed_override, "override the scenario seed");
  run->add_option("--workers", workers,
                  "worker threads for trajectory sweeps (results do not "
                  "depend on this)")
      ->check(CLI::PositiveNumber);
  run->add_flag("--fail-on-mismatch", fail_on_mismatch,
                "exit 3 when a verify analysis reports match false");

  bool machine = false;
  CLI::App* list = app.add_subcommand("list", "list bundled scenarios");
  list->add_flag("--machine", machine, "stable machine-readable catalog");

  std::string describe_ref;
  CLI::App* describe =
      app.add_subcommand("describe", "print a scenario's text");
  describe->add_option("scenario", describe_ref,
                       "scenario file path or bundled scenario name")
      ->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      stochain::RunOptions options;
      options.out_dir = no_files ? std::string() : out_dir;
      options.seed_override = seed_override;
      options.workers = workers;
      const stochain::RunReport report =
          stochain::run_scenario(load_scenario(scenario_ref), options);
      std::cout << stochain::report_file_text(report);
      if (fail_on_mismatch && report.any_mismatch) return 3;
      return 0;
    }
    if (list->parsed()) {
      if (machine) {
        std::cout << "stochain-catalog 1\n";
        for (const stochain::ScenarioInfo& info : stochain::list_scenarios()) {
          std::cout << "scenario " << info.name << ' ' << info.description
                    << '\n';
        }
      } else {
        for (const stochain::ScenarioInfo& info : stochain::list_scenarios()) {
          std::cout << info.name << "\n    " << info.description << '\n';
        }
      }
      return 0;
    }
    // describe
    if (std::filesystem::exists(describe_ref)) {
      const stochain::Scenario sc = stochain::parse_scenario_file(describe_ref);
      for (const std::string& line : sc.echo_lines) std::cout << line << '\n';
      return 0;
    }
    if (stochain::is_bundled_scenario(describe_ref)) {
      std::cout << stochain::bundled_scenario_text(describe_ref);
      return 0;
    }
    throw stochain::Error("'" + describe_ref + "' is not a known scenario");
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
