#pragma once
// Command-line pipeline: ingest -> sample -> judge -> validate -> analyze ->
// report. One JSON config file describes a run; command-line flags override
// individual values. All outputs are deterministic for identical inputs.

#include "regcov/analysis.hpp"
#include "regcov/corpus.hpp"
#include "regcov/judge.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace regcov::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;    // input or configuration error
inline constexpr int kExitPartial = 2;  // judge finished with a non-empty error log

struct BenchmarkSource {
  std::string name;
  std::filesystem::path path;
  std::string adapter;
  corpus::AdapterDescriptor descriptor;
};

struct PipelineConfig {
  std::vector<BenchmarkSource> sources;
  judge::JudgeConfig judge_config;
  std::map<std::string, std::string> mock_rules;  // keyword -> code
  std::uint64_t seed = 42;
  std::size_t budget = 600;
  std::size_t min_per_stratum = 30;
  analysis::DenominatorMode denominator = analysis::DenominatorMode::AllQuestions;
  std::filesystem::path risk_mapping_path;  // empty: built-in mapping
  std::filesystem::path output_dir = "out";
  // Normalized view of the configuration, embedded into reports so every
  // number can be traced to the settings that produced it.
  nlohmann::ordered_json effective;
};

// Relative paths inside the file resolve against base_dir (the config file's
// directory), so a config works no matter where the tool is invoked from.
PipelineConfig parse_config(const std::string& json_text,
                            const std::filesystem::path& base_dir);
PipelineConfig load_config(const std::filesystem::path& path);
PipelineConfig default_config();

// args hold the subcommand and its flags, e.g. {"ingest", "--config", "run.json"}.
// Returns the process exit code; human output goes to out, diagnostics and
// progress to err.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace regcov::cli
