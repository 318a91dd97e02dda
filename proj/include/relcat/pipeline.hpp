#pragma once

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "relcat/llm_client.hpp"
#include "relcat/metrics.hpp"

namespace relcat {

struct RunConfig {
  std::filesystem::path corpus;     // directory of *.txt, or a single file
  std::filesystem::path providers;  // providers.json
  std::optional<std::filesystem::path> taxonomy_file;
  std::optional<std::filesystem::path> template_file;
  CacheMode cache_mode = CacheMode::kReplay;
  double threshold = kDefaultAlignmentThreshold;
  bool entity_fuzzy = false;
  std::size_t parallelism = 4;
  std::filesystem::path out_dir = "out";
  // Provider ids compared by align/analyze; default to the first two
  // providers in the providers file.
  std::string model_a;
  std::string model_b;
  CategoryDenominator denominator = CategoryDenominator::kModelA;
};

// Range checks only; file checks happen per stage, before any work.
void validate(const RunConfig& config);

// Seams for tests: a fake transport, a no-op sleeper, a fixed environment.
struct Runtime {
  Transport* transport = nullptr;  // null: cpp-httplib, created on demand
  Sleeper sleeper;
  EnvLookup env = process_env();
  Clock clock = utc_clock();
  std::ostream* log = nullptr;
};

namespace out_files {
inline constexpr const char* kClean = "clean.jsonl";
inline constexpr const char* kAligned = "aligned.jsonl";
inline constexpr const char* kMetrics = "metrics.json";
inline constexpr const char* kPerCategory = "per_category.csv";
inline constexpr const char* kMatrix = "matrix.csv";
inline constexpr const char* kCoverageTxt = "coverage.txt";
inline constexpr const char* kCoverageCsv = "coverage.csv";
inline constexpr const char* kFigCategory = "fig_category_agreement.svg";
inline constexpr const char* kFigHeatmap = "fig_heatmap.svg";
inline constexpr const char* kFigEntity = "fig_entity_agreement.svg";
inline constexpr const char* kStampDir = ".stamps";
std::string responses(std::string_view provider_id);
std::string parsed(std::string_view model_id);
}  // namespace out_files

// One row of responses.<provider>.jsonl.
struct ResponseRow {
  std::string provider_id;
  std::string model_name;
  std::string doc_id;
  std::size_t para_index = 0;
  std::string cache_key;
  std::string response_text;
};
std::string to_responses_jsonl(const std::vector<ResponseRow>& rows);
std::vector<ResponseRow> read_responses_jsonl(std::string_view jsonl);

// Each command reads its inputs from and writes its outputs to
// config.out_dir, and names the first missing input when it cannot start.
void cmd_ingest(const RunConfig& config, const Runtime& runtime = {});
void cmd_run(const RunConfig& config, const std::string& provider_id,
             const Runtime& runtime = {});
void cmd_parse(const RunConfig& config, const std::string& provider_id,
               const Runtime& runtime = {});
void cmd_align(const RunConfig& config, const Runtime& runtime = {});
void cmd_analyze(const RunConfig& config, const Runtime& runtime = {});
void cmd_report(const RunConfig& config, const Runtime& runtime = {});

// All six stages in order. A stage is skipped when its stamp records the
// same input fingerprint and its outputs are unchanged since.
struct StageLog {
  std::vector<std::string> ran;
  std::vector<std::string> skipped;
};
StageLog cmd_all(const RunConfig& config, const Runtime& runtime = {});

// Single-line JSON describing an error, for stderr.
std::string error_json(const std::exception& e);

}  // namespace relcat
