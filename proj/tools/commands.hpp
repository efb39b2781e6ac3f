#pragma once

#include "xlr/config.hpp"
#include "xlr/evalkit.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace xlr::cli {

inline constexpr const char* kCorpusFile = "corpus.jsonl";
inline constexpr const char* kSyntheticFile = "synthetic.jsonl";
inline constexpr const char* kRejectedFile = "rejected.jsonl";
inline constexpr const char* kModelFile = "model.bin";
inline constexpr const char* kReportJson = "report.json";
inline constexpr const char* kReportMarkdown = "report.md";

enum class TrainData { real, synthetic, both };

/// Stage entry points. Each reads its inputs (defaulting to the fixed
/// workdir file names) and writes its outputs under config.paths.workdir.
void run_ingest(const RunConfig& config, const std::optional<std::filesystem::path>& in);
void run_split(const RunConfig& config, const std::optional<std::filesystem::path>& in, const std::string& scope,
               bool overwrite);
void run_translate(const RunConfig& config, const std::optional<std::filesystem::path>& in);
void run_validate(const RunConfig& config, const std::optional<std::filesystem::path>& in);
void run_train(const RunConfig& config, TrainData data);
void run_evaluate(const RunConfig& config, const std::optional<std::filesystem::path>& test);
void run_compare(const RunConfig& config, const std::vector<std::filesystem::path>& reports);
void run_pipeline(const RunConfig& config);

/// Full command line: returns 0 on success, 1 on operational error, 2 on
/// usage error. Diagnostics go to stderr only.
int run(int argc, const char* const* argv);

} // namespace xlr::cli
