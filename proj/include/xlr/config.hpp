#pragma once

#include "xlr/backend.hpp"
#include "xlr/model.hpp"
#include "xlr/provider.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace xlr {

struct RunPaths {
    std::filesystem::path corpus_in;
    std::filesystem::path workdir = "work";
    std::filesystem::path report_out; // optional extra copy of report.md
};

struct RunConfig {
    std::uint64_t seed = 42;
    double test_fraction = 0.2;
    std::string src_lang = "java";
    std::string dst_lang = "cpp";
    bool strict = true;
    translate::ProviderConfig provider;
    // Explicit jitter seed; derived from `seed` when absent.
    std::optional<std::uint64_t> jitter_seed;
    model::Hyperparams hyperparams;
    double threshold = 0.5;
    std::optional<std::vector<std::string>> denylist; // default: per dst_lang
    RunPaths paths;
    model::BackendHandle backend;

    /// Per-component seeds, each derived from `seed` and a fixed label.
    std::uint64_t split_seed() const noexcept;
    std::uint64_t mock_seed() const noexcept;
    std::uint64_t retry_jitter_seed() const noexcept;
    std::uint64_t train_seed() const noexcept;

    /// Provider config with derived seeds filled in.
    translate::ProviderConfig resolved_provider() const;
    model::Hyperparams resolved_hyperparams() const;
    std::vector<std::string> resolved_denylist() const;

    /// Throws Error{invalid_argument} on out-of-range values.
    void validate() const;
};

/// Reads a JSON config. Relative paths resolve against the config file's
/// directory. Unknown keys are errors.
RunConfig load_config(const std::filesystem::path& path);
RunConfig config_from_json(const nlohmann::ordered_json& j, const std::filesystem::path& base_dir);

/// Machine-independent snapshot (no filesystem paths) embedded in reports.
nlohmann::ordered_json config_snapshot(const RunConfig& config);

} // namespace xlr
