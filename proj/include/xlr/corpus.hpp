#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include <json.hpp>

namespace xlr {

enum class Origin { real, synthetic };
enum class Split { train, test };

std::string_view to_string(Origin o) noexcept;
std::string_view to_string(Split s) noexcept;

/// One labeled code change. label is 1 when the change required manual review.
struct ChangeRecord {
    std::string id;
    std::string language;
    std::string old_code;
    std::string diff;
    int label = 0;
    Origin origin = Origin::real;
    std::optional<std::string> source_id;
    std::optional<Split> split;
    // Fields outside the schema, kept verbatim when ingesting non-strictly.
    nlohmann::ordered_json extra = nlohmann::ordered_json::object();

    friend bool operator==(const ChangeRecord&, const ChangeRecord&) = default;
};

struct ManifestKey {
    std::string language;
    Origin origin = Origin::real;
    int label = 0;
    std::optional<Split> split;

    auto operator<=>(const ManifestKey&) const = default;
};

using Manifest = std::map<ManifestKey, std::size_t>;

Manifest compute_manifest(std::span<const ChangeRecord> records);

/// Immutable, ingest-ordered collection of records with unique ids.
class CorpusStore {
public:
    CorpusStore() = default;
    /// Throws Error{duplicate_id} if two records share an id.
    explicit CorpusStore(std::vector<ChangeRecord> records);

    std::span<const ChangeRecord> records() const noexcept { return records_; }
    const Manifest& manifest() const noexcept { return manifest_; }
    std::size_t size() const noexcept { return records_.size(); }
    bool empty() const noexcept { return records_.empty(); }

    const ChangeRecord* find(std::string_view id) const;
    std::size_t count_label(int label) const;

private:
    std::vector<ChangeRecord> records_;
    Manifest manifest_;
};

struct RecordFilter {
    std::optional<std::string> language;
    std::optional<Origin> origin;
    // nullopt = any split; an engaged nullopt inner value = unsplit records only.
    std::optional<std::optional<Split>> split;
    std::optional<int> label;

    bool matches(const ChangeRecord& r) const;
};

struct IngestRejection {
    std::size_t line = 0;
    std::string id;
    std::string reason;
};

/// Reads a JSONL corpus. In strict mode unknown fields are errors and a
/// record whose diff does not apply to its old_code is skipped (and listed
/// in *rejections when given). Throws Error with the 1-based line number on
/// malformed JSON, schema violations, or duplicate ids.
CorpusStore ingest(const std::filesystem::path& path, bool strict,
                   std::vector<IngestRejection>* rejections = nullptr);

/// Same as ingest() but from in-memory JSONL text.
CorpusStore ingest_text(std::string_view text, bool strict, std::vector<IngestRejection>* rejections = nullptr);

/// Stratified split: per label class, round(test_fraction * n) records
/// (half away from zero) become "test", chosen by a seeded shuffle of the
/// class sorted by id; the rest become "train". Throws if any record is
/// already split and overwrite is false.
CorpusStore split(const CorpusStore& store, double test_fraction, std::uint64_t seed, bool overwrite = false);

std::vector<ChangeRecord> select(const CorpusStore& store, const RecordFilter& filter);

/// Writes matching records as JSONL with fixed field order; returns the count.
std::size_t export_jsonl(const CorpusStore& store, const RecordFilter& filter, const std::filesystem::path& path);
std::size_t write_jsonl(std::span<const ChangeRecord> records, const std::filesystem::path& path);

nlohmann::ordered_json to_json(const ChangeRecord& r);
/// Throws Error{schema} describing the first violation.
ChangeRecord record_from_json(const nlohmann::ordered_json& j, bool strict);

/// Replaces records by id, keeping store order; ids absent from updates are untouched.
CorpusStore merge_updates(const CorpusStore& store, std::span<const ChangeRecord> updates);

} // namespace xlr
