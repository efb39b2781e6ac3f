#include "xlr/corpus.hpp"

#include "xlr/diffkit.hpp"
#include "xlr/error.hpp"
#include "xlr/jsonl.hpp"
#include "xlr/hashing.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace xlr {

using json = nlohmann::ordered_json;

std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
    case ErrorCode::io: return "io";
    case ErrorCode::json: return "json";
    case ErrorCode::schema: return "schema";
    case ErrorCode::duplicate_id: return "duplicate_id";
    case ErrorCode::invalid_argument: return "invalid_argument";
    case ErrorCode::diff_parse: return "diff_parse";
    case ErrorCode::diff_apply: return "diff_apply";
    case ErrorCode::diff_invalid: return "diff_invalid";
    case ErrorCode::template_invalid: return "template_invalid";
    case ErrorCode::reply_parse: return "reply_parse";
    case ErrorCode::provider: return "provider";
    case ErrorCode::inconsistent: return "inconsistent";
    case ErrorCode::unsupported_pair: return "unsupported_pair";
    case ErrorCode::lex: return "lex";
    case ErrorCode::numeric: return "numeric";
    case ErrorCode::protocol: return "protocol";
    case ErrorCode::backend: return "backend";
    case ErrorCode::guard: return "guard";
    case ErrorCode::fingerprint_mismatch: return "fingerprint_mismatch";
    }
    return "unknown";
}

std::string_view to_string(Origin o) noexcept { return o == Origin::real ? "real" : "synthetic"; }
std::string_view to_string(Split s) noexcept { return s == Split::train ? "train" : "test"; }

Manifest compute_manifest(std::span<const ChangeRecord> records) {
    Manifest m;
    for (const auto& r : records) {
        ++m[ManifestKey{r.language, r.origin, r.label, r.split}];
    }
    return m;
}

CorpusStore::CorpusStore(std::vector<ChangeRecord> records) : records_(std::move(records)) {
    std::unordered_set<std::string_view> seen;
    seen.reserve(records_.size());
    for (const auto& r : records_) {
        if (!seen.insert(r.id).second) {
            throw Error(ErrorCode::duplicate_id, "duplicate record id '" + r.id + "'");
        }
    }
    manifest_ = compute_manifest(records_);
}

const ChangeRecord* CorpusStore::find(std::string_view id) const {
    auto it = std::find_if(records_.begin(), records_.end(), [id](const ChangeRecord& r) { return r.id == id; });
    return it == records_.end() ? nullptr : &*it;
}

std::size_t CorpusStore::count_label(int label) const {
    std::size_t n = 0;
    for (const auto& [key, count] : manifest_) {
        if (key.label == label) {
            n += count;
        }
    }
    return n;
}

bool RecordFilter::matches(const ChangeRecord& r) const {
    return (!language || r.language == *language) && (!origin || r.origin == *origin) &&
           (!split || r.split == *split) && (!label || r.label == *label);
}

json to_json(const ChangeRecord& r) {
    json j;
    j["id"] = r.id;
    j["language"] = r.language;
    j["old_code"] = r.old_code;
    j["diff"] = r.diff;
    j["label"] = r.label;
    j["origin"] = to_string(r.origin);
    j["source_id"] = r.source_id ? json(*r.source_id) : json(nullptr);
    j["split"] = r.split ? json(to_string(*r.split)) : json(nullptr);
    for (const auto& [key, value] : r.extra.items()) {
        j[key] = value;
    }
    return j;
}

namespace {

constexpr std::array<std::string_view, 8> kFields = {"id",    "language", "old_code",  "diff",
                                                     "label", "origin",   "source_id", "split"};

[[noreturn]] void schema_fail(const std::string& what) { throw Error(ErrorCode::schema, what); }

const json& field(const json& j, std::string_view name) {
    auto it = j.find(name);
    if (it == j.end()) {
        schema_fail("missing field '" + std::string(name) + "'");
    }
    return *it;
}

std::string string_field(const json& j, std::string_view name) {
    const json& v = field(j, name);
    if (!v.is_string()) {
        schema_fail("field '" + std::string(name) + "' must be a string");
    }
    return v.get<std::string>();
}

} // namespace

ChangeRecord record_from_json(const json& j, bool strict) {
    if (!j.is_object()) {
        schema_fail("record must be a JSON object");
    }
    ChangeRecord r;
    r.id = string_field(j, "id");
    if (r.id.empty()) {
        schema_fail("field 'id' must be non-empty");
    }
    r.language = string_field(j, "language");
    r.old_code = string_field(j, "old_code");
    r.diff = string_field(j, "diff");

    const json& label = field(j, "label");
    if (!label.is_number_integer() || (label.get<std::int64_t>() != 0 && label.get<std::int64_t>() != 1)) {
        schema_fail("field 'label' must be 0 or 1, got " + dump_line(label));
    }
    r.label = label.get<int>();

    const std::string origin = string_field(j, "origin");
    if (origin == "real") {
        r.origin = Origin::real;
    } else if (origin == "synthetic") {
        r.origin = Origin::synthetic;
    } else {
        schema_fail("field 'origin' must be \"real\" or \"synthetic\", got \"" + origin + "\"");
    }

    const json& source = field(j, "source_id");
    if (source.is_string()) {
        r.source_id = source.get<std::string>();
    } else if (!source.is_null()) {
        schema_fail("field 'source_id' must be a string or null");
    }
    if ((r.origin == Origin::synthetic) != r.source_id.has_value()) {
        schema_fail("source_id must be set exactly when origin is \"synthetic\"");
    }

    const json& split = field(j, "split");
    if (split.is_string() && split.get<std::string>() == "train") {
        r.split = Split::train;
    } else if (split.is_string() && split.get<std::string>() == "test") {
        r.split = Split::test;
    } else if (!split.is_null()) {
        schema_fail("field 'split' must be null, \"train\" or \"test\"");
    }

    for (const auto& [key, value] : j.items()) {
        if (std::find(kFields.begin(), kFields.end(), key) != kFields.end()) {
            continue;
        }
        if (strict) {
            schema_fail("unknown field '" + key + "'");
        }
        r.extra[key] = value;
    }
    return r;
}

CorpusStore ingest_text(std::string_view text, bool strict, std::vector<IngestRejection>* rejections) {
    std::vector<ChangeRecord> records;
    std::unordered_map<std::string, std::size_t> first_line;
    std::size_t line_no = 0;
    std::size_t start = 0;

    while (start < text.size()) {
        auto nl = text.find('\n', start);
        if (nl == std::string_view::npos) {
            nl = text.size();
        }
        std::string_view line = text.substr(start, nl - start);
        start = nl + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.remove_suffix(1);
        }
        if (line.find_first_not_of(" \t") == std::string_view::npos) {
            continue;
        }

        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            throw Error(ErrorCode::json, "line " + std::to_string(line_no) + ": malformed JSON: " + e.what());
        }
        ChangeRecord r;
        try {
            r = record_from_json(j, strict);
        } catch (const Error& e) {
            throw Error(ErrorCode::schema, "line " + std::to_string(line_no) + ": " + e.what());
        }
        if (auto [it, inserted] = first_line.emplace(r.id, line_no); !inserted) {
            throw Error(ErrorCode::duplicate_id, "line " + std::to_string(line_no) + ": duplicate id '" + r.id +
                                                     "' (first seen on line " + std::to_string(it->second) + ")");
        }
        if (strict) {
            try {
                diff::apply(r.old_code, diff::parse_unified_diff(r.diff));
            } catch (const Error& e) {
                if (rejections) {
                    rejections->push_back({line_no, r.id, e.what()});
                }
                continue;
            }
        }
        records.push_back(std::move(r));
    }
    return CorpusStore(std::move(records));
}

CorpusStore ingest(const std::filesystem::path& path, bool strict, std::vector<IngestRejection>* rejections) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorCode::io, "cannot read corpus file '" + path.string() + "'");
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    if (in.bad()) {
        throw Error(ErrorCode::io, "error while reading '" + path.string() + "'");
    }
    return ingest_text(buf.str(), strict, rejections);
}

CorpusStore split(const CorpusStore& store, double test_fraction, std::uint64_t seed, bool overwrite) {
    if (!(test_fraction >= 0.0 && test_fraction <= 1.0)) {
        throw Error(ErrorCode::invalid_argument, "test_fraction must lie in [0, 1], got " + std::to_string(test_fraction));
    }
    if (store.empty()) {
        throw Error(ErrorCode::invalid_argument, "cannot split an empty corpus");
    }
    std::vector<ChangeRecord> records(store.records().begin(), store.records().end());
    if (!overwrite) {
        for (const auto& r : records) {
            if (r.split) {
                throw Error(ErrorCode::invalid_argument,
                            "record '" + r.id + "' is already split; pass overwrite to re-split");
            }
        }
    }

    for (int label : {0, 1}) {
        std::vector<std::size_t> members;
        for (std::size_t i = 0; i < records.size(); ++i) {
            if (records[i].label == label) {
                members.push_back(i);
            }
        }
        // Sorting by id first makes the result independent of ingest order.
        std::sort(members.begin(), members.end(),
                  [&records](std::size_t a, std::size_t b) { return records[a].id < records[b].id; });
        Rng rng(derive_seed(seed, label == 0 ? "split/label0" : "split/label1"));
        rng.shuffle(members.begin(), members.end());

        const auto n_test = static_cast<std::size_t>(std::round(test_fraction * static_cast<double>(members.size())));
        for (std::size_t k = 0; k < members.size(); ++k) {
            records[members[k]].split = k < n_test ? Split::test : Split::train;
        }
    }
    return CorpusStore(std::move(records));
}

std::vector<ChangeRecord> select(const CorpusStore& store, const RecordFilter& filter) {
    std::vector<ChangeRecord> out;
    for (const auto& r : store.records()) {
        if (filter.matches(r)) {
            out.push_back(r);
        }
    }
    return out;
}

std::size_t write_jsonl(std::span<const ChangeRecord> records, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw Error(ErrorCode::io, "cannot write '" + path.string() + "'");
    }
    for (const auto& r : records) {
        out << dump_line(to_json(r)) << '\n';
    }
    out.flush();
    if (!out) {
        throw Error(ErrorCode::io, "write failed for '" + path.string() + "'");
    }
    return records.size();
}

std::size_t export_jsonl(const CorpusStore& store, const RecordFilter& filter, const std::filesystem::path& path) {
    const auto chosen = select(store, filter);
    return write_jsonl(chosen, path);
}

CorpusStore merge_updates(const CorpusStore& store, std::span<const ChangeRecord> updates) {
    std::unordered_map<std::string_view, const ChangeRecord*> by_id;
    for (const auto& u : updates) {
        by_id[u.id] = &u;
    }
    std::vector<ChangeRecord> records;
    records.reserve(store.size());
    for (const auto& r : store.records()) {
        auto it = by_id.find(r.id);
        records.push_back(it == by_id.end() ? r : *it->second);
    }
    return CorpusStore(std::move(records));
}

} // namespace xlr
