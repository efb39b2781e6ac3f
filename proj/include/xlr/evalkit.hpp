#pragma once

#include "xlr/backend.hpp"
#include "xlr/corpus.hpp"

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace xlr::eval {

/// Positive class is label 1 ("requires review").
struct ConfusionMatrix {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;
    std::size_t tn = 0;

    std::size_t total() const noexcept { return tp + fp + fn + tn; }
    friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

/// Zero-denominator ratios are defined as 0, never NaN.
struct Metrics {
    double accuracy = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;

    friend bool operator==(const Metrics&, const Metrics&) = default;
};

struct LabelDecision {
    int label = 0;
    int decision = 0;
};

/// Throws Error{invalid_argument} when a label or decision is not 0/1.
ConfusionMatrix confusion(std::span<const LabelDecision> pairs);

/// Throws Error{invalid_argument} when cm.total() == 0.
Metrics metrics(const ConfusionMatrix& cm);

struct Evaluation {
    ConfusionMatrix cm;
    Metrics metrics;
};

/// Predicts every test record with the backend and scores the decisions.
/// Refuses (Error{guard}) any test set containing synthetic records.
Evaluation evaluate(model::Backend& backend, std::span<const ChangeRecord> test);

/// Hex FNV-1a over the sorted test ids, newline-joined.
std::string test_set_fingerprint(std::span<const ChangeRecord> test);

struct ReportRow {
    std::string name;
    ConfusionMatrix cm;
    Metrics metrics;
    std::string fingerprint;
};

struct EvalReport {
    std::string fingerprint;
    std::vector<ReportRow> rows;
    std::vector<Metrics> deltas; // row i minus row 0, per metric
    nlohmann::ordered_json config = nlohmann::ordered_json::object();
};

/// Rows keep their order; every row must carry `fingerprint`
/// (Error{fingerprint_mismatch} otherwise).
EvalReport compare(std::vector<ReportRow> rows, const std::string& fingerprint,
                   nlohmann::ordered_json config = nlohmann::ordered_json::object());

enum class ReportFormat { json, markdown };

/// Markdown: Table-1-shaped table rounded to 2 decimals, half away from zero.
/// JSON: full precision with fingerprint, rows, deltas and config.
std::string render_report(const EvalReport& report, ReportFormat format);

/// Inverse of the JSON rendering.
EvalReport parse_report_json(std::string_view text);

/// Formats v with two decimals, rounding half away from zero on the
/// shortest decimal representation of v (so 0.285 -> "0.29").
std::string format_2dp(double v);

} // namespace xlr::eval
