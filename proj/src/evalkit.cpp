#include "xlr/evalkit.hpp"

#include "xlr/error.hpp"
#include "xlr/hashing.hpp"
#include "xlr/jsonl.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>

namespace xlr::eval {

using json = nlohmann::ordered_json;

ConfusionMatrix confusion(std::span<const LabelDecision> pairs) {
    ConfusionMatrix cm;
    for (const auto& [label, decision] : pairs) {
        if ((label != 0 && label != 1) || (decision != 0 && decision != 1)) {
            throw Error(ErrorCode::invalid_argument, "labels and decisions must be 0 or 1");
        }
        if (label == 1) {
            ++(decision == 1 ? cm.tp : cm.fn);
        } else {
            ++(decision == 1 ? cm.fp : cm.tn);
        }
    }
    return cm;
}

Metrics metrics(const ConfusionMatrix& cm) {
    const std::size_t total = cm.total();
    if (total == 0) {
        throw Error(ErrorCode::invalid_argument, "metrics of an empty confusion matrix");
    }
    auto ratio = [](std::size_t num, std::size_t den) {
        return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
    };
    Metrics m;
    m.accuracy = ratio(cm.tp + cm.tn, total);
    m.precision = ratio(cm.tp, cm.tp + cm.fp);
    m.recall = ratio(cm.tp, cm.tp + cm.fn);
    // 2pr/(p+r) reduced to counts; zero exactly when p+r is zero.
    m.f1 = ratio(2 * cm.tp, 2 * cm.tp + cm.fp + cm.fn);
    return m;
}

Evaluation evaluate(model::Backend& backend, std::span<const ChangeRecord> test) {
    if (test.empty()) {
        throw Error(ErrorCode::invalid_argument, "evaluation needs a non-empty test set");
    }
    for (const auto& r : test) {
        if (r.origin != Origin::real) {
            throw Error(ErrorCode::guard, "real-only test set guard: record '" + r.id +
                                              "' is synthetic; models must be evaluated on real records only");
        }
    }
    const auto decisions = backend.predict_decisions(test);
    std::vector<LabelDecision> pairs;
    pairs.reserve(test.size());
    for (std::size_t i = 0; i < test.size(); ++i) {
        pairs.push_back({test[i].label, decisions[i]});
    }
    Evaluation e;
    e.cm = confusion(pairs);
    e.metrics = metrics(e.cm);
    return e;
}

std::string test_set_fingerprint(std::span<const ChangeRecord> test) {
    std::vector<std::string_view> ids;
    ids.reserve(test.size());
    for (const auto& r : test) {
        ids.push_back(r.id);
    }
    std::sort(ids.begin(), ids.end());
    std::string joined;
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (i > 0) {
            joined += '\n';
        }
        joined += ids[i];
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(joined)));
    return buf;
}

EvalReport compare(std::vector<ReportRow> rows, const std::string& fingerprint, json config) {
    if (rows.empty()) {
        throw Error(ErrorCode::invalid_argument, "a comparison needs at least one row");
    }
    for (const auto& row : rows) {
        if (row.fingerprint != fingerprint) {
            throw Error(ErrorCode::fingerprint_mismatch, "row '" + row.name + "' was evaluated on test set " +
                                                             row.fingerprint + ", expected " + fingerprint);
        }
    }
    EvalReport report;
    report.fingerprint = fingerprint;
    report.config = std::move(config);
    const Metrics& base = rows.front().metrics;
    for (const auto& row : rows) {
        report.deltas.push_back({row.metrics.accuracy - base.accuracy, row.metrics.precision - base.precision,
                                 row.metrics.recall - base.recall, row.metrics.f1 - base.f1});
    }
    report.rows = std::move(rows);
    return report;
}

std::string format_2dp(double v) {
    if (!std::isfinite(v)) {
        return "nan";
    }
    char buf[400]; // fixed notation of the smallest subnormal fits

    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v < 0 ? -v : v, std::chars_format::fixed);
    if (ec != std::errc{}) {
        return "nan";
    }
    const std::string_view s(buf, static_cast<std::size_t>(end - buf));
    const auto dot = s.find('.');
    const std::string_view int_part = s.substr(0, dot);
    const std::string_view frac = dot == std::string_view::npos ? std::string_view{} : s.substr(dot + 1);

    unsigned long long cents = 0;
    std::from_chars(int_part.data(), int_part.data() + int_part.size(), cents);
    cents *= 100;
    cents += frac.size() > 0 ? static_cast<unsigned long long>(frac[0] - '0') * 10 : 0;
    cents += frac.size() > 1 ? static_cast<unsigned long long>(frac[1] - '0') : 0;
    if (frac.size() > 2 && frac[2] >= '5') {
        ++cents;
    }
    char out[64];
    std::snprintf(out, sizeof out, "%s%llu.%02llu", (v < 0 && cents > 0) ? "-" : "", cents / 100, cents % 100);
    return out;
}

namespace {

json metrics_json(const Metrics& m) {
    return json{{"accuracy", m.accuracy}, {"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1}};
}

Metrics metrics_from_json(const json& j) {
    return {j.at("accuracy").get<double>(), j.at("precision").get<double>(), j.at("recall").get<double>(),
            j.at("f1").get<double>()};
}

} // namespace

std::string render_report(const EvalReport& report, ReportFormat format) {
    if (format == ReportFormat::markdown) {
        std::string out = "Training Data | Accuracy | Precision | Recall | F1\n--- | --- | --- | --- | ---\n";
        for (const auto& row : report.rows) {
            out += row.name.empty() ? std::string("(unnamed)") : row.name;
            for (double v : {row.metrics.accuracy, row.metrics.precision, row.metrics.recall, row.metrics.f1}) {
                out += " | " + format_2dp(v);
            }
            out += '\n';
        }
        return out;
    }

    json j;
    j["fingerprint"] = report.fingerprint;
    j["rows"] = json::array();
    for (const auto& row : report.rows) {
        json r;
        r["name"] = row.name;
        r["cm"] = json{{"tp", row.cm.tp}, {"fp", row.cm.fp}, {"fn", row.cm.fn}, {"tn", row.cm.tn}};
        r["metrics"] = metrics_json(row.metrics);
        j["rows"].push_back(std::move(r));
    }
    j["deltas"] = json::array();
    for (std::size_t i = 0; i < report.deltas.size(); ++i) {
        json d;
        d["name"] = i < report.rows.size() ? report.rows[i].name : std::string{};
        d.update(metrics_json(report.deltas[i]));
        j["deltas"].push_back(std::move(d));
    }
    j["config"] = report.config;
    return j.dump(2, ' ', false, json::error_handler_t::replace) + "\n";
}

EvalReport parse_report_json(std::string_view text) {
    EvalReport report;
    try {
        const json j = json::parse(text);
        report.fingerprint = j.at("fingerprint").get<std::string>();
        for (const auto& r : j.at("rows")) {
            ReportRow row;
            row.name = r.at("name").get<std::string>();
            const json& cm = r.at("cm");
            row.cm = {cm.at("tp").get<std::size_t>(), cm.at("fp").get<std::size_t>(), cm.at("fn").get<std::size_t>(),
                      cm.at("tn").get<std::size_t>()};
            row.metrics = metrics_from_json(r.at("metrics"));
            row.fingerprint = report.fingerprint;
            report.rows.push_back(std::move(row));
        }
        for (const auto& d : j.at("deltas")) {
            report.deltas.push_back(metrics_from_json(d));
        }
        if (auto it = j.find("config"); it != j.end()) {
            report.config = *it;
        }
    } catch (const json::exception& e) {
        throw Error(ErrorCode::json, std::string("malformed report JSON: ") + e.what());
    }
    return report;
}

} // namespace xlr::eval
