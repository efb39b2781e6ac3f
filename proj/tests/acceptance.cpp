// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.
#include "oracles.hpp"
#include "planted_fixture.hpp"
#include "test_util.hpp"

#include "commands.hpp"
#include "xlr/config.hpp"
#include "xlr/diffkit.hpp"
#include "xlr/evalkit.hpp"
#include "xlr/hashing.hpp"
#include "xlr/model.hpp"
#include "xlr/provider.hpp"
#include "xlr/translator.hpp"
#include "xlr/validator.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

using namespace xlr;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c);
    return buf;
}

fs::path fixture_config() { return fs::path(XLR_SOURCE_DIR) / "data/fixture/fixture.json"; }

int pipeline(const fs::path& workdir) {
    const std::string config = fixture_config().string();
    const std::string dir = workdir.string();
    const char* argv[] = {"xlr", "pipeline", "--config", config.c_str(), "--workdir", dir.c_str()};
    return cli::run(6, argv);
}

Outcome table_analogue() {
    const auto dir = test::scratch_dir("acceptance_pipeline");
    const auto start = std::chrono::steady_clock::now();
    const int code = pipeline(dir);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (code != 0) {
        return {false, "pipeline exited " + std::to_string(code)};
    }
    const auto report = eval::parse_report_json(test::read_file(dir / cli::kReportJson));
    const eval::ReportRow* real = nullptr;
    const eval::ReportRow* syn = nullptr;
    for (const auto& row : report.rows) {
        real = row.name == "Real C++" ? &row : real;
        syn = row.name == "Synthetic C++" ? &row : syn;
    }
    if (!real || !syn) {
        return {false, "report lacks the Real C++ / Synthetic C++ rows"};
    }
    const double gap = std::abs(syn->metrics.f1 - real->metrics.f1);
    return {gap <= 0.05 && secs < 30.0,
            fmt("real F1 %.4f, synthetic F1 %.4f, runtime %.2f s", real->metrics.f1, syn->metrics.f1, secs) +
                fmt(", |gap| %.4f (limit 0.05)", gap)};
}

Outcome label_preservation() {
    std::size_t emitted = 0;
    std::size_t bad = 0;
    const auto source = fixture::bundled_corpus();
    const CorpusStore store(source);
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        translate::MockProvider provider(0.1 * static_cast<double>(seed - 1), seed);
        translate::TranslateOptions options;
        options.max_concurrency = seed;
        const auto result = translate::translate_corpus(store, provider, options);
        for (const auto& s : result.records) {
            ++emitted;
            const ChangeRecord* src = s.source_id ? store.find(*s.source_id) : nullptr;
            if (!src || src->label != s.label || s.origin != Origin::synthetic) {
                ++bad;
            }
        }
    }
    return {bad == 0 && emitted > 0,
            std::to_string(emitted) + " synthetic records over 5 runs, " + std::to_string(bad) + " violations"};
}

Outcome metric_oracle() {
    Rng rng(derive_seed(1, "acceptance/metrics"));
    std::size_t mismatches = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = 1 + rng.below(500);
        std::vector<int> labels(n), decisions(n);
        std::vector<eval::LabelDecision> pairs;
        for (std::size_t i = 0; i < n; ++i) {
            labels[i] = static_cast<int>(rng.below(2));
            decisions[i] = static_cast<int>(rng.below(2));
            pairs.push_back({labels[i], decisions[i]});
        }
        const auto want = test::recount(labels, decisions);
        const auto cm = eval::confusion(pairs);
        const auto m = eval::metrics(cm);
        const double p = test::rational(want.tp, want.tp + want.fp);
        const double r = test::rational(want.tp, want.tp + want.fn);
        // 2pr/(p+r) with p = tp/(tp+fp), r = tp/(tp+fn) is exactly 2tp/(2tp+fp+fn).
        const double f1 = want.tp == 0 ? 0.0 : test::rational(2 * want.tp, 2 * want.tp + want.fp + want.fn);
        const bool ok = cm == eval::ConfusionMatrix{want.tp, want.fp, want.fn, want.tn} &&
                        m.accuracy == test::rational(want.tp + want.tn, n) && m.precision == p &&
                        m.recall == r && m.f1 == f1;
        mismatches += ok ? 0 : 1;
    }
    return {mismatches == 0, "1000 vectors, " + std::to_string(mismatches) + " mismatches"};
}

Outcome gradient_check() {
    constexpr std::size_t dim = 64;
    constexpr double h = 1e-5;
    Rng rng(derive_seed(1, "acceptance/gradient"));
    double worst = 0.0;
    for (int draw = 0; draw < 100; ++draw) {
        model::Hyperparams hp;
        hp.hash_dim = dim;
        hp.l2 = rng.uniform() * 0.05;
        auto m = model::ModelWeights::zeros(hp);
        for (double& w : m.weights) {
            w = rng.uniform() * 2.0 - 1.0;
        }
        m.bias = rng.uniform() - 0.5;
        std::vector<model::FeatureVector> xs(1 + rng.below(10));
        for (auto& x : xs) {
            x.hash_dim = dim;
            std::map<std::uint32_t, double> entries;
            for (std::size_t k = 0, n = 1 + rng.below(8); k < n; ++k) {
                entries[static_cast<std::uint32_t>(rng.below(dim))] = rng.uniform() * 2.0 - 1.0;
            }
            x.entries.assign(entries.begin(), entries.end());
        }
        std::vector<model::Example> batch;
        for (const auto& x : xs) {
            batch.push_back({&x, static_cast<int>(rng.below(2))});
        }
        const auto g = model::loss_and_grad(m, batch);
        double diff = 0.0, na = 0.0, nn = 0.0;
        for (std::size_t i = 0; i <= dim; ++i) {
            double& p = i < dim ? m.weights[i] : m.bias;
            const double saved = p;
            p = saved + h;
            const double up = model::mean_loss(m, batch);
            p = saved - h;
            const double down = model::mean_loss(m, batch);
            p = saved;
            const double numeric = (up - down) / (2.0 * h);
            const double analytic = i < dim ? g.grad_weights[i] : g.grad_bias;
            diff += (analytic - numeric) * (analytic - numeric);
            na += analytic * analytic;
            nn += numeric * numeric;
        }
        worst = std::max(worst, std::sqrt(diff) / std::max(std::sqrt(na) + std::sqrt(nn), 1e-12));
    }
    return {worst < 1e-5, fmt("100 draws, worst relative error %.3g (limit 1e-5)", worst)};
}

Outcome diff_round_trip() {
    Rng rng(derive_seed(1, "acceptance/diff"));
    std::size_t failures = 0;
    for (int i = 0; i < 500; ++i) {
        const auto c = test::random_diff_case(rng);
        try {
            const auto text = diff::render(c.diff);
            const bool ok = diff::parse_unified_diff(text) == c.diff &&
                            diff::apply(c.before.str(), c.diff) == c.after.str() &&
                            diff::apply(c.after.str(), diff::inverse(c.diff)) == c.before.str();
            failures += ok ? 0 : 1;
        } catch (const std::exception&) {
            ++failures;
        }
    }
    return {failures == 0, "500 generated diffs, " + std::to_string(failures) + " failures"};
}

Outcome fault_injection() {
    constexpr double rate = 0.1;
    constexpr std::uint64_t seed = 77;
    const auto source = fixture::planted_records({"java", 1000, "fi", 0.0, 0.0, 5});
    translate::MockProvider provider(rate, seed);
    translate::TranslateOptions options;
    options.max_concurrency = 4;
    const auto result = translate::translate_corpus(CorpusStore(source), provider, options);
    if (result.records.size() != source.size()) {
        return {false, "only " + std::to_string(result.records.size()) + " of 1000 records translated"};
    }
    const auto filtered = validate::filter_corpus(result.records, validate::default_ruleset("cpp"));
    std::set<std::string> rejected_unbalanced;
    std::set<std::string> rejected_any;
    for (const auto& r : filtered.rejected) {
        rejected_any.insert(*r.record.source_id);
        if (r.verdict.has(validate::Rule::unbalanced)) {
            rejected_unbalanced.insert(*r.record.source_id);
        }
    }
    std::size_t corrupted = 0, missed = 0, false_rejections = 0;
    for (const auto& s : source) {
        if (translate::mock_corrupts(s.id, rate, seed)) {
            ++corrupted;
            missed += rejected_unbalanced.count(s.id) ? 0 : 1;
        } else {
            false_rejections += rejected_any.count(s.id);
        }
    }
    return {missed == 0 && false_rejections == 0 && corrupted > 0,
            std::to_string(corrupted) + " corrupted, " + std::to_string(missed) + " missed, " +
                std::to_string(false_rejections) + " false rejections of " + std::to_string(1000 - corrupted) +
                " clean"};
}

Outcome determinism() {
    const auto a = test::scratch_dir("acceptance_determinism_a");
    const auto b = test::scratch_dir("acceptance_determinism_b");
    if (pipeline(a) != 0 || pipeline(b) != 0) {
        return {false, "pipeline failed"};
    }
    const auto ja = test::read_file(a / cli::kReportJson);
    const auto jb = test::read_file(b / cli::kReportJson);
    return {ja == jb, ja == jb ? "two runs, report.json byte-identical (" + std::to_string(ja.size()) + " bytes)"
                               : "report.json differs between runs"};
}

Outcome report_fidelity() {
    const auto report = eval::compare({{"Real C++", {}, {0.65, 0.64, 0.65, 0.64}, "t"},
                                       {"Synthetic C++", {}, {0.65, 0.65, 0.68, 0.66}, "t"}},
                                      "t");
    const auto md = eval::render_report(report, eval::ReportFormat::markdown);
    const std::string header = "Training Data | Accuracy | Precision | Recall | F1\n";
    const bool ok = md.rfind(header, 0) == 0 && md.find("\nReal C++ | 0.65 | 0.64 | 0.65 | 0.64\n") != std::string::npos &&
                    md.find("\nSynthetic C++ | 0.65 | 0.65 | 0.68 | 0.66\n") != std::string::npos;
    return {ok, ok ? "header and both rows byte-exact" : "rendered:\n" + md};
}

} // namespace

int main() {
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
        {"1 scaled table analogue", table_analogue},
        {"2 label preservation", label_preservation},
        {"3 metric oracle", metric_oracle},
        {"4 gradient check", gradient_check},
        {"5 diff round trip", diff_round_trip},
        {"6 validator fault injection", fault_injection},
        {"7 determinism", determinism},
        {"8 report fidelity", report_fidelity},
    };
    int failed = 0;
    for (const auto& [name, check] : criteria) {
        Outcome o;
        try {
            o = check();
        } catch (const std::exception& e) {
            o = {false, std::string("threw: ") + e.what()};
        }
        std::printf("%s  criterion %s: %s\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str());
        std::fflush(stdout);
        failed += o.pass ? 0 : 1;
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
