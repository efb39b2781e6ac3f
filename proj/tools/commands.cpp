#include "commands.hpp"

#include "xlr/backend.hpp"
#include "xlr/corpus.hpp"
#include "xlr/error.hpp"
#include "xlr/evalkit.hpp"
#include "xlr/model.hpp"
#include "xlr/translator.hpp"
#include "xlr/validator.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>

namespace xlr::cli {

namespace fs = std::filesystem;

namespace {

void log(const std::string& msg) { std::cerr << "xlr: " << msg << '\n'; }

fs::path workfile(const RunConfig& c, const char* name) { return c.paths.workdir / name; }

void ensure_workdir(const RunConfig& c) {
    std::error_code ec;
    fs::create_directories(c.paths.workdir, ec);
    if (ec) {
        throw Error(ErrorCode::io, "cannot create workdir '" + c.paths.workdir.string() + "': " + ec.message());
    }
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << text;
    if (!out) {
        throw Error(ErrorCode::io, "cannot write '" + path.string() + "'");
    }
}

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorCode::io, "cannot read '" + path.string() + "'");
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

// Intermediate files were checked when first ingested.
CorpusStore read_work_corpus(const fs::path& path) { return ingest(path, false); }

std::string row_name(std::string_view model_name, const std::string& dst_lang) {
    const std::string dst = translate::language_display_name(dst_lang);
    if (model_name == "real") {
        return "Real " + dst;
    }
    if (model_name == "synthetic") {
        return "Synthetic " + dst;
    }
    return std::string(model_name);
}

std::vector<ChangeRecord> real_train_set(const RunConfig& c) {
    const auto store = read_work_corpus(workfile(c, kCorpusFile));
    return select(store, {c.dst_lang, Origin::real, std::optional<Split>{Split::train}, std::nullopt});
}

std::vector<ChangeRecord> synthetic_train_set(const RunConfig& c) {
    const auto store = read_work_corpus(workfile(c, kSyntheticFile));
    return select(store, {c.dst_lang, Origin::synthetic, std::nullopt, std::nullopt});
}

std::vector<ChangeRecord> default_test_set(const RunConfig& c) {
    const auto store = read_work_corpus(workfile(c, kCorpusFile));
    return select(store, {c.dst_lang, Origin::real, std::optional<Split>{Split::test}, std::nullopt});
}

void log_train(const std::string& name, std::size_t n, const model::TrainReport& report) {
    std::string losses;
    for (double l : report.epoch_loss) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%s%.4f", losses.empty() ? "" : ", ", l);
        losses += buf;
    }
    log("trained '" + name + "' on " + std::to_string(n) + " record(s); epoch loss [" + losses + "]");
}

void write_report(const RunConfig& c, const eval::EvalReport& report, bool markdown) {
    write_text(workfile(c, kReportJson), eval::render_report(report, eval::ReportFormat::json));
    if (markdown) {
        const std::string md = eval::render_report(report, eval::ReportFormat::markdown);
        write_text(workfile(c, kReportMarkdown), md);
        if (!c.paths.report_out.empty()) {
            write_text(c.paths.report_out, md);
        }
    }
}

} // namespace

void run_ingest(const RunConfig& c, const std::optional<fs::path>& in) {
    const fs::path src = in ? *in : c.paths.corpus_in;
    if (src.empty()) {
        throw Error(ErrorCode::invalid_argument, "ingest needs an input corpus (--in or paths.corpus_in)");
    }
    ensure_workdir(c);
    std::vector<IngestRejection> rejected;
    const auto store = ingest(src, c.strict, &rejected);
    for (const auto& r : rejected) {
        log("rejected line " + std::to_string(r.line) + " ('" + r.id + "'): " + r.reason);
    }
    write_jsonl(store.records(), workfile(c, kCorpusFile));
    log("ingested " + std::to_string(store.size()) + " record(s) (" + std::to_string(store.count_label(1)) +
        " need review, " + std::to_string(store.count_label(0)) + " do not); rejected " +
        std::to_string(rejected.size()));
}

void run_split(const RunConfig& c, const std::optional<fs::path>& in, const std::string& scope, bool overwrite) {
    ensure_workdir(c);
    const auto store = read_work_corpus(in ? *in : workfile(c, kCorpusFile));
    RecordFilter filter;
    filter.origin = Origin::real;
    if (scope != "all") {
        filter.language = scope;
    }
    const auto chosen = select(store, filter);
    if (chosen.empty()) {
        throw Error(ErrorCode::invalid_argument, "no real records with language '" + scope + "' to split");
    }
    const auto split_part = split(CorpusStore(chosen), c.test_fraction, c.split_seed(), overwrite);
    const auto merged = merge_updates(store, split_part.records());
    write_jsonl(merged.records(), workfile(c, kCorpusFile));

    std::size_t n_test = 0;
    for (const auto& r : split_part.records()) {
        n_test += r.split == Split::test ? 1 : 0;
    }
    log("split " + std::to_string(split_part.size()) + " '" + scope + "' record(s): " +
        std::to_string(split_part.size() - n_test) + " train, " + std::to_string(n_test) + " test");
}

void run_translate(const RunConfig& c, const std::optional<fs::path>& in) {
    ensure_workdir(c);
    const auto store = read_work_corpus(in ? *in : workfile(c, kCorpusFile));
    const auto provider_cfg = c.resolved_provider();
    auto provider = translate::make_provider(provider_cfg);

    translate::TranslateOptions options;
    options.src_lang = c.src_lang;
    options.dst_lang = c.dst_lang;
    options.retry = provider_cfg.retry;
    options.max_concurrency = provider_cfg.max_concurrency;
    const auto result = translate::translate_corpus(store, *provider, options);

    for (const auto& f : result.failures) {
        log(std::string(f.provider_failure ? "provider failed" : "inconsistent reply") + " for '" + f.source_id +
            "': " + f.message);
    }
    write_jsonl(result.records, workfile(c, kSyntheticFile));
    const auto& s = result.stats;
    log("translated " + c.src_lang + " -> " + c.dst_lang + ": attempted " + std::to_string(s.attempted) +
        ", succeeded " + std::to_string(s.succeeded) + ", provider_failed " + std::to_string(s.provider_failed) +
        ", inconsistent " + std::to_string(s.inconsistent));
}

void run_validate(const RunConfig& c, const std::optional<fs::path>& in) {
    ensure_workdir(c);
    const auto store = read_work_corpus(in ? *in : workfile(c, kSyntheticFile));
    const validate::Ruleset rules{c.resolved_denylist()};
    const auto result = validate::filter_corpus(store.records(), rules);

    write_jsonl(result.kept, workfile(c, kSyntheticFile));
    validate::write_rejection_report(result.rejected, workfile(c, kRejectedFile));

    std::map<std::string_view, std::size_t> by_rule;
    for (const auto& r : result.rejected) {
        ++by_rule[validate::to_string(r.verdict.violations.front().rule)];
    }
    std::string summary;
    for (const auto& [rule, n] : by_rule) {
        summary += " " + std::string(rule) + "=" + std::to_string(n);
    }
    log("validated " + std::to_string(store.size()) + " synthetic record(s): kept " +
        std::to_string(result.kept.size()) + ", rejected " + std::to_string(result.rejected.size()) + summary);
}

void run_train(const RunConfig& c, TrainData data) {
    ensure_workdir(c);
    const fs::path model_path = workfile(c, kModelFile);
    model::ModelBundle bundle;
    if (data != TrainData::both && fs::exists(model_path)) {
        bundle = model::load_bundle(model_path);
    }
    const auto hp = c.resolved_hyperparams();

    auto train_one = [&](const std::string& name, const std::vector<ChangeRecord>& records) {
        if (records.empty()) {
            throw Error(ErrorCode::invalid_argument,
                        "no " + name + " training records for '" + c.dst_lang + "'; run the earlier stages first");
        }
        model::TrainReport report;
        bundle[name] = model::train_native(records, hp, &report, c.threshold);
        log_train(name, records.size(), report);
    };
    if (data != TrainData::synthetic) {
        train_one("real", real_train_set(c));
    }
    if (data != TrainData::real) {
        train_one("synthetic", synthetic_train_set(c));
    }
    model::save_bundle(bundle, model_path);
}

namespace {

std::vector<std::string> ordered_model_names(const model::ModelBundle& bundle) {
    std::vector<std::string> names;
    for (const char* known : {"real", "synthetic"}) {
        if (bundle.contains(known)) {
            names.emplace_back(known);
        }
    }
    for (const auto& [name, m] : bundle) {
        if (name != "real" && name != "synthetic") {
            names.push_back(name);
        }
    }
    return names;
}

} // namespace

void run_evaluate(const RunConfig& c, const std::optional<fs::path>& test_path) {
    ensure_workdir(c);
    std::vector<ChangeRecord> test;
    if (test_path) {
        const auto store = read_work_corpus(*test_path);
        test.assign(store.records().begin(), store.records().end());
    } else {
        test = default_test_set(c);
    }
    if (test.empty()) {
        throw Error(ErrorCode::invalid_argument, "the test set is empty; run split first");
    }
    const auto bundle = model::load_bundle(workfile(c, kModelFile));
    const std::string fingerprint = eval::test_set_fingerprint(test);

    std::vector<eval::ReportRow> rows;
    for (const auto& name : ordered_model_names(bundle)) {
        model::NativeBackend backend(bundle.at(name));
        const auto e = eval::evaluate(backend, test);
        rows.push_back({row_name(name, c.dst_lang), e.cm, e.metrics, fingerprint});
        log("evaluated '" + name + "' on " + std::to_string(test.size()) + " test record(s): f1 " +
            eval::format_2dp(e.metrics.f1));
    }
    write_report(c, eval::compare(std::move(rows), fingerprint, config_snapshot(c)), false);
}

void run_compare(const RunConfig& c, const std::vector<fs::path>& reports) {
    ensure_workdir(c);
    const std::vector<fs::path> inputs = reports.empty() ? std::vector<fs::path>{workfile(c, kReportJson)} : reports;
    std::vector<eval::ReportRow> rows;
    std::string fingerprint;
    nlohmann::ordered_json config;
    for (const auto& p : inputs) {
        auto report = eval::parse_report_json(read_text(p));
        if (fingerprint.empty()) {
            fingerprint = report.fingerprint;
            config = report.config;
        }
        for (auto& row : report.rows) {
            rows.push_back(std::move(row));
        }
    }
    write_report(c, eval::compare(std::move(rows), fingerprint, std::move(config)), true);
    log("wrote " + workfile(c, kReportMarkdown).string());
}

namespace {

// Train and evaluate through an external backend process, one fresh
// session per training corpus.
void train_and_evaluate_external(const RunConfig& c) {
    const auto test = default_test_set(c);
    const std::string fingerprint = eval::test_set_fingerprint(test);
    const auto hp = c.resolved_hyperparams();
    std::vector<eval::ReportRow> rows;
    for (const char* name : {"real", "synthetic"}) {
        const auto train = std::string(name) == "real" ? real_train_set(c) : synthetic_train_set(c);
        model::ExternalBackend backend(c.backend, c.threshold);
        backend.train(train, hp);
        const auto e = eval::evaluate(backend, test);
        backend.shutdown();
        rows.push_back({row_name(name, c.dst_lang), e.cm, e.metrics, fingerprint});
        log("external backend '" + std::string(name) + "': f1 " + eval::format_2dp(e.metrics.f1));
    }
    write_report(c, eval::compare(std::move(rows), fingerprint, config_snapshot(c)), false);
}

} // namespace

void run_pipeline(const RunConfig& c) {
    run_ingest(c, std::nullopt);
    run_split(c, std::nullopt, c.dst_lang, false);
    run_translate(c, std::nullopt);
    run_validate(c, std::nullopt);
    if (c.backend.kind == model::BackendKind::external) {
        train_and_evaluate_external(c);
    } else {
        run_train(c, TrainData::both);
        run_evaluate(c, std::nullopt);
    }
    run_compare(c, {});
}

// ---------------------------------------------------------------------------
// Command line

namespace {

struct Overrides {
    std::string config;
    std::string in;
    std::vector<std::string> inputs;
    std::string workdir;
    std::string test;
    std::uint64_t seed = 0;
    double test_frac = 0.0;
    std::string src_lang;
    std::string dst_lang;
    std::string scope;
    bool overwrite = false;
    bool no_strict = false;
    std::string provider;
    std::string endpoint;
    std::string model_name;
    std::size_t max_concurrency = 1;
    std::size_t max_attempts = 1;
    double base_delay = 0.0;
    double timeout = 0.0;
    double corruption_rate = 0.0;
    std::vector<std::string> denylist;
    std::string data = "both";
    double lr = 0.0;
    std::size_t epochs = 0;
    double l2 = 0.0;
    std::size_t hash_dim = 0;
    double threshold = 0.0;

    // Every subcommand registers its own copy of a shared option; only the
    // parsed subcommand's copies can carry a count.
    std::map<std::string, std::vector<CLI::Option*>> opts;

    void track(const std::string& name, CLI::Option* opt) { opts[name].push_back(opt); }

    bool given(const std::string& name) const {
        auto it = opts.find(name);
        if (it == opts.end()) {
            return false;
        }
        return std::any_of(it->second.begin(), it->second.end(),
                           [](const CLI::Option* opt) { return opt->count() > 0; });
    }
};

void add_common(CLI::App* sub, Overrides& o) {
    o.track("config", sub->add_option("--config", o.config, "JSON run configuration"));
    o.track("workdir", sub->add_option("--workdir", o.workdir, "Directory for stage outputs"));
    o.track("seed", sub->add_option("--seed", o.seed, "Master seed"));
    o.track("src-lang", sub->add_option("--src-lang", o.src_lang, "Source language tag"));
    o.track("dst-lang", sub->add_option("--dst-lang", o.dst_lang, "Destination language tag"));
}

void add_provider(CLI::App* sub, Overrides& o) {
    o.track("provider",
            sub->add_option("--provider", o.provider, "mock or http")->check(CLI::IsMember({"mock", "http"})));
    o.track("endpoint", sub->add_option("--endpoint", o.endpoint, "Base URL of an OpenAI-compatible API"));
    o.track("model", sub->add_option("--model", o.model_name, "Model name sent to the provider"));
    o.track("max-concurrency",
            sub->add_option("--max-concurrency", o.max_concurrency, "Requests in flight")->check(CLI::PositiveNumber));
    o.track("max-attempts",
            sub->add_option("--max-attempts", o.max_attempts, "Attempts per record")->check(CLI::PositiveNumber));
    o.track("base-delay", sub->add_option("--base-delay", o.base_delay, "Backoff base delay (s)"));
    o.track("timeout", sub->add_option("--timeout", o.timeout, "Request timeout (s)"));
    o.track("corruption-rate", sub->add_option("--corruption-rate", o.corruption_rate, "Mock provider corruption probability")
            ->check(CLI::Range(0.0, 1.0)));
}

void add_hyperparams(CLI::App* sub, Overrides& o) {
    o.track("lr", sub->add_option("--lr", o.lr, "SGD learning rate"));
    o.track("epochs", sub->add_option("--epochs", o.epochs, "SGD epochs"));
    o.track("l2", sub->add_option("--l2", o.l2, "L2 penalty"));
    o.track("hash-dim", sub->add_option("--hash-dim", o.hash_dim, "Feature hashing dimension (power of two)"));
    o.track("threshold", sub->add_option("--threshold", o.threshold, "Decision threshold"));
}

RunConfig resolve_config(const Overrides& o) {
    RunConfig c = o.config.empty() ? RunConfig{} : load_config(o.config);
    if (o.given("workdir")) c.paths.workdir = o.workdir;
    if (o.given("seed")) c.seed = o.seed;
    if (o.given("src-lang")) c.src_lang = o.src_lang;
    if (o.given("dst-lang")) c.dst_lang = o.dst_lang;
    if (o.given("test-frac")) c.test_fraction = o.test_frac;
    if (o.given("no-strict")) c.strict = false;
    if (o.given("provider")) {
        c.provider.kind = o.provider == "http" ? translate::ProviderKind::http : translate::ProviderKind::mock;
    }
    if (o.given("endpoint")) c.provider.endpoint = o.endpoint;
    if (o.given("model")) c.provider.model = o.model_name;
    if (o.given("max-concurrency")) c.provider.max_concurrency = o.max_concurrency;
    if (o.given("max-attempts")) c.provider.retry.max_attempts = o.max_attempts;
    if (o.given("base-delay")) c.provider.retry.base_delay = o.base_delay;
    if (o.given("timeout")) c.provider.timeout = o.timeout;
    if (o.given("corruption-rate")) c.provider.corruption_rate = o.corruption_rate;
    if (o.given("denylist")) c.denylist = o.denylist;
    if (o.given("lr")) c.hyperparams.learning_rate = o.lr;
    if (o.given("epochs")) c.hyperparams.epochs = o.epochs;
    if (o.given("l2")) c.hyperparams.l2 = o.l2;
    if (o.given("hash-dim")) c.hyperparams.hash_dim = o.hash_dim;
    if (o.given("threshold")) c.threshold = o.threshold;
    c.validate();
    return c;
}

std::optional<fs::path> opt_path(const std::string& s) {
    return s.empty() ? std::nullopt : std::optional<fs::path>(s);
}

} // namespace

int run(int argc, const char* const* argv) {
    CLI::App app{"xlr: synthesize labeled code-review data by cross-language translation, then train and compare "
                 "review classifiers on real vs. synthetic data"};
    app.name("xlr");
    app.require_subcommand(1, 1);
    Overrides o;
    std::function<void()> action;

    auto* ingest_cmd = app.add_subcommand("ingest", "Load a JSONL corpus into <workdir>/corpus.jsonl");
    add_common(ingest_cmd, o);
    ingest_cmd->add_option("--in", o.in, "Input corpus (JSONL)");
    o.track("no-strict", ingest_cmd->add_flag("--no-strict", o.no_strict, "Keep records whose diff does not apply"));
    ingest_cmd->callback([&] {
        action = [&] { run_ingest(resolve_config(o), opt_path(o.in)); };
    });

    auto* split_cmd = app.add_subcommand("split", "Stratified train/test split of the real destination records");
    add_common(split_cmd, o);
    split_cmd->add_option("--in", o.in, "Corpus to split (default <workdir>/corpus.jsonl)");
    o.track("test-frac",
            split_cmd->add_option("--test-frac", o.test_frac, "Test fraction")->check(CLI::Range(0.0, 1.0)));
    split_cmd->add_option("--lang", o.scope, "Language to split, or 'all' (default: destination language)");
    split_cmd->add_flag("--overwrite", o.overwrite, "Re-split records that already have a split");
    split_cmd->callback([&] {
        action = [&] {
            const RunConfig c = resolve_config(o);
            run_split(c, opt_path(o.in), o.scope.empty() ? c.dst_lang : o.scope, o.overwrite);
        };
    });

    auto* translate_cmd = app.add_subcommand("translate", "Translate source-language records into synthetic.jsonl");
    add_common(translate_cmd, o);
    add_provider(translate_cmd, o);
    translate_cmd->add_option("--in", o.in, "Corpus (default <workdir>/corpus.jsonl)");
    translate_cmd->callback([&] {
        action = [&] { run_translate(resolve_config(o), opt_path(o.in)); };
    });

    auto* validate_cmd = app.add_subcommand("validate", "Filter synthetic.jsonl; write rejected.jsonl");
    add_common(validate_cmd, o);
    validate_cmd->add_option("--in", o.in, "Synthetic corpus (default <workdir>/synthetic.jsonl)");
    o.track("denylist", validate_cmd->add_option("--deny", o.denylist, "Leakage fragment (repeatable)"));
    validate_cmd->callback([&] {
        action = [&] { run_validate(resolve_config(o), opt_path(o.in)); };
    });

    auto* train_cmd = app.add_subcommand("train", "Train native models into model.bin");
    add_common(train_cmd, o);
    add_hyperparams(train_cmd, o);
    train_cmd->add_option("--data", o.data, "real, synthetic or both")
        ->check(CLI::IsMember({"real", "synthetic", "both"}));
    train_cmd->callback([&] {
        action = [&] {
            const TrainData d = o.data == "real"        ? TrainData::real
                                : o.data == "synthetic" ? TrainData::synthetic
                                                        : TrainData::both;
            run_train(resolve_config(o), d);
        };
    });

    auto* evaluate_cmd = app.add_subcommand("evaluate", "Evaluate every model in model.bin on the real test set");
    add_common(evaluate_cmd, o);
    evaluate_cmd->add_option("--test", o.test, "Explicit test set (JSONL); must contain real records only");
    evaluate_cmd->callback([&] {
        action = [&] { run_evaluate(resolve_config(o), opt_path(o.test)); };
    });

    auto* compare_cmd = app.add_subcommand("compare", "Merge evaluation reports; write report.json and report.md");
    add_common(compare_cmd, o);
    compare_cmd->add_option("--in", o.inputs, "Report JSON files (default <workdir>/report.json)");
    compare_cmd->callback([&] {
        action = [&] {
            std::vector<fs::path> inputs(o.inputs.begin(), o.inputs.end());
            run_compare(resolve_config(o), inputs);
        };
    });

    auto* pipeline_cmd = app.add_subcommand("pipeline", "ingest, split, translate, validate, train, evaluate, compare");
    add_common(pipeline_cmd, o);
    add_provider(pipeline_cmd, o);
    add_hyperparams(pipeline_cmd, o);
    o.track("test-frac",
            pipeline_cmd->add_option("--test-frac", o.test_frac, "Test fraction")->check(CLI::Range(0.0, 1.0)));
    pipeline_cmd->callback([&] {
        action = [&] { run_pipeline(resolve_config(o)); };
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, std::cerr, std::cerr);
        return code == 0 ? 0 : 2;
    }

    try {
        action();
    } catch (const Error& e) {
        log(std::string("error [") + std::string(to_string(e.code())) + "]: " + e.what());
        return 1;
    } catch (const std::exception& e) {
        log(std::string("error: ") + e.what());
        return 1;
    }
    return 0;
}

} // namespace xlr::cli
