#include "xlr/config.hpp"

#include "xlr/error.hpp"
#include "xlr/hashing.hpp"
#include "xlr/validator.hpp"

#include <bit>
#include <cmath>
#include <fstream>
#include <set>

namespace xlr {

using json = nlohmann::ordered_json;

std::uint64_t RunConfig::split_seed() const noexcept { return derive_seed(seed, "corpus/split"); }
std::uint64_t RunConfig::mock_seed() const noexcept { return derive_seed(seed, "translate/mock"); }
std::uint64_t RunConfig::retry_jitter_seed() const noexcept {
    return jitter_seed ? *jitter_seed : derive_seed(seed, "translate/jitter");
}
std::uint64_t RunConfig::train_seed() const noexcept { return derive_seed(seed, "model/train"); }

translate::ProviderConfig RunConfig::resolved_provider() const {
    translate::ProviderConfig p = provider;
    p.mock_seed = mock_seed();
    p.retry.jitter_seed = retry_jitter_seed();
    return p;
}

model::Hyperparams RunConfig::resolved_hyperparams() const {
    model::Hyperparams hp = hyperparams;
    hp.seed = train_seed();
    return hp;
}

std::vector<std::string> RunConfig::resolved_denylist() const {
    return denylist ? *denylist : validate::default_ruleset(dst_lang).denylist;
}

void RunConfig::validate() const {
    auto bad = [](const std::string& what) { throw Error(ErrorCode::invalid_argument, "config: " + what); };
    if (!(test_fraction >= 0.0 && test_fraction <= 1.0)) {
        bad("test_fraction must lie in [0, 1]");
    }
    if (src_lang.empty() || dst_lang.empty() || src_lang == dst_lang) {
        bad("src_lang and dst_lang must be distinct, non-empty language tags");
    }
    if (!(threshold > 0.0 && threshold < 1.0)) {
        bad("threshold must lie in (0, 1)");
    }
    if (!std::has_single_bit(hyperparams.hash_dim) || hyperparams.hash_dim > (std::size_t{1} << 32)) {
        bad("hash_dim must be a power of two no larger than 2^32");
    }
    if (!(hyperparams.learning_rate > 0.0) || !std::isfinite(hyperparams.learning_rate)) {
        bad("learning_rate must be positive");
    }
    if (!(hyperparams.l2 >= 0.0) || !std::isfinite(hyperparams.l2)) {
        bad("l2 must be non-negative");
    }
    if (backend.kind == model::BackendKind::external && backend.command.empty()) {
        bad("external backend needs a command");
    }
    translate::validate(resolved_provider());
}

namespace {

void check_keys(const json& j, std::string_view where, std::initializer_list<std::string_view> allowed) {
    if (!j.is_object()) {
        throw Error(ErrorCode::schema, "config: '" + std::string(where) + "' must be an object");
    }
    const std::set<std::string_view> ok(allowed);
    for (const auto& [key, value] : j.items()) {
        if (!ok.contains(key)) {
            throw Error(ErrorCode::schema, "config: unknown key '" + key + "' in " + std::string(where));
        }
    }
}

template <class T>
void read(const json& j, std::string_view key, T& out) {
    if (auto it = j.find(key); it != j.end()) {
        try {
            out = it->get<T>();
        } catch (const json::exception&) {
            throw Error(ErrorCode::schema, "config: key '" + std::string(key) + "' has the wrong type");
        }
    }
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
    if (p.empty()) {
        return {};
    }
    const std::filesystem::path path(p);
    return path.is_absolute() ? path : base / path;
}

} // namespace

RunConfig config_from_json(const json& j, const std::filesystem::path& base_dir) {
    check_keys(j, "config", {"seed", "test_fraction", "src_lang", "dst_lang", "strict", "provider", "hyperparams",
                             "denylist", "paths", "backend"});
    RunConfig c;
    read(j, "seed", c.seed);
    read(j, "test_fraction", c.test_fraction);
    read(j, "src_lang", c.src_lang);
    read(j, "dst_lang", c.dst_lang);
    read(j, "strict", c.strict);

    if (auto it = j.find("provider"); it != j.end()) {
        const json& p = *it;
        check_keys(p, "provider",
                   {"kind", "endpoint", "model", "max_concurrency", "retry", "timeout", "corruption_rate"});
        std::string kind = "mock";
        read(p, "kind", kind);
        if (kind == "mock") {
            c.provider.kind = translate::ProviderKind::mock;
        } else if (kind == "http") {
            c.provider.kind = translate::ProviderKind::http;
        } else {
            throw Error(ErrorCode::schema, "config: provider.kind must be \"mock\" or \"http\"");
        }
        read(p, "endpoint", c.provider.endpoint);
        read(p, "model", c.provider.model);
        read(p, "max_concurrency", c.provider.max_concurrency);
        read(p, "timeout", c.provider.timeout);
        read(p, "corruption_rate", c.provider.corruption_rate);
        if (auto r = p.find("retry"); r != p.end()) {
            check_keys(*r, "provider.retry", {"max_attempts", "base_delay", "jitter_seed"});
            read(*r, "max_attempts", c.provider.retry.max_attempts);
            read(*r, "base_delay", c.provider.retry.base_delay);
            if (r->contains("jitter_seed")) {
                std::uint64_t s = 0;
                read(*r, "jitter_seed", s);
                c.jitter_seed = s;
            }
        }
    }

    if (auto it = j.find("hyperparams"); it != j.end()) {
        check_keys(*it, "hyperparams", {"learning_rate", "epochs", "l2", "hash_dim", "threshold"});
        read(*it, "learning_rate", c.hyperparams.learning_rate);
        read(*it, "epochs", c.hyperparams.epochs);
        read(*it, "l2", c.hyperparams.l2);
        read(*it, "hash_dim", c.hyperparams.hash_dim);
        read(*it, "threshold", c.threshold);
    }

    if (auto it = j.find("denylist"); it != j.end()) {
        std::vector<std::string> d;
        read(j, "denylist", d);
        c.denylist = std::move(d);
    }

    if (auto it = j.find("paths"); it != j.end()) {
        check_keys(*it, "paths", {"corpus_in", "workdir", "report_out"});
        std::string corpus_in, workdir, report_out;
        read(*it, "corpus_in", corpus_in);
        read(*it, "workdir", workdir);
        read(*it, "report_out", report_out);
        c.paths.corpus_in = resolve(base_dir, corpus_in);
        if (!workdir.empty()) {
            c.paths.workdir = resolve(base_dir, workdir);
        }
        c.paths.report_out = resolve(base_dir, report_out);
    }

    if (auto it = j.find("backend"); it != j.end()) {
        check_keys(*it, "backend", {"kind", "command", "working_dir", "timeout"});
        std::string kind = "native";
        read(*it, "kind", kind);
        if (kind == "native") {
            c.backend.kind = model::BackendKind::native;
        } else if (kind == "external") {
            c.backend.kind = model::BackendKind::external;
        } else {
            throw Error(ErrorCode::schema, "config: backend.kind must be \"native\" or \"external\"");
        }
        read(*it, "command", c.backend.command);
        std::string wd;
        read(*it, "working_dir", wd);
        c.backend.working_dir = resolve(base_dir, wd);
        double timeout = 120.0;
        read(*it, "timeout", timeout);
        c.backend.timeout = std::chrono::milliseconds(static_cast<long long>(timeout * 1000.0));
    }
    return c;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorCode::io, "cannot read config '" + path.string() + "'");
    }
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::json, "config '" + path.string() + "': " + e.what());
    }
    return config_from_json(j, path.parent_path());
}

json config_snapshot(const RunConfig& c) {
    const auto provider = c.resolved_provider();
    const auto hp = c.resolved_hyperparams();
    json j;
    j["seed"] = c.seed;
    j["test_fraction"] = c.test_fraction;
    j["src_lang"] = c.src_lang;
    j["dst_lang"] = c.dst_lang;
    j["strict"] = c.strict;
    j["provider"] = json{{"kind", provider.kind == translate::ProviderKind::mock ? "mock" : "http"},
                         {"model", provider.model},
                         {"corruption_rate", provider.corruption_rate},
                         {"max_attempts", provider.retry.max_attempts}};
    j["hyperparams"] = json{{"learning_rate", hp.learning_rate}, {"epochs", hp.epochs}, {"l2", hp.l2},
                            {"hash_dim", hp.hash_dim},           {"seed", hp.seed},     {"threshold", c.threshold}};
    j["denylist"] = c.resolved_denylist();
    j["backend"] = c.backend.kind == model::BackendKind::native ? "native" : "external";
    return j;
}

} // namespace xlr
