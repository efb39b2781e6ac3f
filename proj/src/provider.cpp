#include "xlr/provider.hpp"

#include "xlr/hashing.hpp"
#include "xlr/jsonl.hpp"

#include <array>
#include <cmath>
#include <cstdlib>
#include <thread>

#include <httplib.h>
#include <json.hpp>

namespace xlr::translate {

void validate(const ProviderConfig& config) {
    auto bad = [](const std::string& what) { throw Error(ErrorCode::invalid_argument, "provider config: " + what); };
    if (config.max_concurrency < 1) {
        bad("max_concurrency must be >= 1");
    }
    if (config.retry.max_attempts < 1) {
        bad("retry.max_attempts must be >= 1");
    }
    if (!(config.retry.base_delay >= 0.0) || !std::isfinite(config.retry.base_delay)) {
        bad("retry.base_delay must be a non-negative number of seconds");
    }
    if (!(config.corruption_rate >= 0.0 && config.corruption_rate <= 1.0)) {
        bad("corruption_rate must lie in [0, 1]");
    }
    if (!(config.timeout > 0.0)) {
        bad("timeout must be positive");
    }
    if (config.kind == ProviderKind::http && config.endpoint.empty()) {
        bad("http provider needs an endpoint");
    }
}

namespace {

struct Substitution {
    std::string_view from;
    std::string_view to;
};

// Longest first so "System.out.println" wins over shorter overlapping keys.
constexpr std::array<Substitution, 6> kJavaToCpp = {{
    {"System.out.println", "std::cout <<"},
    {"ArrayList", "std::vector"},
    {"boolean", "bool"},
    {"String", "std::string"},
    {"final", "const"},
    {"null", "nullptr"},
}};

bool is_word(char c) {
    return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_';
}

std::string fenced(std::string_view tag, std::string body) {
    if (!body.empty() && body.back() != '\n') {
        body += '\n';
    }
    return "```" + std::string(tag) + "\n" + body + "```\n";
}

} // namespace

bool mock_corrupts(std::string_view record_id, double corruption_rate, std::uint64_t seed) {
    if (corruption_rate <= 0.0) {
        return false;
    }
    Rng rng(derive_seed(seed, record_id));
    return rng.uniform() < corruption_rate;
}

std::string mock_translate(std::string_view text, double corruption_rate, std::string_view record_id,
                           std::uint64_t seed) {
    std::string out;
    out.reserve(text.size() + text.size() / 8);
    std::size_t i = 0;
    while (i < text.size()) {
        bool matched = false;
        if (i == 0 || !is_word(text[i - 1])) {
            for (const auto& [from, to] : kJavaToCpp) {
                const std::size_t end = i + from.size();
                if (text.substr(i, from.size()) == from && (end == text.size() || !is_word(text[end]))) {
                    out += to;
                    i = end;
                    matched = true;
                    break;
                }
            }
        }
        if (!matched) {
            out += text[i++];
        }
    }
    if (mock_corrupts(record_id, corruption_rate, seed)) {
        if (const auto brace = out.rfind('}'); brace != std::string::npos) {
            out.erase(brace, 1);
        }
    }
    return out;
}

void MockProvider::check_pair(std::string_view src, std::string_view dst) const {
    if (src != "java" || dst != "cpp") {
        throw Error(ErrorCode::unsupported_pair, "mock provider only translates java -> cpp, not " +
                                                     std::string(src) + " -> " + std::string(dst));
    }
}

std::string MockProvider::complete(const TranslationRequest& request) {
    check_pair(request.src_lang, request.dst_lang);
    const ChangeRecord& r = *request.record;
    return "Here is the equivalent change.\n\n" +
           fenced("OLD", mock_translate(r.old_code, corruption_rate_, r.id, seed_)) + "\n" +
           fenced("DIFF", mock_translate(r.diff));
}

HttpProvider::HttpProvider(const ProviderConfig& config) : model_(config.model), timeout_(config.timeout) {
    const auto scheme_end = config.endpoint.find("://");
    if (scheme_end == std::string::npos) {
        throw Error(ErrorCode::invalid_argument, "endpoint '" + config.endpoint + "' lacks a scheme");
    }
    const std::string scheme = config.endpoint.substr(0, scheme_end);
    if (scheme != "http" && scheme != "https") {
        throw Error(ErrorCode::invalid_argument, "endpoint scheme must be http or https");
    }
#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
    if (scheme == "https") {
        throw Error(ErrorCode::invalid_argument, "this build has no TLS support; use an http:// endpoint");
    }
#endif
    const auto host_begin = scheme_end + 3;
    const auto slash = config.endpoint.find('/', host_begin);
    base_url_ = config.endpoint.substr(0, slash);
    std::string prefix = slash == std::string::npos ? std::string{} : config.endpoint.substr(slash);
    while (!prefix.empty() && prefix.back() == '/') {
        prefix.pop_back();
    }
    path_ = prefix + "/v1/chat/completions";
}

std::string HttpProvider::complete(const TranslationRequest& request) {
    using json = nlohmann::ordered_json;
    httplib::Client client(base_url_);
    const auto secs = static_cast<time_t>(timeout_);
    const auto usecs = static_cast<time_t>((timeout_ - static_cast<double>(secs)) * 1e6);
    client.set_connection_timeout(secs, usecs);
    client.set_read_timeout(secs, usecs);
    client.set_write_timeout(secs, usecs);

    httplib::Headers headers;
    if (const char* key = std::getenv("XLR_API_KEY"); key && *key) {
        headers.emplace("Authorization", std::string("Bearer ") + key);
    }
    json body;
    body["model"] = model_;
    body["temperature"] = 0;
    body["messages"] = json::array({json{{"role", "user"}, {"content", request.prompt}}});

    auto res = client.Post(path_, headers, dump_line(body), "application/json");
    if (!res) {
        const auto err = res.error();
        const bool timed_out = err == httplib::Error::Read || err == httplib::Error::Write ||
                               err == httplib::Error::ConnectionTimeout;
        throw ProviderError("request to " + base_url_ + path_ + " failed: " + httplib::to_string(err), timed_out);
    }
    if (res->status < 200 || res->status >= 300) {
        const bool retryable = res->status == 429 || res->status >= 500;
        throw ProviderError("provider returned HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 300),
                            retryable, res->status);
    }
    try {
        const json reply = json::parse(res->body);
        return reply.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const json::exception& e) {
        throw ProviderError(std::string("malformed chat completion reply: ") + e.what(), false, res->status);
    }
}

std::unique_ptr<Provider> make_provider(const ProviderConfig& config) {
    validate(config);
    if (config.kind == ProviderKind::mock) {
        return std::make_unique<MockProvider>(config.corruption_rate, config.mock_seed);
    }
    return std::make_unique<HttpProvider>(config);
}

double backoff_delay(const RetryPolicy& policy, std::string_view key, std::size_t attempt) {
    Rng rng(derive_seed(policy.jitter_seed, std::string(key) + "#" + std::to_string(attempt)));
    const double exp = std::ldexp(policy.base_delay, static_cast<int>(attempt) - 1);
    return exp + rng.uniform() * policy.base_delay;
}

std::string complete_with_retry(Provider& provider, const TranslationRequest& request, const RetryPolicy& policy,
                                const Sleeper& sleep) {
    const std::string_view key = request.record ? std::string_view(request.record->id) : std::string_view{};
    for (std::size_t attempt = 1;; ++attempt) {
        try {
            return provider.complete(request);
        } catch (const ProviderError& e) {
            if (!e.retryable() || attempt >= policy.max_attempts) {
                throw;
            }
        }
        const std::chrono::duration<double> delay(backoff_delay(policy, key, attempt));
        if (sleep) {
            sleep(delay);
        } else {
            std::this_thread::sleep_for(delay);
        }
    }
}

} // namespace xlr::translate
