#pragma once

#include "xlr/corpus.hpp"
#include "xlr/error.hpp"

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <string_view>

namespace xlr::translate {

enum class ProviderKind { mock, http };

struct RetryPolicy {
    std::size_t max_attempts = 3;
    double base_delay = 1.0; // seconds
    std::uint64_t jitter_seed = 0;
};

struct ProviderConfig {
    ProviderKind kind = ProviderKind::mock;
    std::string endpoint;           // http kind: scheme://host[:port][/prefix]
    std::string model = "gpt-4o";
    std::size_t max_concurrency = 4;
    RetryPolicy retry;
    double timeout = 60.0;          // seconds per request
    double corruption_rate = 0.0;   // mock kind only
    std::uint64_t mock_seed = 0;    // seeds per-record corruption draws
};

/// Throws Error{invalid_argument} when a field is out of range.
void validate(const ProviderConfig& config);

struct TranslationRequest {
    const ChangeRecord* record = nullptr;
    std::string src_lang;
    std::string dst_lang;
    std::string prompt;
};

/// Failure reported by a provider. Retryable failures (timeouts, HTTP 429,
/// HTTP 5xx) are retried by complete_with_retry; everything else fails fast.
class ProviderError : public Error {
public:
    ProviderError(const std::string& message, bool retryable, int http_status = 0)
        : Error(ErrorCode::provider, message), retryable_(retryable), http_status_(http_status) {}

    bool retryable() const noexcept { return retryable_; }
    int http_status() const noexcept { return http_status_; }

private:
    bool retryable_;
    int http_status_;
};

class Provider {
public:
    virtual ~Provider() = default;
    /// Returns the raw reply text. Must be safe to call concurrently.
    virtual std::string complete(const TranslationRequest& request) = 0;
    /// Throws Error{unsupported_pair} when the provider cannot translate src -> dst.
    virtual void check_pair(std::string_view /*src*/, std::string_view /*dst*/) const {}
};

/// Word-boundary, longest-match-first substitution of the fixed java->cpp
/// table, then (with probability corruption_rate, drawn from seed and
/// record_id) removal of the last '}' in the text.
std::string mock_translate(std::string_view text, double corruption_rate = 0.0, std::string_view record_id = {},
                           std::uint64_t seed = 0);

/// Whether mock_translate corrupts the record with this id.
bool mock_corrupts(std::string_view record_id, double corruption_rate, std::uint64_t seed);

/// Offline stand-in for an LLM: replies with mock_translate applied to the
/// record's old code (with corruption) and diff (without), in the OLD/DIFF
/// fenced-block format. Supports java -> cpp only.
class MockProvider final : public Provider {
public:
    MockProvider(double corruption_rate, std::uint64_t seed) : corruption_rate_(corruption_rate), seed_(seed) {}

    std::string complete(const TranslationRequest& request) override;
    void check_pair(std::string_view src, std::string_view dst) const override;

private:
    double corruption_rate_;
    std::uint64_t seed_;
};

/// OpenAI-compatible chat completions client:
/// POST {endpoint}/v1/chat/completions, temperature 0, bearer token from
/// the XLR_API_KEY environment variable.
class HttpProvider final : public Provider {
public:
    explicit HttpProvider(const ProviderConfig& config);
    std::string complete(const TranslationRequest& request) override;

    const std::string& base_url() const noexcept { return base_url_; }
    const std::string& path() const noexcept { return path_; }

private:
    std::string base_url_;
    std::string path_;
    std::string model_;
    double timeout_;
};

std::unique_ptr<Provider> make_provider(const ProviderConfig& config);

using Sleeper = std::function<void(std::chrono::duration<double>)>;

/// Delay before retry number `attempt` (1-based count of failed attempts):
/// base_delay * 2^(attempt-1) + jitter, jitter in [0, base_delay) drawn from
/// (jitter_seed, key, attempt).
double backoff_delay(const RetryPolicy& policy, std::string_view key, std::size_t attempt);

/// Calls provider.complete up to policy.max_attempts times, sleeping
/// backoff_delay between retryable failures. Rethrows the last
/// ProviderError once the budget is spent or on a non-retryable failure.
std::string complete_with_retry(Provider& provider, const TranslationRequest& request, const RetryPolicy& policy,
                                const Sleeper& sleep = {});

} // namespace xlr::translate
