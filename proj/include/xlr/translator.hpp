#pragma once

#include "xlr/corpus.hpp"
#include "xlr/provider.hpp"

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace xlr::translate {

/// Prompt with the placeholders {src_lang}, {dst_lang}, {old_code} and
/// {diff}, each exactly once.
struct PromptTemplate {
    std::string text;

    static PromptTemplate standard();
    /// Throws Error{template_invalid} naming the first bad placeholder.
    void validate() const;
};

/// "java" -> "Java", "cpp" -> "C++"; unknown tags are returned unchanged.
std::string language_display_name(std::string_view tag);

/// Single-pass placeholder substitution; record text is inserted verbatim
/// and never re-scanned.
std::string build_prompt(const ChangeRecord& record, std::string_view dst_lang, const PromptTemplate& tmpl);

struct ProviderReply {
    std::string old_code;
    std::string diff;
};

/// Extracts the ```OLD and ```DIFF fenced blocks; other prose and fences
/// are ignored. Throws Error{reply_parse} if either block is missing,
/// repeated, or unterminated.
ProviderReply parse_provider_reply(std::string_view reply);

/// Id given to the synthetic translation of source_id.
std::string synthetic_id(std::string_view source_id, std::string_view dst_lang);

/// Translates one record. The result carries the source label verbatim.
/// Throws ProviderError when the provider fails for good, Error{reply_parse}
/// for an unreadable reply, and Error{inconsistent} when the returned diff
/// does not apply to the returned old code.
ChangeRecord translate_record(const ChangeRecord& record, Provider& provider, std::string_view dst_lang,
                              const PromptTemplate& tmpl, const RetryPolicy& retry = {}, const Sleeper& sleep = {});

struct TranslationStats {
    std::size_t attempted = 0;
    std::size_t succeeded = 0;
    std::size_t provider_failed = 0;
    std::size_t inconsistent = 0;

    friend bool operator==(const TranslationStats&, const TranslationStats&) = default;
};

struct TranslationFailure {
    std::string source_id;
    std::string message;
    bool provider_failure = false; // false: reply unreadable or inconsistent
};

struct TranslateOptions {
    std::string src_lang = "java";
    std::string dst_lang = "cpp";
    PromptTemplate prompt = PromptTemplate::standard();
    RetryPolicy retry;
    std::size_t max_concurrency = 1;
    Sleeper sleep; // empty: real sleeping
};

struct TranslationResult {
    std::vector<ChangeRecord> records; // in source-record order
    TranslationStats stats;
    std::vector<TranslationFailure> failures;
};

/// Translates every real src_lang record with up to max_concurrency
/// requests in flight. Per-record failures are counted, never fatal.
/// Throws Error{unsupported_pair} up front if the provider cannot do the pair.
TranslationResult translate_corpus(const CorpusStore& store, Provider& provider, const TranslateOptions& options);

} // namespace xlr::translate
