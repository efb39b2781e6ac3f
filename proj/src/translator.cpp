#include "xlr/translator.hpp"

#include "xlr/diffkit.hpp"
#include "xlr/error.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <optional>
#include <thread>
#include <variant>

namespace xlr::translate {

namespace {

constexpr std::array<std::string_view, 4> kPlaceholders = {"{src_lang}", "{dst_lang}", "{old_code}", "{diff}"};

std::size_t count_occurrences(std::string_view hay, std::string_view needle) {
    std::size_t n = 0;
    for (auto at = hay.find(needle); at != std::string_view::npos; at = hay.find(needle, at + needle.size())) {
        ++n;
    }
    return n;
}

} // namespace

PromptTemplate PromptTemplate::standard() {
    return {R"(Translate the following labeled code change from {src_lang} to {dst_lang}.

Write a functionally equivalent change in the target language. First translate the code as it was before the change, then express the same edit as a unified diff against your translation. Keep the scope and intent of the edit exactly as they are: do not fix, extend, reformat, or comment on the code.

Reply with exactly two fenced blocks:
1. A block opened with ```OLD containing the complete translated code before the change.
2. A block opened with ```DIFF containing a unified diff (hunk headers of the form @@ -a,b +c,d @@) that applies cleanly to the OLD block.

Code before the change:
<<<
{old_code}
>>>

The change, as a unified diff against the code above:
<<<
{diff}
>>>
)"};
}

void PromptTemplate::validate() const {
    for (auto ph : kPlaceholders) {
        const auto n = count_occurrences(text, ph);
        if (n != 1) {
            throw Error(ErrorCode::template_invalid, "prompt template must contain " + std::string(ph) +
                                                         " exactly once (found " + std::to_string(n) + ")");
        }
    }
}

std::string language_display_name(std::string_view tag) {
    if (tag == "java") {
        return "Java";
    }
    if (tag == "cpp") {
        return "C++";
    }
    return std::string(tag);
}

std::string build_prompt(const ChangeRecord& record, std::string_view dst_lang, const PromptTemplate& tmpl) {
    tmpl.validate();
    if (record.language == dst_lang) {
        throw Error(ErrorCode::invalid_argument,
                    "record '" + record.id + "' is already in the destination language " + std::string(dst_lang));
    }
    const std::string src_name = language_display_name(record.language);
    const std::string dst_name = language_display_name(dst_lang);

    std::string out;
    out.reserve(tmpl.text.size() + record.old_code.size() + record.diff.size());
    std::string_view rest = tmpl.text;
    while (!rest.empty()) {
        std::size_t best = std::string_view::npos;
        std::string_view which;
        for (auto ph : kPlaceholders) {
            const auto at = rest.find(ph);
            if (at < best) {
                best = at;
                which = ph;
            }
        }
        if (best == std::string_view::npos) {
            out += rest;
            break;
        }
        out += rest.substr(0, best);
        if (which == "{src_lang}") {
            out += src_name;
        } else if (which == "{dst_lang}") {
            out += dst_name;
        } else if (which == "{old_code}") {
            out += record.old_code;
        } else {
            out += record.diff;
        }
        rest.remove_prefix(best + which.size());
    }
    return out;
}

ProviderReply parse_provider_reply(std::string_view reply) {
    std::optional<std::string> old_block;
    std::optional<std::string> diff_block;
    std::optional<std::string>* current = nullptr; // block being collected
    bool in_other_fence = false;
    std::string body;

    std::size_t start = 0;
    while (start <= reply.size()) {
        auto nl = reply.find('\n', start);
        const bool last = nl == std::string_view::npos;
        std::string_view line = reply.substr(start, last ? std::string_view::npos : nl - start);
        start = last ? reply.size() + 1 : nl + 1;
        if (!line.empty() && line.back() == '\r') {
            line.remove_suffix(1);
        }
        const auto first = line.find_first_not_of(" \t");
        const bool is_fence = first != std::string_view::npos && line.substr(first).starts_with("```");

        if (current) {
            if (is_fence && line.substr(first).find_first_not_of('`') == std::string_view::npos) {
                if (current->has_value()) {
                    throw Error(ErrorCode::reply_parse, std::string("reply contains more than one ") +
                                                            (current == &old_block ? "OLD" : "DIFF") + " block");
                }
                *current = std::move(body);
                body.clear();
                current = nullptr;
            } else {
                body += line;
                body += '\n';
            }
            continue;
        }
        if (in_other_fence) {
            in_other_fence = !is_fence;
            continue;
        }
        if (!is_fence) {
            continue;
        }
        std::string tag(line.substr(first + 3));
        tag.erase(0, tag.find_first_not_of(" \t"));
        tag.erase(tag.find_last_not_of(" \t") + 1);
        std::transform(tag.begin(), tag.end(), tag.begin(), [](unsigned char c) { return std::toupper(c); });
        if (tag == "OLD") {
            current = &old_block;
        } else if (tag == "DIFF") {
            current = &diff_block;
        } else {
            in_other_fence = true;
        }
    }
    if (current) {
        throw Error(ErrorCode::reply_parse, std::string("unterminated ") + (current == &old_block ? "OLD" : "DIFF") +
                                                " block in reply");
    }
    if (!old_block || !diff_block) {
        throw Error(ErrorCode::reply_parse, std::string("reply lacks ") +
                                                (!old_block && !diff_block ? "both OLD and DIFF blocks"
                                                 : !old_block              ? "an OLD block"
                                                                           : "a DIFF block"));
    }
    return {std::move(*old_block), std::move(*diff_block)};
}

std::string synthetic_id(std::string_view source_id, std::string_view dst_lang) {
    return std::string(source_id) + "::syn::" + std::string(dst_lang);
}

ChangeRecord translate_record(const ChangeRecord& record, Provider& provider, std::string_view dst_lang,
                              const PromptTemplate& tmpl, const RetryPolicy& retry, const Sleeper& sleep) {
    TranslationRequest request;
    request.record = &record;
    request.src_lang = record.language;
    request.dst_lang = std::string(dst_lang);
    request.prompt = build_prompt(record, dst_lang, tmpl);

    const std::string reply = complete_with_retry(provider, request, retry, sleep);
    ProviderReply parsed = parse_provider_reply(reply);
    try {
        diff::apply(parsed.old_code, diff::parse_unified_diff(parsed.diff));
    } catch (const Error& e) {
        throw Error(ErrorCode::inconsistent,
                    "translation of '" + record.id + "' is inconsistent: " + std::string(e.what()));
    }

    ChangeRecord out;
    out.id = synthetic_id(record.id, dst_lang);
    out.language = std::string(dst_lang);
    out.old_code = std::move(parsed.old_code);
    out.diff = std::move(parsed.diff);
    out.label = record.label;
    out.origin = Origin::synthetic;
    out.source_id = record.id;
    return out;
}

TranslationResult translate_corpus(const CorpusStore& store, Provider& provider, const TranslateOptions& options) {
    options.prompt.validate();
    if (options.max_concurrency < 1) {
        throw Error(ErrorCode::invalid_argument, "max_concurrency must be >= 1");
    }

    std::vector<const ChangeRecord*> sources;
    for (const auto& r : store.records()) {
        if (r.language == options.src_lang && r.origin == Origin::real) {
            sources.push_back(&r);
        }
    }
    TranslationResult result;
    if (sources.empty()) {
        return result;
    }
    provider.check_pair(options.src_lang, options.dst_lang);

    using Outcome = std::variant<ChangeRecord, TranslationFailure>;
    std::vector<std::optional<Outcome>> outcomes(sources.size());
    std::atomic<std::size_t> next{0};

    auto worker = [&] {
        for (std::size_t i = next.fetch_add(1); i < sources.size(); i = next.fetch_add(1)) {
            const ChangeRecord& src = *sources[i];
            try {
                outcomes[i] = translate_record(src, provider, options.dst_lang, options.prompt, options.retry,
                                               options.sleep);
            } catch (const ProviderError& e) {
                outcomes[i] = TranslationFailure{src.id, e.what(), true};
            } catch (const Error& e) {
                outcomes[i] = TranslationFailure{src.id, e.what(), false};
            } catch (const std::exception& e) {
                outcomes[i] = TranslationFailure{src.id, e.what(), true};
            }
        }
    };

    const std::size_t n_threads = std::min(options.max_concurrency, sources.size());
    if (n_threads == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(n_threads);
        for (std::size_t t = 0; t < n_threads; ++t) {
            pool.emplace_back(worker);
        }
    }

    result.stats.attempted = sources.size();
    for (auto& outcome : outcomes) {
        if (auto* rec = std::get_if<ChangeRecord>(&*outcome)) {
            ++result.stats.succeeded;
            result.records.push_back(std::move(*rec));
        } else {
            auto& failure = std::get<TranslationFailure>(*outcome);
            ++(failure.provider_failure ? result.stats.provider_failed : result.stats.inconsistent);
            result.failures.push_back(std::move(failure));
        }
    }
    return result;
}

} // namespace xlr::translate
