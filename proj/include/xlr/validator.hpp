#pragma once

#include "xlr/corpus.hpp"

#include <cstddef>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace xlr::validate {

enum class TokenKind { identifier, number, string_lit, char_lit, punct, preprocessor, comment };

std::string_view to_string(TokenKind k) noexcept;

struct Token {
    TokenKind kind = TokenKind::punct;
    std::string text;
    std::size_t line = 1;
    // Whitespace between the previous token (or start of input) and this one.
    std::string leading;

    friend bool operator==(const Token&, const Token&) = default;
};

struct LexResult {
    std::vector<Token> tokens;
    std::string trailing; // whitespace after the last token

    /// Concatenates leading whitespace and token text; equals the lexed input.
    std::string reconstruct() const;
};

enum class Rule { unbalanced, unterminated_literal, unterminated_comment, empty, leakage, diff_apply };

std::string_view to_string(Rule r) noexcept;

struct Violation {
    Rule rule = Rule::unbalanced;
    std::size_t line = 0;
    std::string detail;

    friend bool operator==(const Violation&, const Violation&) = default;
};

struct Verdict {
    std::vector<Violation> violations;

    bool valid() const noexcept { return violations.empty(); }
    bool has(Rule r) const noexcept;
};

/// Thrown by lex(); carries the rule (unterminated_literal or
/// unterminated_comment) and the line where the construct started.
class LexError : public std::runtime_error {
public:
    LexError(Rule rule, std::size_t line, const std::string& what)
        : std::runtime_error(what), rule_(rule), line_(line) {}
    Rule rule() const noexcept { return rule_; }
    std::size_t line() const noexcept { return line_; }

private:
    Rule rule_;
    std::size_t line_;
};

/// C-family lexer: // and /* */ comments, "..." and '...' literals with
/// backslash escapes, # lines as preprocessor tokens, identifiers, numbers
/// and single-character punctuation. Raw strings and digraphs are not
/// recognized.
LexResult lex(std::string_view code);

/// (), {} and [] must nest; only punct tokens count. Reports the first
/// mismatch, or the unclosed openers at end of input.
std::vector<Violation> check_balance(std::span<const Token> tokens);

struct Ruleset {
    std::vector<std::string> denylist;
};

/// Default leakage denylist for a destination language (non-empty for cpp).
Ruleset default_ruleset(std::string_view dst_lang);

/// Lexical validation of a synthetic record: old code and post-change code
/// must lex and balance, the diff must apply, the result must contain
/// something besides comments, and no denylisted fragment may survive.
Verdict validate_record(const ChangeRecord& record, const Ruleset& ruleset);

struct Rejected {
    ChangeRecord record;
    Verdict verdict;
};

struct FilterResult {
    std::vector<ChangeRecord> kept;
    std::vector<Rejected> rejected;
};

/// Verdicts are computed in parallel; output order follows input order.
FilterResult filter_corpus(std::span<const ChangeRecord> records, const Ruleset& ruleset);
/// Single-threaded reference for filter_corpus.
FilterResult filter_corpus_serial(std::span<const ChangeRecord> records, const Ruleset& ruleset);

/// One JSONL line per rejected record: {id, rule, line, detail} of its first violation.
std::size_t write_rejection_report(std::span<const Rejected> rejected, const std::filesystem::path& path);

} // namespace xlr::validate
