#include "xlr/validator.hpp"

#include "xlr/diffkit.hpp"
#include "xlr/error.hpp"
#include "xlr/jsonl.hpp"
#include "xlr/parallel.hpp"

#include <algorithm>
#include <fstream>

namespace xlr::validate {

std::string_view to_string(TokenKind k) noexcept {
    switch (k) {
    case TokenKind::identifier: return "identifier";
    case TokenKind::number: return "number";
    case TokenKind::string_lit: return "string_lit";
    case TokenKind::char_lit: return "char_lit";
    case TokenKind::punct: return "punct";
    case TokenKind::preprocessor: return "preprocessor";
    case TokenKind::comment: return "comment";
    }
    return "?";
}

std::string_view to_string(Rule r) noexcept {
    switch (r) {
    case Rule::unbalanced: return "unbalanced";
    case Rule::unterminated_literal: return "unterminated_literal";
    case Rule::unterminated_comment: return "unterminated_comment";
    case Rule::empty: return "empty";
    case Rule::leakage: return "leakage";
    case Rule::diff_apply: return "diff_apply";
    }
    return "?";
}

bool Verdict::has(Rule r) const noexcept {
    return std::any_of(violations.begin(), violations.end(), [r](const Violation& v) { return v.rule == r; });
}

std::string LexResult::reconstruct() const {
    std::string out;
    for (const auto& t : tokens) {
        out += t.leading;
        out += t.text;
    }
    out += trailing;
    return out;
}

namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f'; }
bool is_digit(char c) { return c >= '0' && c <= '9'; }
bool is_ident_start(char c) { return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || c == '_'; }
bool is_ident_char(char c) { return is_ident_start(c) || is_digit(c); }

class Lexer {
public:
    explicit Lexer(std::string_view src) : src_(src) {}

    LexResult run() {
        LexResult out;
        std::string pending;
        bool line_start = true;
        while (pos_ < src_.size()) {
            const char c = src_[pos_];
            if (is_space(c)) {
                pending += c;
                if (c == '\n') {
                    ++line_;
                    line_start = true;
                }
                ++pos_;
                continue;
            }
            const std::size_t start = pos_;
            const std::size_t start_line = line_;
            TokenKind kind = TokenKind::punct;
            if (c == '#' && line_start) {
                kind = TokenKind::preprocessor;
                scan_preprocessor();
            } else if (c == '/' && peek(1) == '/') {
                kind = TokenKind::comment;
                while (pos_ < src_.size() && src_[pos_] != '\n') {
                    ++pos_;
                }
            } else if (c == '/' && peek(1) == '*') {
                kind = TokenKind::comment;
                scan_block_comment(start_line);
            } else if (c == '"' || c == '\'') {
                kind = c == '"' ? TokenKind::string_lit : TokenKind::char_lit;
                scan_literal(c, start_line);
            } else if (is_ident_start(c)) {
                kind = TokenKind::identifier;
                while (pos_ < src_.size() && is_ident_char(src_[pos_])) {
                    ++pos_;
                }
            } else if (is_digit(c) || (c == '.' && is_digit(peek(1)))) {
                kind = TokenKind::number;
                scan_number();
            } else {
                ++pos_;
            }
            out.tokens.push_back(Token{kind, std::string(src_.substr(start, pos_ - start)), start_line, std::move(pending)});
            pending.clear();
            line_start = false;
        }
        out.trailing = std::move(pending);
        return out;
    }

private:
    char peek(std::size_t ahead) const {
        return pos_ + ahead < src_.size() ? src_[pos_ + ahead] : '\0';
    }

    void scan_preprocessor() {
        // Runs to end of line; a trailing backslash continues the directive.
        while (pos_ < src_.size() && src_[pos_] != '\n') {
            if (src_[pos_] == '\\' && peek(1) == '\n') {
                pos_ += 2;
                ++line_;
                continue;
            }
            ++pos_;
        }
    }

    void scan_block_comment(std::size_t start_line) {
        pos_ += 2;
        while (pos_ < src_.size()) {
            if (src_[pos_] == '*' && peek(1) == '/') {
                pos_ += 2;
                return;
            }
            if (src_[pos_] == '\n') {
                ++line_;
            }
            ++pos_;
        }
        throw LexError(Rule::unterminated_comment, start_line,
                       "block comment opened on line " + std::to_string(start_line) + " is never closed");
    }

    void scan_literal(char quote, std::size_t start_line) {
        ++pos_;
        while (pos_ < src_.size()) {
            const char c = src_[pos_];
            if (c == '\\') {
                if (peek(1) == '\n') {
                    ++line_;
                }
                pos_ += std::min<std::size_t>(2, src_.size() - pos_);
                continue;
            }
            if (c == '\n') {
                break;
            }
            ++pos_;
            if (c == quote) {
                return;
            }
        }
        throw LexError(Rule::unterminated_literal, start_line,
                       std::string(quote == '"' ? "string" : "character") + " literal opened on line " +
                           std::to_string(start_line) + " is not terminated");
    }

    void scan_number() {
        while (pos_ < src_.size()) {
            const char c = src_[pos_];
            if (is_ident_char(c) || c == '.') {
                ++pos_;
            } else if ((c == '+' || c == '-') && pos_ > 0 &&
                       (src_[pos_ - 1] == 'e' || src_[pos_ - 1] == 'E' || src_[pos_ - 1] == 'p' ||
                        src_[pos_ - 1] == 'P')) {
                ++pos_;
            } else if (c == '\'' && is_ident_char(peek(1))) {
                pos_ += 2; // digit separator
            } else {
                break;
            }
        }
    }

    std::string_view src_;
    std::size_t pos_ = 0;
    std::size_t line_ = 1;
};

char closer_for(char open) { return open == '(' ? ')' : open == '[' ? ']' : '}'; }

std::size_t line_of_offset(std::string_view text, std::size_t offset) {
    return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(offset), '\n'));
}

// Lex + balance + emptiness for one side of the change.
void check_code(std::string_view code, std::string_view side, bool require_content, std::vector<Violation>& out) {
    LexResult lexed;
    try {
        lexed = lex(code);
    } catch (const LexError& e) {
        out.push_back({e.rule(), e.line(), std::string(side) + ": " + e.what()});
        return;
    }
    for (auto v : check_balance(lexed.tokens)) {
        v.detail = std::string(side) + ": " + v.detail;
        out.push_back(std::move(v));
    }
    if (require_content) {
        const bool any = std::any_of(lexed.tokens.begin(), lexed.tokens.end(),
                                     [](const Token& t) { return t.kind != TokenKind::comment; });
        if (!any) {
            out.push_back({Rule::empty, 0, std::string(side) + ": no code left after stripping comments"});
        }
    }
}

} // namespace

LexResult lex(std::string_view code) { return Lexer(code).run(); }

std::vector<Violation> check_balance(std::span<const Token> tokens) {
    struct Open {
        char ch;
        std::size_t line;
    };
    std::vector<Open> stack;
    for (const auto& t : tokens) {
        if (t.kind != TokenKind::punct || t.text.size() != 1) {
            continue;
        }
        const char c = t.text[0];
        if (c == '(' || c == '[' || c == '{') {
            stack.push_back({c, t.line});
        } else if (c == ')' || c == ']' || c == '}') {
            if (stack.empty()) {
                return {{Rule::unbalanced, t.line, std::string("unexpected '") + c + "'"}};
            }
            if (closer_for(stack.back().ch) != c) {
                return {{Rule::unbalanced, t.line,
                         std::string("expected '") + closer_for(stack.back().ch) + "' to close '" + stack.back().ch +
                             "' from line " + std::to_string(stack.back().line) + ", found '" + c + "'"}};
            }
            stack.pop_back();
        }
    }
    if (stack.empty()) {
        return {};
    }
    std::string missing;
    for (auto it = stack.rbegin(); it != stack.rend(); ++it) {
        missing += closer_for(it->ch);
    }
    const std::size_t last_line = tokens.empty() ? 0 : tokens.back().line;
    return {{Rule::unbalanced, last_line,
             "end of input with unclosed '" + std::string(1, stack.back().ch) + "' from line " +
                 std::to_string(stack.back().line) + "; missing \"" + missing + "\""}};
}

Ruleset default_ruleset(std::string_view dst_lang) {
    if (dst_lang == "cpp") {
        return {{"System.out", "@Override", "import java", "public static void main"}};
    }
    return {};
}

Verdict validate_record(const ChangeRecord& record, const Ruleset& ruleset) {
    if (record.origin != Origin::synthetic) {
        throw Error(ErrorCode::invalid_argument, "validate_record expects a synthetic record, got '" + record.id + "'");
    }
    Verdict verdict;
    auto& out = verdict.violations;

    check_code(record.old_code, "before change", false, out);

    std::string after;
    try {
        after = diff::apply(record.old_code, diff::parse_unified_diff(record.diff));
    } catch (const Error& e) {
        out.push_back({Rule::diff_apply, 0, std::string("diff does not apply: ") + e.what()});
        return verdict;
    }

    check_code(after, "after change", true, out);

    for (const auto& needle : ruleset.denylist) {
        if (needle.empty()) {
            continue;
        }
        if (const auto at = after.find(needle); at != std::string::npos) {
            out.push_back({Rule::leakage, line_of_offset(after, at), "untranslated fragment '" + needle + "'"});
        }
    }
    return verdict;
}

FilterResult filter_corpus_serial(std::span<const ChangeRecord> records, const Ruleset& ruleset) {
    FilterResult result;
    for (const auto& r : records) {
        Verdict v = validate_record(r, ruleset);
        if (v.valid()) {
            result.kept.push_back(r);
        } else {
            result.rejected.push_back({r, std::move(v)});
        }
    }
    return result;
}

FilterResult filter_corpus(std::span<const ChangeRecord> records, const Ruleset& ruleset) {
    for (const auto& r : records) {
        if (r.origin != Origin::synthetic) {
            throw Error(ErrorCode::invalid_argument, "filter_corpus expects synthetic records, got '" + r.id + "'");
        }
    }
    std::vector<Verdict> verdicts(records.size());
    parallel_for(records.size(), [&](std::size_t i) { verdicts[i] = validate_record(records[i], ruleset); });

    FilterResult result;
    for (std::size_t i = 0; i < records.size(); ++i) {
        if (verdicts[i].valid()) {
            result.kept.push_back(records[i]);
        } else {
            result.rejected.push_back({records[i], std::move(verdicts[i])});
        }
    }
    return result;
}

std::size_t write_rejection_report(std::span<const Rejected> rejected, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw Error(ErrorCode::io, "cannot write '" + path.string() + "'");
    }
    for (const auto& r : rejected) {
        const Violation& v = r.verdict.violations.front();
        nlohmann::ordered_json j;
        j["id"] = r.record.id;
        j["rule"] = to_string(v.rule);
        j["line"] = v.line;
        j["detail"] = v.detail;
        out << dump_line(j) << '\n';
    }
    if (!out) {
        throw Error(ErrorCode::io, "write failed for '" + path.string() + "'");
    }
    return rejected.size();
}

} // namespace xlr::validate
