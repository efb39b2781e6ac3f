#include "xlr/diffkit.hpp"

#include "xlr/error.hpp"

#include <charconv>
#include <optional>

namespace xlr::diff {
namespace {

constexpr std::string_view kNoNewlineMarker = "\\ No newline at end of file";

struct TextLine {
    std::string_view text;
    bool newline = true;
};

std::vector<TextLine> split_lines(std::string_view text) {
    std::vector<TextLine> out;
    std::size_t start = 0;
    while (start < text.size()) {
        const auto nl = text.find('\n', start);
        if (nl == std::string_view::npos) {
            out.push_back({text.substr(start), false});
            break;
        }
        out.push_back({text.substr(start, nl - start), true});
        start = nl + 1;
    }
    return out;
}

[[noreturn]] void parse_fail(std::size_t line_no, const std::string& what) {
    throw Error(ErrorCode::diff_parse, "diff line " + std::to_string(line_no) + ": " + what);
}

// Parses "<digits>[,<digits>]" at the front of s, advancing s.
bool parse_range(std::string_view& s, std::size_t& start, std::size_t& len) {
    auto read_num = [&s](std::size_t& v) {
        const auto* first = s.data();
        const auto* last = s.data() + s.size();
        auto [ptr, ec] = std::from_chars(first, last, v);
        if (ec != std::errc{} || ptr == first) {
            return false;
        }
        s.remove_prefix(static_cast<std::size_t>(ptr - first));
        return true;
    };
    if (!read_num(start)) {
        return false;
    }
    len = 1;
    if (!s.empty() && s.front() == ',') {
        s.remove_prefix(1);
        if (!read_num(len)) {
            return false;
        }
    }
    return true;
}

std::optional<Hunk> parse_hunk_header(std::string_view line) {
    if (!line.starts_with("@@ -")) {
        return std::nullopt;
    }
    line.remove_prefix(4);
    Hunk h;
    if (!parse_range(line, h.old_start, h.old_len)) {
        return std::nullopt;
    }
    if (!line.starts_with(" +")) {
        return std::nullopt;
    }
    line.remove_prefix(2);
    if (!parse_range(line, h.new_start, h.new_len)) {
        return std::nullopt;
    }
    // Anything after the closing "@@" (git puts a function name there) is ignored.
    if (!line.starts_with(" @@")) {
        return std::nullopt;
    }
    return h;
}

std::size_t old_begin(const Hunk& h) { return h.old_len == 0 ? h.old_start : h.old_start - 1; }

bool is_old_side(LineKind k) { return k != LineKind::add; }
bool is_new_side(LineKind k) { return k != LineKind::remove; }

[[noreturn]] void invalid(std::size_t hunk_index, const std::string& what) {
    throw Error(ErrorCode::diff_invalid, "hunk " + std::to_string(hunk_index) + ": " + what);
}

} // namespace

void check_invariants(const Diff& diff) {
    for (std::size_t k = 0; k < diff.hunks.size(); ++k) {
        const Hunk& h = diff.hunks[k];
        std::size_t old_seen = 0;
        std::size_t new_seen = 0;
        for (const auto& line : h.lines) {
            if (line.text.find('\n') != std::string::npos) {
                invalid(k, "line text contains a newline");
            }
            old_seen += is_old_side(line.kind) ? 1 : 0;
            new_seen += is_new_side(line.kind) ? 1 : 0;
        }
        if (old_seen != h.old_len || new_seen != h.new_len) {
            invalid(k, "header counts -" + std::to_string(h.old_len) + " +" + std::to_string(h.new_len) +
                           " but lines give -" + std::to_string(old_seen) + " +" + std::to_string(new_seen));
        }
        if ((h.old_len > 0 && h.old_start == 0) || (h.new_len > 0 && h.new_start == 0)) {
            invalid(k, "non-empty range starting at line 0");
        }
        // A missing final newline can only be flagged on the last line of a side.
        std::size_t old_left = old_seen;
        std::size_t new_left = new_seen;
        for (const auto& line : h.lines) {
            old_left -= is_old_side(line.kind) ? 1 : 0;
            new_left -= is_new_side(line.kind) ? 1 : 0;
            if (line.no_newline) {
                if ((is_old_side(line.kind) && old_left != 0) || (is_new_side(line.kind) && new_left != 0)) {
                    invalid(k, "no-newline marker on a line that is not last on its side");
                }
                if (k + 1 != diff.hunks.size()) {
                    invalid(k, "no-newline marker outside the final hunk");
                }
            }
        }
        if (k > 0) {
            const Hunk& prev = diff.hunks[k - 1];
            if (old_begin(h) < old_begin(prev) + prev.old_len || h.old_start < prev.old_start) {
                invalid(k, "overlaps or precedes hunk " + std::to_string(k - 1));
            }
        }
    }
}

Diff parse_unified_diff(std::string_view text) {
    Diff diff;
    std::size_t old_left = 0;
    std::size_t new_left = 0;
    std::size_t header_line = 0;

    const auto lines = split_lines(text);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const std::size_t line_no = i + 1;
        const std::string_view line = lines[i].text;
        const bool in_body = old_left > 0 || new_left > 0;

        if (line.starts_with("\\")) {
            if (diff.hunks.empty() || diff.hunks.back().lines.empty()) {
                parse_fail(line_no, "no-newline marker without a preceding line");
            }
            diff.hunks.back().lines.back().no_newline = true;
            continue;
        }

        if (in_body) {
            Hunk& h = diff.hunks.back();
            const char c = line.empty() ? ' ' : line.front();
            const std::string body = line.empty() ? std::string{} : std::string(line.substr(1));
            if (c == ' ' && old_left > 0 && new_left > 0) {
                h.lines.push_back({LineKind::context, body, false});
                --old_left;
                --new_left;
            } else if (c == '-' && old_left > 0) {
                h.lines.push_back({LineKind::remove, body, false});
                --old_left;
            } else if (c == '+' && new_left > 0) {
                h.lines.push_back({LineKind::add, body, false});
                --new_left;
            } else if (c == ' ' || c == '-' || c == '+' || c == '@') {
                parse_fail(line_no, "hunk at line " + std::to_string(header_line) + " declares -" +
                                        std::to_string(h.old_len) + " +" + std::to_string(h.new_len) +
                                        " but its lines do not match those counts");
            } else {
                parse_fail(line_no, "unexpected line inside hunk");
            }
            continue;
        }

        if (line.starts_with("@@")) {
            auto h = parse_hunk_header(line);
            if (!h) {
                parse_fail(line_no, "malformed hunk header '" + std::string(line) + "'");
            }
            header_line = line_no;
            old_left = h->old_len;
            new_left = h->new_len;
            diff.hunks.push_back(std::move(*h));
            continue;
        }

        if (diff.hunks.empty() || line.empty() || line.starts_with("--- ") || line.starts_with("+++ ") ||
            line.starts_with("diff ") || line.starts_with("index ")) {
            continue;
        }
        if (line.front() == ' ' || line.front() == '-' || line.front() == '+') {
            const Hunk& h = diff.hunks.back();
            parse_fail(line_no, "hunk at line " + std::to_string(header_line) + " has more lines than its header -" +
                                    std::to_string(h.old_len) + " +" + std::to_string(h.new_len) + " declares");
        }
        parse_fail(line_no, "unexpected line between hunks");
    }

    if (old_left > 0 || new_left > 0) {
        const Hunk& h = diff.hunks.back();
        std::string what = "hunk at line " + std::to_string(header_line) + ": ";
        if (old_left > 0) {
            what += "old_len " + std::to_string(h.old_len) + " but only " + std::to_string(h.old_len - old_left) +
                    " old-side line(s)";
        } else {
            what += "new_len " + std::to_string(h.new_len) + " but only " + std::to_string(h.new_len - new_left) +
                    " new-side line(s)";
        }
        parse_fail(lines.size(), what);
    }

    try {
        check_invariants(diff);
    } catch (const Error& e) {
        throw Error(ErrorCode::diff_parse, e.what());
    }
    return diff;
}

std::string apply(std::string_view old_code, const Diff& diff) {
    check_invariants(diff);
    const auto old_lines = split_lines(old_code);

    std::vector<TextLine> out;
    out.reserve(old_lines.size());
    std::size_t pos = 0;

    for (std::size_t k = 0; k < diff.hunks.size(); ++k) {
        const Hunk& h = diff.hunks[k];
        const std::size_t begin = old_begin(h);
        if (begin + h.old_len > old_lines.size()) {
            throw Error(ErrorCode::diff_apply, "hunk " + std::to_string(k) + ": range -" + std::to_string(h.old_start) +
                                                   "," + std::to_string(h.old_len) + " exceeds " +
                                                   std::to_string(old_lines.size()) + " line(s) of old code");
        }
        out.insert(out.end(), old_lines.begin() + static_cast<std::ptrdiff_t>(pos),
                   old_lines.begin() + static_cast<std::ptrdiff_t>(begin));

        std::size_t idx = begin;
        for (const auto& line : h.lines) {
            if (line.kind == LineKind::add) {
                out.push_back({line.text, !line.no_newline});
                continue;
            }
            const TextLine& have = old_lines[idx];
            if (have.text != line.text) {
                throw Error(ErrorCode::diff_apply, "hunk " + std::to_string(k) + ": line " + std::to_string(idx + 1) +
                                                       " is '" + std::string(have.text) + "', diff expects '" +
                                                       line.text + "'");
            }
            if (have.newline == line.no_newline) {
                throw Error(ErrorCode::diff_apply, "hunk " + std::to_string(k) + ": line " + std::to_string(idx + 1) +
                                                       " disagrees on the newline at end of file");
            }
            if (line.kind == LineKind::context) {
                out.push_back(have);
            }
            ++idx;
        }
        pos = idx;
    }
    out.insert(out.end(), old_lines.begin() + static_cast<std::ptrdiff_t>(pos), old_lines.end());

    std::string result;
    result.reserve(old_code.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (!out[i].newline && i + 1 != out.size()) {
            throw Error(ErrorCode::diff_apply,
                        "result line " + std::to_string(i + 1) + " lacks a newline but is not the last line");
        }
        result += out[i].text;
        if (out[i].newline) {
            result += '\n';
        }
    }
    return result;
}

std::string render(const Diff& diff) {
    check_invariants(diff);
    std::string out;
    for (const Hunk& h : diff.hunks) {
        out += "@@ -" + std::to_string(h.old_start) + "," + std::to_string(h.old_len) + " +" +
               std::to_string(h.new_start) + "," + std::to_string(h.new_len) + " @@\n";
        for (const auto& line : h.lines) {
            out += line.kind == LineKind::context ? ' ' : line.kind == LineKind::add ? '+' : '-';
            out += line.text;
            out += '\n';
            if (line.no_newline) {
                out += kNoNewlineMarker;
                out += '\n';
            }
        }
    }
    return out;
}

ChangedLines changed_lines(const Diff& diff) {
    ChangedLines out;
    for (const Hunk& h : diff.hunks) {
        for (const auto& line : h.lines) {
            if (line.kind == LineKind::add) {
                out.added.push_back(line.text);
            } else if (line.kind == LineKind::remove) {
                out.removed.push_back(line.text);
            }
        }
    }
    return out;
}

Diff inverse(const Diff& diff) {
    Diff inv = diff;
    for (Hunk& h : inv.hunks) {
        std::swap(h.old_start, h.new_start);
        std::swap(h.old_len, h.new_len);
        for (auto& line : h.lines) {
            if (line.kind == LineKind::add) {
                line.kind = LineKind::remove;
            } else if (line.kind == LineKind::remove) {
                line.kind = LineKind::add;
            }
        }
    }
    return inv;
}

} // namespace xlr::diff
