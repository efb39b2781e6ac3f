#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace xlr::diff {

enum class LineKind { context, add, remove };

struct DiffLine {
    LineKind kind = LineKind::context;
    std::string text;
    // Set when the line is followed by "\ No newline at end of file".
    bool no_newline = false;

    friend bool operator==(const DiffLine&, const DiffLine&) = default;
};

struct Hunk {
    std::size_t old_start = 0; // 1-based; 0 only for an insertion at the top
    std::size_t old_len = 0;
    std::size_t new_start = 0;
    std::size_t new_len = 0;
    std::vector<DiffLine> lines;

    friend bool operator==(const Hunk&, const Hunk&) = default;
};

struct Diff {
    std::vector<Hunk> hunks;

    bool empty() const noexcept { return hunks.empty(); }
    friend bool operator==(const Diff&, const Diff&) = default;
};

struct ChangedLines {
    std::vector<std::string> added;
    std::vector<std::string> removed;
};

/// Parses unified diff text. File headers (---/+++, diff, index) are
/// optional and ignored. Hunk headers take the form "@@ -a,b +c,d @@",
/// where an omitted count means 1. Throws Error{diff_parse} with the
/// offending line number.
Diff parse_unified_diff(std::string_view text);

/// Applies the diff to old_code with zero fuzz. Throws Error{diff_apply}
/// naming the hunk index and line on mismatch.
std::string apply(std::string_view old_code, const Diff& diff);

/// Canonical text form; parse_unified_diff(render(d)) == d.
/// Throws Error{diff_invalid} for a diff that breaks the hunk invariants.
std::string render(const Diff& diff);

ChangedLines changed_lines(const Diff& diff);

/// Swaps add/remove lines and the old/new ranges so that
/// apply(apply(x, d), inverse(d)) == x.
Diff inverse(const Diff& diff);

/// Throws Error{diff_invalid} if counts disagree with line kinds or hunks
/// are unsorted/overlapping.
void check_invariants(const Diff& diff);

} // namespace xlr::diff
