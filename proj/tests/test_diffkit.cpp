#include "oracles.hpp"

#include "xlr/diffkit.hpp"
#include "xlr/error.hpp"

#include <doctest.h>

using namespace xlr;
using namespace xlr::diff;

namespace {

const std::string kFooBar = "@@ -1,1 +1,1 @@\n-foo\n+bar\n";

Diff foo_bar() {
    Hunk h{1, 1, 1, 1, {{LineKind::remove, "foo", false}, {LineKind::add, "bar", false}}};
    return Diff{{h}};
}

template <class F>
std::string error_of(F&& f, ErrorCode expected) {
    try {
        f();
    } catch (const Error& e) {
        CHECK(e.code() == expected);
        return e.what();
    }
    FAIL("expected an error");
    return {};
}

} // namespace

TEST_SUITE("diffkit") {

TEST_CASE("parse: empty text has no hunks") {
    CHECK(parse_unified_diff("").empty());
}

TEST_CASE("parse: one-hunk remove/add") {
    const Diff d = parse_unified_diff(kFooBar);
    REQUIRE(d.hunks.size() == 1);
    const Hunk& h = d.hunks[0];
    CHECK(h.old_start == 1);
    CHECK(h.old_len == 1);
    CHECK(h.new_start == 1);
    CHECK(h.new_len == 1);
    REQUIRE(h.lines.size() == 2);
    CHECK(h.lines[0] == DiffLine{LineKind::remove, "foo", false});
    CHECK(h.lines[1] == DiffLine{LineKind::add, "bar", false});
}

TEST_CASE("parse: header count larger than body") {
    const auto msg = error_of([] { parse_unified_diff("@@ -1,2 +1,1 @@\n-foo\n"); }, ErrorCode::diff_parse);
    CHECK(msg.find("old_len 2 but only 1 old-side line") != std::string::npos);
}

TEST_CASE("parse: omitted counts mean one") {
    const Diff d = parse_unified_diff("@@ -3 +3 @@\n-a\n+b\n");
    REQUIRE(d.hunks.size() == 1);
    CHECK(d.hunks[0].old_len == 1);
    CHECK(d.hunks[0].new_len == 1);
    CHECK(d.hunks[0].old_start == 3);
}

TEST_CASE("parse: file headers and trailing section text are ignored") {
    const Diff d = parse_unified_diff("diff --git a/x b/x\nindex 1..2\n--- a/x\n+++ b/x\n@@ -1,1 +1,1 @@ int main()\n-foo\n+bar\n");
    CHECK(d == foo_bar());
}

TEST_CASE("parse: malformed hunk header names its line") {
    const auto msg = error_of([] { parse_unified_diff("--- a\n+++ b\n@@ -x,1 +1 @@\n-a\n"); }, ErrorCode::diff_parse);
    CHECK(msg.find("diff line 3") != std::string::npos);
}

TEST_CASE("parse: overlapping hunks are rejected") {
    error_of([] { parse_unified_diff("@@ -1,2 +1,2 @@\n a\n-b\n+B\n@@ -2,1 +2,1 @@\n-b\n+c\n"); }, ErrorCode::diff_parse);
}

TEST_CASE("parse: hunk with more lines than declared") {
    error_of([] { parse_unified_diff("@@ -1,1 +1,1 @@\n-foo\n+bar\n+baz\n"); }, ErrorCode::diff_parse);
}

TEST_CASE("parse: no-newline marker") {
    const Diff d = parse_unified_diff("@@ -1,1 +1,1 @@\n-a\n\\ No newline at end of file\n+b\n");
    REQUIRE(d.hunks[0].lines.size() == 2);
    CHECK(d.hunks[0].lines[0].no_newline);
    CHECK_FALSE(d.hunks[0].lines[1].no_newline);
    CHECK(apply("a", d) == "b\n");
}

TEST_CASE("apply: empty diff is the identity") {
    for (std::string text : {"", "a", "a\nb\n", "no newline"}) {
        CHECK(apply(text, Diff{}) == text);
    }
}

TEST_CASE("apply: single replacement in the middle") {
    const Diff d = parse_unified_diff("@@ -2,1 +2,1 @@\n-b\n+B\n");
    CHECK(apply("a\nb\nc\n", d) == "a\nB\nc\n");
}

TEST_CASE("apply: context mismatch names hunk and line") {
    const Diff d = parse_unified_diff("@@ -1,1 +1,1 @@\n-z\n+y\n");
    const auto msg = error_of([&] { apply("a\n", d); }, ErrorCode::diff_apply);
    CHECK(msg.find("hunk 0") != std::string::npos);
    CHECK(msg.find("line 1") != std::string::npos);
}

TEST_CASE("apply: range past end of old code") {
    const Diff d = parse_unified_diff("@@ -3,1 +3,1 @@\n-c\n+C\n");
    error_of([&] { apply("a\n", d); }, ErrorCode::diff_apply);
}

TEST_CASE("apply: insertion at the top and at the end") {
    CHECK(apply("b\n", parse_unified_diff("@@ -0,0 +1,1 @@\n+a\n")) == "a\nb\n");
    CHECK(apply("a\n", parse_unified_diff("@@ -1,0 +2,1 @@\n+b\n")) == "a\nb\n");
}

TEST_CASE("apply: end-of-file newline status must agree") {
    const Diff d = parse_unified_diff("@@ -1,1 +1,1 @@\n-a\n+b\n");
    error_of([&] { apply("a", d); }, ErrorCode::diff_apply);
}

TEST_CASE("render: canonical forms") {
    CHECK(render(Diff{}).empty());
    CHECK(render(foo_bar()) == kFooBar);
    Diff nn = foo_bar();
    nn.hunks[0].lines[1].no_newline = true;
    CHECK(render(nn) == "@@ -1,1 +1,1 @@\n-foo\n+bar\n\\ No newline at end of file\n");
}

TEST_CASE("render: invariant-violating diff is rejected") {
    Diff d = foo_bar();
    d.hunks[0].old_len = 2;
    error_of([&] { render(d); }, ErrorCode::diff_invalid);
    Diff unsorted;
    unsorted.hunks = {Hunk{5, 1, 5, 1, {{LineKind::remove, "a", false}, {LineKind::add, "b", false}}},
                      Hunk{1, 1, 1, 1, {{LineKind::remove, "c", false}, {LineKind::add, "d", false}}}};
    error_of([&] { render(unsorted); }, ErrorCode::diff_invalid);
}

TEST_CASE("changed_lines") {
    const auto empty = changed_lines(Diff{});
    CHECK(empty.added.empty());
    CHECK(empty.removed.empty());

    const auto fb = changed_lines(foo_bar());
    CHECK(fb.added == std::vector<std::string>{"bar"});
    CHECK(fb.removed == std::vector<std::string>{"foo"});

    const auto ctx = changed_lines(parse_unified_diff("@@ -1,2 +1,2 @@\n a\n b\n"));
    CHECK(ctx.added.empty());
    CHECK(ctx.removed.empty());
}

TEST_CASE("inverse swaps sides") {
    const Diff inv = inverse(foo_bar());
    CHECK(render(inv) == "@@ -1,1 +1,1 @@\n+foo\n-bar\n");
    CHECK(apply("bar\n", inv) == "foo\n");
}

TEST_CASE("property: random diffs round-trip, apply and undo") {
    Rng rng(20240601);
    for (int i = 0; i < 500; ++i) {
        const auto c = test::random_diff_case(rng);
        CAPTURE(i);
        const std::string before = c.before.str();
        const std::string after = c.after.str();
        CAPTURE(before);
        CAPTURE(after);

        REQUIRE_NOTHROW(check_invariants(c.diff));
        const std::string text = render(c.diff);
        CAPTURE(text);
        const Diff parsed = parse_unified_diff(text);
        CHECK(parsed == c.diff);
        CHECK(render(parsed) == text);

        // Header counts equal observed line kinds.
        for (const auto& h : parsed.hunks) {
            std::size_t o = 0, n = 0;
            for (const auto& l : h.lines) {
                o += l.kind != LineKind::add ? 1 : 0;
                n += l.kind != LineKind::remove ? 1 : 0;
            }
            CHECK(o == h.old_len);
            CHECK(n == h.new_len);
        }

        CHECK(apply(before, parsed) == after);
        CHECK(apply(after, inverse(parsed)) == before);
        CHECK(inverse(inverse(parsed)) == parsed);
    }
}

} // TEST_SUITE
