#include "test_util.hpp"

#include "xlr/error.hpp"
#include "xlr/hashing.hpp"
#include "xlr/jsonl.hpp"
#include "xlr/provider.hpp"
#include "xlr/validator.hpp"

#include <doctest.h>

#include <array>

using namespace xlr;
using namespace xlr::validate;

namespace {

ChangeRecord synthetic(std::string id, std::string old_code, std::string diff = "") {
    return test::record(std::move(id), "cpp", std::move(old_code), std::move(diff), 1, Origin::synthetic, "src");
}

std::vector<std::pair<TokenKind, std::string>> kinds(std::string_view code) {
    std::vector<std::pair<TokenKind, std::string>> out;
    for (const auto& t : lex(code).tokens) {
        out.emplace_back(t.kind, t.text);
    }
    return out;
}

// Lexable source assembled from pieces that exercise every token kind.
std::string random_source(Rng& rng) {
    static constexpr std::array<std::string_view, 24> pieces = {
        "int",  "x1",    "_y",         "42",         "3.14e-2", "0x1F",        "1'000", "\"s{(\"", "\"e\\\"q\"",
        "'}'",  "'\\''", "/* ( ] */",  "// ) }\n",   "(",       ")",           "{",     "}",       "[",
        "]",    ";",     "<",          "->",         "@",       "\"multi\\\nline\"",
    };
    std::string out;
    const std::size_t n = rng.below(40);
    for (std::size_t i = 0; i < n; ++i) {
        // Always separate pieces so a digit never absorbs a following quote.
        switch (rng.below(6)) {
        case 0: out += "  "; break;
        case 1: out += '\n'; break;
        case 2: out += "\n#define M(a) {a}\n"; break;
        default: out += ' '; break;
        }
        out += pieces[rng.below(pieces.size())];
    }
    if (rng.below(2) == 0) {
        out += "\n\t ";
    }
    return out;
}

// Balanced code with delimiters nested to random depth.
std::string random_balanced(Rng& rng, int depth = 0) {
    static constexpr std::array<std::string_view, 3> opens = {"(", "[", "{"};
    static constexpr std::array<std::string_view, 3> closes = {")", "]", "}"};
    static constexpr std::array<std::string_view, 6> fill = {"a", "1", "\"}\"", "'('", "/* ] */", "f"};
    std::string out;
    const std::size_t n = 1 + rng.below(4);
    for (std::size_t i = 0; i < n; ++i) {
        if (depth < 4 && rng.below(2) == 0) {
            const auto k = rng.below(3);
            out += opens[k];
            out += random_balanced(rng, depth + 1);
            out += closes[k];
        } else {
            out += fill[rng.below(fill.size())];
            out += ' ';
        }
    }
    return out;
}

} // namespace

TEST_SUITE("validator") {

TEST_CASE("lex: empty input") {
    CHECK(lex("").tokens.empty());
}

TEST_CASE("lex: declaration with a line comment") {
    using K = TokenKind;
    const auto got = kinds("int x = 42; // done");
    const std::vector<std::pair<TokenKind, std::string>> want = {
        {K::identifier, "int"}, {K::identifier, "x"}, {K::punct, "="},
        {K::number, "42"},      {K::punct, ";"},      {K::comment, "// done"}};
    CHECK(got == want);
}

TEST_CASE("lex: unterminated string at line 1") {
    try {
        lex("\"abc");
        FAIL("expected LexError");
    } catch (const LexError& e) {
        CHECK(e.rule() == Rule::unterminated_literal);
        CHECK(e.line() == 1);
    }
}

TEST_CASE("lex: newline inside a character literal") {
    try {
        lex("int a;\nchar c = 'x\n';");
        FAIL("expected LexError");
    } catch (const LexError& e) {
        CHECK(e.rule() == Rule::unterminated_literal);
        CHECK(e.line() == 2);
    }
}

TEST_CASE("lex: unterminated block comment reports its opening line") {
    try {
        lex("a;\n\n/* open\n more");
        FAIL("expected LexError");
    } catch (const LexError& e) {
        CHECK(e.rule() == Rule::unterminated_comment);
        CHECK(e.line() == 3);
    }
}

TEST_CASE("lex: preprocessor lines, escapes and line numbers") {
    const auto r = lex("#include <x>\n#define F(a) \\\n  (a)\nint s = \"q\\\"(\"; char c = '\\'';\n");
    REQUIRE(r.tokens.size() >= 3);
    CHECK(r.tokens[0].kind == TokenKind::preprocessor);
    CHECK(r.tokens[0].text == "#include <x>");
    CHECK(r.tokens[1].kind == TokenKind::preprocessor);
    CHECK(r.tokens[1].line == 2);
    CHECK(r.tokens[2].text == "int");
    CHECK(r.tokens[2].line == 4);
    CHECK(check_balance(r.tokens).empty());
    // '#' after other tokens on a line is ordinary punctuation.
    CHECK(kinds("a # b")[1].first == TokenKind::punct);
}

TEST_CASE("check_balance examples") {
    CHECK(check_balance(lex("int f(){return 0;}").tokens).empty());

    const auto open = check_balance(lex("int f(){").tokens);
    REQUIRE(open.size() == 1);
    CHECK(open[0].rule == Rule::unbalanced);
    CHECK(open[0].detail.find("missing \"}\"") != std::string::npos);

    CHECK(check_balance(lex("char c = '{';").tokens).empty());

    const auto crossed = check_balance(lex("f(\n[)]").tokens);
    REQUIRE(crossed.size() == 1);
    CHECK(crossed[0].line == 2);

    CHECK_FALSE(check_balance(lex("}").tokens).empty());
    // Angle brackets are not checked.
    CHECK(check_balance(lex("std::vector<int> v; a < b;").tokens).empty());
}

TEST_CASE("validate_record examples") {
    const Ruleset none{};
    CHECK(validate_record(synthetic("ok", "int f(){return 0;}\n"), none).valid());

    const std::string java = "int f(){return 0;}\n";
    const auto corrupted = translate::mock_translate(java, 1.0, "id", 0);
    CHECK(corrupted == "int f(){return 0;\n");
    const auto v = validate_record(synthetic("bad", corrupted), none);
    CHECK_FALSE(v.valid());
    CHECK(v.has(Rule::unbalanced));

    const auto leak = validate_record(synthetic("leak", "void f() {\n  System.out.println(1);\n}\n"),
                                      default_ruleset("cpp"));
    REQUIRE(leak.has(Rule::leakage));
    CHECK(leak.violations.back().line == 2);

    const auto apply_fail =
        validate_record(synthetic("apply", "int a;\n", "@@ -1,1 +1,1 @@\n-int b;\n+int c;\n"), none);
    CHECK(apply_fail.has(Rule::diff_apply));

    const auto emptied =
        validate_record(synthetic("empty", "// note\nint a;\n", "@@ -2,1 +1,0 @@\n-int a;\n"), none);
    CHECK(emptied.has(Rule::empty));

    const auto literal = validate_record(synthetic("lit", "int a;\n", "@@ -1,1 +1,1 @@\n-int a;\n+char* s = \"x;\n"), none);
    CHECK(literal.has(Rule::unterminated_literal));

    CHECK_THROWS_AS(validate_record(test::record("real", "cpp", "", "", 0), none), Error);
}

TEST_CASE("validate_record checks the post-change code") {
    // Balanced before, unbalanced after.
    const auto v = validate_record(synthetic("after", "f(a);\n", "@@ -1,1 +1,1 @@\n-f(a);\n+f(a;\n"), {});
    REQUIRE(v.has(Rule::unbalanced));
    CHECK(v.violations[0].detail.find("after change") != std::string::npos);
}

TEST_CASE("default denylist") {
    const auto cpp = default_ruleset("cpp").denylist;
    const std::vector<std::string> want = {"System.out", "@Override", "import java", "public static void main"};
    CHECK(cpp == want);
}

TEST_CASE("filter_corpus examples") {
    std::vector<ChangeRecord> five;
    for (int i = 0; i < 5; ++i) {
        five.push_back(synthetic("s" + std::to_string(i), "int f" + std::to_string(i) + "(){return 0;}\n"));
    }
    auto all = filter_corpus(five, {});
    CHECK(all.kept.size() == 5);
    CHECK(all.rejected.empty());

    five[2].old_code = translate::mock_translate(five[2].old_code, 1.0, five[2].id, 0);
    auto one = filter_corpus(five, {});
    CHECK(one.kept.size() == 4);
    REQUIRE(one.rejected.size() == 1);
    CHECK(one.rejected[0].record.id == "s2");
    CHECK(one.rejected[0].verdict.violations[0].rule == Rule::unbalanced);

    auto none = filter_corpus({}, {});
    CHECK(none.kept.empty());
    CHECK(none.rejected.empty());
}

TEST_CASE("rejection report") {
    const auto dir = test::scratch_dir("validator_report");
    std::vector<ChangeRecord> rs = {synthetic("a", "f(\n"), synthetic("b", "x;\n")};
    const auto result = filter_corpus(rs, {});
    CHECK(write_rejection_report(result.rejected, dir / "rejected.jsonl") == 1);
    const auto text = test::read_file(dir / "rejected.jsonl");
    const auto j = nlohmann::ordered_json::parse(text);
    CHECK(j["id"] == "a");
    CHECK(j["rule"] == "unbalanced");
    CHECK(j["line"] == 1);
    CHECK(j["detail"].get<std::string>().find("missing \")\"") != std::string::npos);
}

TEST_CASE("property: lexing reconstructs the input byte for byte") {
    Rng rng(3);
    for (int i = 0; i < 1000; ++i) {
        const auto src = random_source(rng);
        CAPTURE(src);
        LexResult r;
        REQUIRE_NOTHROW(r = lex(src));
        CHECK(r.reconstruct() == src);
    }
}

TEST_CASE("property: delimiters inside literals and comments never count") {
    const std::string delims = "(){}[]";
    for (char d : delims) {
        for (const std::string& shell :
             {std::string("\"") + d + "\"", std::string("'") + d + "'", std::string("/* ") + d + " */",
              std::string("// ") + d + "\n", std::string("\"\\\"") + d + "\"", std::string("\n#define X ") + d + "\n"}) {
            const std::string code = "f(" + shell + ");\n";
            CAPTURE(code);
            CHECK(check_balance(lex(code).tokens).empty());
            CHECK(validate_record(synthetic("s", code), {}).valid());
        }
    }
}

TEST_CASE("property: deleting any single delimiter breaks balance") {
    Rng rng(5);
    for (int i = 0; i < 300; ++i) {
        const std::string code = random_balanced(rng) + ";\n";
        const auto lexed = lex(code);
        REQUIRE(check_balance(lexed.tokens).empty());
        for (std::size_t k = 0; k < lexed.tokens.size(); ++k) {
            const auto& t = lexed.tokens[k];
            if (t.kind != TokenKind::punct || std::string_view("(){}[]").find(t.text) == std::string_view::npos) {
                continue;
            }
            LexResult cut = lexed;
            cut.tokens.erase(cut.tokens.begin() + static_cast<std::ptrdiff_t>(k));
            const std::string mutated = cut.reconstruct();
            CAPTURE(mutated);
            CHECK_FALSE(check_balance(lex(mutated).tokens).empty());
            const auto v = validate_record(synthetic("m", mutated), {});
            CHECK(v.has(Rule::unbalanced));
        }
    }
}

TEST_CASE("property: filter_corpus partitions its input and matches the serial reference") {
    Rng rng(9);
    std::vector<ChangeRecord> rs;
    for (int i = 0; i < 400; ++i) {
        std::string code = random_balanced(rng) + ";\n";
        if (rng.below(4) == 0) {
            code = translate::mock_translate("f(){" + code + "}\n", 1.0, "x", 0);
        }
        rs.push_back(synthetic("r" + std::to_string(i), code));
    }
    const auto par = filter_corpus(rs, default_ruleset("cpp"));
    const auto ser = filter_corpus_serial(rs, default_ruleset("cpp"));
    CHECK(par.kept == ser.kept);
    REQUIRE(par.rejected.size() == ser.rejected.size());
    for (std::size_t i = 0; i < par.rejected.size(); ++i) {
        CHECK(par.rejected[i].record == ser.rejected[i].record);
        CHECK(par.rejected[i].verdict.violations == ser.rejected[i].verdict.violations);
    }
    CHECK(par.kept.size() + par.rejected.size() == rs.size());
    // Order preserved in both halves: ids appear in increasing input position.
    std::size_t k = 0, r = 0;
    for (const auto& rec : rs) {
        if (k < par.kept.size() && par.kept[k].id == rec.id) {
            ++k;
        } else {
            REQUIRE(r < par.rejected.size());
            CHECK(par.rejected[r].record.id == rec.id);
            ++r;
        }
    }
    CHECK(k == par.kept.size());
    CHECK(r == par.rejected.size());
    CHECK_FALSE(par.rejected.empty());
}

} // TEST_SUITE
