#include "planted_fixture.hpp"

#include "xlr/diffkit.hpp"
#include "xlr/error.hpp"
#include "xlr/hashing.hpp"
#include "xlr/model.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <string_view>

namespace xlr::fixture {

namespace {

constexpr std::array<std::string_view, 9> kJavaStatements = {
    "count += v;",
    "boolean ready = v > 0;",
    "String name = \"w\" + v;",
    "ArrayList<Integer> items = new ArrayList<>();",
    "System.out.println(v);",
    "if (label == null) { label = \"x\"; }",
    "final int limit = v * 2;",
    "count = Math.max(count, v);",
    "int[] buf = new int[v + 1];",
};

constexpr std::array<std::string_view, 9> kCppStatements = {
    "count_ += v;",
    "bool ready = v > 0;",
    "std::string name = \"w\" + std::to_string(v);",
    "std::vector<int> items;",
    "std::cout << v << '\\n';",
    "if (label_ == nullptr) { label_ = \"x\"; }",
    "const int limit = v * 2;",
    "count_ = std::max(count_, v);",
    "int buf[4] = {v, v, v, v};",
};

constexpr std::array<std::string_view, 8> kShortStatements = {
    "count_ += v;", "v = 0;", "return count_;", "ready = true;", "items.clear();", "++count_;", "label_ = nullptr;",
    "limit = v * 2;",
};

constexpr std::array<std::string_view, 6> kSignalNotes = {
    "revisit this", "handle overflow", "check bounds", "remove once callers migrate", "confirm with owner",
    "thread safety",
};

constexpr std::array<std::string_view, 6> kNeutralNotes = {
    "keep in sync with size()", "bounds checked by caller", "cheap path first", "see header for contract",
    "value is never negative", "matches the legacy layout",
};

constexpr std::array<std::string_view, 8> kClassNames = {
    "Widget", "Buffer", "Session", "Ledger", "Parser", "Channel", "Cursor", "Registry",
};

constexpr std::array<std::string_view, 6> kMethodNames = {
    "update", "apply", "record", "resize", "refresh", "push",
};

constexpr std::string_view kIndent = "        ";

template <std::size_t N>
std::string_view pick(Rng& rng, const std::array<std::string_view, N>& pool) {
    return pool[rng.below(N)];
}

std::string make_id(const std::string& prefix, std::size_t i) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04zu", i);
    return prefix + "-" + buf;
}

std::string join_lines(const std::vector<std::string>& lines) {
    std::string out;
    for (const auto& l : lines) {
        out += l;
        out += '\n';
    }
    return out;
}

ChangeRecord make_record(const PlantedOptions& o, std::size_t i, int label, bool signal, bool leak, Rng& rng) {
    const bool java = o.language == "java";
    const auto& statements = java ? kJavaStatements : kCppStatements;
    const std::string name = std::string(pick(rng, kClassNames)) + std::to_string(i);
    const std::string method = std::string(pick(rng, kMethodNames));

    std::vector<std::string> body;
    const std::size_t n_body = 2 + rng.below(3);
    for (std::size_t k = 0; k < n_body; ++k) {
        body.push_back(std::string(kIndent) + std::string(pick(rng, statements)));
    }

    std::vector<std::string> lines;
    if (java) {
        lines = {"public class " + name + " {", "    private int count;", "    private String label = null;", "",
                 "    public void " + method + "(int v) {"};
    } else {
        lines = {"class " + name + " {", "public:", "    void " + method + "(int v) {"};
    }
    const std::size_t body_at = lines.size();
    lines.insert(lines.end(), body.begin(), body.end());
    if (java) {
        lines.insert(lines.end(), {"    }", ""});
        if (leak) {
            lines.push_back("    @Override");
        }
        lines.insert(lines.end(), {"    public int size() {", "        return count;", "    }", "}"});
    } else {
        lines.insert(lines.end(), {"    }", "", "    int size() const {", "        return count_;", "    }", "",
                                   "private:", "    int count_ = 0;", "    const char* label_ = nullptr;", "};"});
    }

    // Replace one body statement; the hunk keeps one line of context on each side.
    const std::size_t r = body_at + rng.below(n_body);
    std::string replacement;
    do {
        replacement = std::string(kIndent) + std::string(pick(rng, statements));
    } while (replacement == lines[r]);

    std::vector<std::string> added;
    if (signal) {
        added.push_back(std::string(kIndent) + "// " + kSignalToken + ": " + std::string(pick(rng, kSignalNotes)));
    } else if (rng.uniform() < 0.3) {
        added.push_back(std::string(kIndent) + "// " + std::string(pick(rng, kNeutralNotes)));
    }
    added.push_back(replacement);
    if (rng.uniform() < 0.5) {
        added.push_back(std::string(kIndent) + std::string(pick(rng, statements)));
    }

    diff::Hunk h;
    h.old_start = r; // 1-based index of the line before r
    h.new_start = r;
    h.lines.push_back({diff::LineKind::context, lines[r - 1], false});
    h.lines.push_back({diff::LineKind::remove, lines[r], false});
    for (const auto& a : added) {
        h.lines.push_back({diff::LineKind::add, a, false});
    }
    h.lines.push_back({diff::LineKind::context, lines[r + 1], false});
    h.old_len = 3;
    h.new_len = 2 + added.size();

    ChangeRecord rec;
    rec.id = make_id(o.id_prefix.empty() ? o.language : o.id_prefix, i);
    rec.language = o.language;
    rec.old_code = join_lines(lines);
    rec.diff = diff::render(diff::Diff{{h}});
    rec.label = label;
    rec.origin = Origin::real;
    return rec;
}

} // namespace

std::vector<ChangeRecord> planted_records(const PlantedOptions& o) {
    if (o.language != "java" && o.language != "cpp") {
        throw Error(ErrorCode::invalid_argument, "planted fixture supports java and cpp only");
    }
    Rng rng(derive_seed(o.seed, "fixture/" + o.language));

    std::vector<int> labels(o.count);
    for (std::size_t i = 0; i < o.count; ++i) {
        labels[i] = static_cast<int>(i % 2);
    }
    rng.shuffle(labels.begin(), labels.end());

    std::vector<ChangeRecord> out;
    out.reserve(o.count);
    for (std::size_t i = 0; i < o.count; ++i) {
        const bool flip = rng.uniform() < o.noise;
        const bool signal = (labels[i] == 1) != flip;
        const bool leak = o.language == "java" && rng.uniform() < o.leakage_rate;
        out.push_back(make_record(o, i, labels[i], signal, leak, rng));
    }
    return out;
}

std::vector<ChangeRecord> separable_records(std::size_t count, std::uint64_t seed) {
    Rng rng(derive_seed(seed, "fixture/separable"));
    std::vector<int> labels(count);
    for (std::size_t i = 0; i < count; ++i) {
        labels[i] = static_cast<int>(i % 2);
    }
    rng.shuffle(labels.begin(), labels.end());

    std::vector<ChangeRecord> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        diff::Hunk h;
        h.new_start = 1;
        if (labels[i] == 1) {
            h.lines.push_back({diff::LineKind::add, std::string("// ") + kSignalToken, false});
        }
        h.lines.push_back({diff::LineKind::add, std::string(pick(rng, kShortStatements)), false});
        h.new_len = h.lines.size();

        ChangeRecord rec;
        rec.id = make_id("sep", i);
        rec.language = "cpp";
        rec.diff = diff::render(diff::Diff{{h}});
        rec.label = labels[i];
        out.push_back(std::move(rec));
    }
    return out;
}

bool has_signal(const ChangeRecord& record) {
    for (const auto& line : diff::changed_lines(diff::parse_unified_diff(record.diff)).added) {
        const auto tokens = model::tokenize_line(line);
        if (std::find(tokens.begin(), tokens.end(), kSignalToken) != tokens.end()) {
            return true;
        }
    }
    return false;
}

std::vector<ChangeRecord> bundled_corpus(const BundleOptions& o) {
    auto out = planted_records({"java", 300, "", o.noise, o.leakage_rate, o.seed});
    auto cpp = planted_records({"cpp", 100, "", o.noise, 0.0, o.seed});
    out.insert(out.end(), cpp.begin(), cpp.end());
    return out;
}

} // namespace xlr::fixture
