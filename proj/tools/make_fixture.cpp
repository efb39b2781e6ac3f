#include "planted_fixture.hpp"

#include "xlr/corpus.hpp"
#include "xlr/error.hpp"

#include <iostream>

#include <CLI11.hpp>

int main(int argc, char** argv) {
    CLI::App app{"Write the bundled planted-signal corpus as JSONL"};
    std::string out = "corpus.jsonl";
    xlr::fixture::BundleOptions o;
    app.add_option("-o,--out", out, "Output path");
    app.add_option("--seed", o.seed, "Generator seed");
    app.add_option("--noise", o.noise, "Fraction of records whose signal disagrees with the label");
    CLI11_PARSE(app, argc, argv);
    try {
        const auto records = xlr::fixture::bundled_corpus(o);
        const auto n = xlr::write_jsonl(records, out);
        std::cerr << "wrote " << n << " records to " << out << '\n';
    } catch (const xlr::Error& e) {
        std::cerr << "make_fixture: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
