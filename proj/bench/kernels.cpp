// Serial reference vs OpenMP kernels on the planted-signal corpus.
#include "planted_fixture.hpp"

#include "xlr/model.hpp"
#include "xlr/parallel.hpp"
#include "xlr/provider.hpp"
#include "xlr/validator.hpp"

#include <benchmark/benchmark.h>

#include <vector>

using namespace xlr;

namespace {

const std::vector<ChangeRecord>& corpus() {
    static const auto records = fixture::planted_records({"cpp", 4000, "b", 0.05, 0.0, 3});
    return records;
}

const std::vector<ChangeRecord>& synthetic() {
    static const auto records = [] {
        auto rs = fixture::planted_records({"java", 4000, "s", 0.05, 0.02, 3});
        for (auto& r : rs) {
            r.old_code = translate::mock_translate(r.old_code, 0.1, r.id, 1);
            r.diff = translate::mock_translate(r.diff);
            r.language = "cpp";
            r.origin = Origin::synthetic;
            r.source_id = r.id;
        }
        return rs;
    }();
    return records;
}

const model::ModelWeights& trained() {
    static const auto m = model::train_native(std::span(corpus()).first(500), model::Hyperparams{});
    return m;
}

void set_counters(benchmark::State& state, std::size_t n) {
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * n));
    state.counters["threads"] = parallel_threads();
}

void BM_featurize_serial(benchmark::State& state) {
    for (auto _ : state) {
        benchmark::DoNotOptimize(model::featurize_batch_serial(corpus(), model::kDefaultHashDim));
    }
    set_counters(state, corpus().size());
}

void BM_featurize_parallel(benchmark::State& state) {
    for (auto _ : state) {
        benchmark::DoNotOptimize(model::featurize_batch(corpus(), model::kDefaultHashDim));
    }
    set_counters(state, corpus().size());
}

void BM_predict_serial(benchmark::State& state) {
    const auto& m = trained();
    for (auto _ : state) {
        benchmark::DoNotOptimize(model::predict_batch_serial(m, corpus()));
    }
    set_counters(state, corpus().size());
}

void BM_predict_parallel(benchmark::State& state) {
    const auto& m = trained();
    for (auto _ : state) {
        benchmark::DoNotOptimize(model::predict_batch(m, corpus()));
    }
    set_counters(state, corpus().size());
}

void BM_filter_serial(benchmark::State& state) {
    const auto rules = validate::default_ruleset("cpp");
    for (auto _ : state) {
        benchmark::DoNotOptimize(validate::filter_corpus_serial(synthetic(), rules));
    }
    set_counters(state, synthetic().size());
}

void BM_filter_parallel(benchmark::State& state) {
    const auto rules = validate::default_ruleset("cpp");
    for (auto _ : state) {
        benchmark::DoNotOptimize(validate::filter_corpus(synthetic(), rules));
    }
    set_counters(state, synthetic().size());
}

} // namespace

BENCHMARK(BM_featurize_serial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_featurize_parallel)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_predict_serial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_predict_parallel)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_filter_serial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_filter_parallel)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
