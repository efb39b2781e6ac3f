#include "xlr/model.hpp"

#include "xlr/diffkit.hpp"
#include "xlr/error.hpp"
#include "xlr/hashing.hpp"
#include "xlr/parallel.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iostream>
#include <numeric>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace xlr {

int parallel_threads() noexcept {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

} // namespace xlr

namespace xlr::model {
namespace {

constexpr std::string_view kAddPrefix = "+";
constexpr std::string_view kRemovePrefix = "\xE2\x88\x92"; // U+2212 MINUS SIGN
constexpr std::string_view kBigramJoin = "\xE2\x96\xB7";   // U+25B7

bool is_word(char c) {
    return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_';
}

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f'; }

void check_hash_dim(std::size_t hash_dim) {
    if (hash_dim == 0 || !std::has_single_bit(hash_dim) || hash_dim > (std::size_t{1} << 32)) {
        throw Error(ErrorCode::invalid_argument,
                    "hash_dim must be a power of two in [1, 2^32], got " + std::to_string(hash_dim));
    }
}

void add_line_features(std::string_view line, std::string_view prefix, std::size_t mask,
                       std::vector<std::uint32_t>& out) {
    const auto tokens = tokenize_line(line);
    std::string prev;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        std::string cur = std::string(prefix) + tokens[i];
        out.push_back(static_cast<std::uint32_t>(fnv1a64(cur) & mask));
        if (i > 0) {
            out.push_back(static_cast<std::uint32_t>(fnv1a64(prev + std::string(kBigramJoin) + cur) & mask));
        }
        prev = std::move(cur);
    }
}

// Numerically stable -[y ln p + (1-y) ln(1-p)] with p = sigmoid(z).
double logistic_loss(double z, int y) noexcept {
    return std::log1p(std::exp(-std::abs(z))) + std::max(z, 0.0) - (y == 1 ? z : 0.0);
}

void require_finite(double v, const char* what) {
    if (!std::isfinite(v)) {
        throw Error(ErrorCode::numeric, std::string("non-finite ") + what);
    }
}

double dot(std::span<const double> w, const FeatureVector& x) {
    double s = 0.0;
    for (const auto& [i, v] : x.entries) {
        s += w[i] * v;
    }
    return s;
}

void check_shapes(const ModelWeights& model, const FeatureVector& x) {
    if (!x.entries.empty() && x.entries.back().first >= model.weights.size()) {
        throw Error(ErrorCode::invalid_argument, "feature index outside the model's hash_dim");
    }
}

} // namespace

double FeatureVector::norm() const noexcept {
    double s = 0.0;
    for (const auto& [i, v] : entries) {
        s += v * v;
    }
    return std::sqrt(s);
}

ModelWeights ModelWeights::zeros(const Hyperparams& hp, double threshold) {
    check_hash_dim(hp.hash_dim);
    ModelWeights m;
    m.weights.assign(hp.hash_dim, 0.0);
    m.hyperparams = hp;
    m.threshold = threshold;
    return m;
}

bool ModelWeights::finite() const noexcept {
    return std::isfinite(bias) &&
           std::all_of(weights.begin(), weights.end(), [](double v) { return std::isfinite(v); });
}

std::vector<std::string> tokenize_line(std::string_view line) {
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < line.size()) {
        if (is_space(line[i])) {
            ++i;
        } else if (is_word(line[i])) {
            const std::size_t start = i;
            while (i < line.size() && is_word(line[i])) {
                ++i;
            }
            out.emplace_back(line.substr(start, i - start));
        } else {
            out.emplace_back(1, line[i]);
            ++i;
        }
    }
    return out;
}

FeatureVector featurize(const ChangeRecord& record, std::size_t hash_dim) {
    check_hash_dim(hash_dim);
    const auto changed = diff::changed_lines(diff::parse_unified_diff(record.diff));
    const std::size_t mask = hash_dim - 1;

    std::vector<std::uint32_t> hashed;
    for (const auto& line : changed.added) {
        add_line_features(line, kAddPrefix, mask, hashed);
    }
    for (const auto& line : changed.removed) {
        add_line_features(line, kRemovePrefix, mask, hashed);
    }
    std::sort(hashed.begin(), hashed.end());

    FeatureVector fv;
    fv.hash_dim = hash_dim;
    for (std::uint32_t idx : hashed) {
        if (!fv.entries.empty() && fv.entries.back().first == idx) {
            fv.entries.back().second += 1.0;
        } else {
            fv.entries.emplace_back(idx, 1.0);
        }
    }
    if (const double n = fv.norm(); n > 0.0) {
        for (auto& e : fv.entries) {
            e.second /= n;
        }
    }
    return fv;
}

std::vector<FeatureVector> featurize_batch_serial(std::span<const ChangeRecord> records, std::size_t hash_dim) {
    std::vector<FeatureVector> out;
    out.reserve(records.size());
    for (const auto& r : records) {
        out.push_back(featurize(r, hash_dim));
    }
    return out;
}

std::vector<FeatureVector> featurize_batch(std::span<const ChangeRecord> records, std::size_t hash_dim) {
    check_hash_dim(hash_dim);
    std::vector<FeatureVector> out(records.size());
    parallel_for(records.size(), [&](std::size_t i) { out[i] = featurize(records[i], hash_dim); });
    return out;
}

double sigmoid(double z) noexcept {
    if (z >= 0.0) {
        return 1.0 / (1.0 + std::exp(-z));
    }
    const double e = std::exp(z);
    return e / (1.0 + e);
}

double score(const ModelWeights& model, const FeatureVector& x) noexcept { return dot(model.weights, x) + model.bias; }

double mean_loss(const ModelWeights& model, std::span<const Example> batch) {
    if (batch.empty()) {
        throw Error(ErrorCode::invalid_argument, "loss over an empty batch");
    }
    double total = 0.0;
    for (const auto& ex : batch) {
        check_shapes(model, *ex.x);
        const double z = score(model, *ex.x);
        require_finite(z, "score");
        total += logistic_loss(z, ex.y);
    }
    double sq = 0.0;
    for (double w : model.weights) {
        sq += w * w;
    }
    const double loss = total / static_cast<double>(batch.size()) + 0.5 * model.hyperparams.l2 * sq;
    require_finite(loss, "loss");
    return loss;
}

LossGrad loss_and_grad(const ModelWeights& model, std::span<const Example> batch) {
    if (batch.empty()) {
        throw Error(ErrorCode::invalid_argument, "loss_and_grad needs a non-empty batch");
    }
    LossGrad out;
    out.grad_weights.assign(model.weights.size(), 0.0);
    const double inv_n = 1.0 / static_cast<double>(batch.size());
    double total = 0.0;
    for (const auto& ex : batch) {
        check_shapes(model, *ex.x);
        const double z = score(model, *ex.x);
        require_finite(z, "score");
        total += logistic_loss(z, ex.y);
        const double residual = (sigmoid(z) - ex.y) * inv_n;
        for (const auto& [i, v] : ex.x->entries) {
            out.grad_weights[i] += residual * v;
        }
        out.grad_bias += residual;
    }
    const double l2 = model.hyperparams.l2;
    double sq = 0.0;
    for (std::size_t i = 0; i < model.weights.size(); ++i) {
        sq += model.weights[i] * model.weights[i];
        out.grad_weights[i] += l2 * model.weights[i];
    }
    out.loss = total * inv_n + 0.5 * l2 * sq;
    require_finite(out.loss, "loss");
    require_finite(out.grad_bias, "bias gradient");
    for (double g : out.grad_weights) {
        require_finite(g, "weight gradient");
    }
    return out;
}

ModelWeights train_on_features(std::span<const FeatureVector> features, std::span<const int> labels,
                               const Hyperparams& hp, TrainReport* report, double threshold) {
    if (features.empty()) {
        throw Error(ErrorCode::invalid_argument, "cannot train on an empty training set");
    }
    if (features.size() != labels.size()) {
        throw Error(ErrorCode::invalid_argument, "features and labels differ in length");
    }
    ModelWeights model = ModelWeights::zeros(hp, threshold);
    const double decay = 1.0 - hp.learning_rate * hp.l2;
    if (!(decay > 0.0) || !std::isfinite(hp.learning_rate)) {
        throw Error(ErrorCode::invalid_argument, "learning_rate * l2 must be below 1");
    }
    for (const auto& x : features) {
        check_shapes(model, x);
    }

    const bool has_pos = std::find(labels.begin(), labels.end(), 1) != labels.end();
    const bool has_neg = std::find(labels.begin(), labels.end(), 0) != labels.end();
    if (!(has_pos && has_neg)) {
        std::cerr << "[warn] training set contains a single label class\n";
    }
    if (report) {
        report->single_class = !(has_pos && has_neg);
        report->epoch_loss.clear();
    }

    // w = scale * v, so the l2 shrink per step is O(1) instead of O(hash_dim).
    std::vector<double>& v = model.weights;
    double scale = 1.0;
    auto fold_scale = [&] {
        for (double& w : v) {
            w *= scale;
        }
        scale = 1.0;
    };

    std::vector<Example> examples;
    examples.reserve(features.size());
    for (std::size_t i = 0; i < features.size(); ++i) {
        examples.push_back({&features[i], labels[i]});
    }

    std::vector<std::size_t> order(features.size());
    Rng rng(derive_seed(hp.seed, "train/shuffle"));
    for (std::size_t epoch = 0; epoch < hp.epochs; ++epoch) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        rng.shuffle(order.begin(), order.end());
        for (std::size_t idx : order) {
            const FeatureVector& x = features[idx];
            const double z = scale * dot(v, x) + model.bias;
            if (!std::isfinite(z)) {
                throw Error(ErrorCode::numeric, "non-finite score in epoch " + std::to_string(epoch + 1) +
                                                    " at record " + std::to_string(idx));
            }
            const double residual = sigmoid(z) - labels[idx];
            scale *= decay;
            const double step = hp.learning_rate * residual / scale;
            for (const auto& [i, value] : x.entries) {
                v[i] -= step * value;
            }
            model.bias -= hp.learning_rate * residual;
            if (scale < 1e-9) {
                fold_scale();
            }
        }
        fold_scale();
        if (!model.finite()) {
            throw Error(ErrorCode::numeric, "weights became non-finite in epoch " + std::to_string(epoch + 1) +
                                                "; lower learning_rate (currently " +
                                                std::to_string(hp.learning_rate) + ")");
        }
        if (report) {
            report->epoch_loss.push_back(mean_loss(model, examples));
        }
    }
    return model;
}

ModelWeights train_native(std::span<const ChangeRecord> train, const Hyperparams& hp, TrainReport* report,
                          double threshold) {
    if (train.empty()) {
        throw Error(ErrorCode::invalid_argument, "cannot train on an empty training set");
    }
    const auto features = featurize_batch(train, hp.hash_dim);
    std::vector<int> labels;
    labels.reserve(train.size());
    for (const auto& r : train) {
        labels.push_back(r.label);
    }
    return train_on_features(features, labels, hp, report, threshold);
}

Prediction predict(const ModelWeights& model, const ChangeRecord& record) {
    const FeatureVector x = featurize(record, model.weights.size());
    const double p = sigmoid(score(model, x));
    return {p, p >= model.threshold ? 1 : 0};
}

std::vector<double> predict_batch_serial(const ModelWeights& model, std::span<const ChangeRecord> records) {
    std::vector<double> out;
    out.reserve(records.size());
    for (const auto& r : records) {
        out.push_back(predict(model, r).probability);
    }
    return out;
}

std::vector<double> predict_batch(const ModelWeights& model, std::span<const ChangeRecord> records) {
    std::vector<double> out(records.size());
    parallel_for(records.size(), [&](std::size_t i) { out[i] = predict(model, records[i]).probability; });
    return out;
}

// ---------------------------------------------------------------------------
// model.bin

namespace {

constexpr char kMagic[8] = {'X', 'L', 'R', 'M', 'O', 'D', 'E', 'L'};
constexpr std::uint32_t kVersion = 1;

class Writer {
public:
    explicit Writer(std::ostream& out) : out_(out) {}
    void u32(std::uint32_t v) { bytes(v, 4); }
    void u64(std::uint64_t v) { bytes(v, 8); }
    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
    void str(const std::string& s) {
        u32(static_cast<std::uint32_t>(s.size()));
        out_.write(s.data(), static_cast<std::streamsize>(s.size()));
    }

private:
    void bytes(std::uint64_t v, int n) {
        char buf[8];
        for (int i = 0; i < n; ++i) {
            buf[i] = static_cast<char>((v >> (8 * i)) & 0xff);
        }
        out_.write(buf, n);
    }
    std::ostream& out_;
};

class Reader {
public:
    Reader(std::istream& in, std::string name) : in_(in), name_(std::move(name)) {}
    std::uint32_t u32() { return static_cast<std::uint32_t>(bytes(4)); }
    std::uint64_t u64() { return bytes(8); }
    double f64() { return std::bit_cast<double>(u64()); }
    std::string str() {
        const auto n = u32();
        if (n > (1u << 20)) {
            fail("implausible string length");
        }
        std::string s(n, '\0');
        if (!in_.read(s.data(), n)) {
            fail("truncated file");
        }
        return s;
    }
    [[noreturn]] void fail(const std::string& what) {
        throw Error(ErrorCode::io, "model file '" + name_ + "': " + what);
    }

private:
    std::uint64_t bytes(int n) {
        unsigned char buf[8] = {};
        if (!in_.read(reinterpret_cast<char*>(buf), n)) {
            fail("truncated file");
        }
        std::uint64_t v = 0;
        for (int i = 0; i < n; ++i) {
            v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
        }
        return v;
    }
    std::istream& in_;
    std::string name_;
};

} // namespace

void save_bundle(const ModelBundle& bundle, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw Error(ErrorCode::io, "cannot write '" + path.string() + "'");
    }
    Writer w(out);
    out.write(kMagic, sizeof kMagic);
    w.u32(kVersion);
    w.u32(static_cast<std::uint32_t>(bundle.size()));
    for (const auto& [name, m] : bundle) {
        if (!m.finite()) {
            throw Error(ErrorCode::numeric, "refusing to save non-finite model '" + name + "'");
        }
        w.str(name);
        w.u64(m.hyperparams.hash_dim);
        w.f64(m.hyperparams.learning_rate);
        w.u64(m.hyperparams.epochs);
        w.f64(m.hyperparams.l2);
        w.u64(m.hyperparams.seed);
        w.f64(m.threshold);
        w.f64(m.bias);
        std::uint64_t nnz = 0;
        for (double v : m.weights) {
            nnz += v != 0.0 ? 1 : 0;
        }
        w.u64(nnz);
        for (std::size_t i = 0; i < m.weights.size(); ++i) {
            if (m.weights[i] != 0.0) {
                w.u32(static_cast<std::uint32_t>(i));
                w.f64(m.weights[i]);
            }
        }
    }
    if (!out) {
        throw Error(ErrorCode::io, "write failed for '" + path.string() + "'");
    }
}

ModelBundle load_bundle(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorCode::io, "cannot read model file '" + path.string() + "'");
    }
    Reader r(in, path.string());
    char magic[8];
    if (!in.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof magic) != 0) {
        r.fail("not a model file");
    }
    if (r.u32() != kVersion) {
        r.fail("unsupported version");
    }
    ModelBundle bundle;
    const auto count = r.u32();
    for (std::uint32_t k = 0; k < count; ++k) {
        std::string name = r.str();
        Hyperparams hp;
        hp.hash_dim = r.u64();
        if (hp.hash_dim == 0 || !std::has_single_bit(hp.hash_dim) || hp.hash_dim > (std::size_t{1} << 32)) {
            r.fail("bad hash_dim");
        }
        hp.learning_rate = r.f64();
        hp.epochs = r.u64();
        hp.l2 = r.f64();
        hp.seed = r.u64();
        ModelWeights m = ModelWeights::zeros(hp);
        m.threshold = r.f64();
        m.bias = r.f64();
        const auto nnz = r.u64();
        if (nnz > hp.hash_dim) {
            r.fail("too many weights");
        }
        for (std::uint64_t j = 0; j < nnz; ++j) {
            const auto idx = r.u32();
            const double v = r.f64();
            if (idx >= hp.hash_dim) {
                r.fail("weight index out of range");
            }
            m.weights[idx] = v;
        }
        if (!m.finite()) {
            r.fail("non-finite weights");
        }
        bundle.emplace(std::move(name), std::move(m));
    }
    return bundle;
}

} // namespace xlr::model
