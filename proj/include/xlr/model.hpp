#pragma once

#include "xlr/corpus.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace xlr::model {

inline constexpr std::size_t kDefaultHashDim = std::size_t{1} << 18;

/// Sparse vector: (index, value) pairs sorted by index, indices unique.
struct FeatureVector {
    std::vector<std::pair<std::uint32_t, double>> entries;
    std::size_t hash_dim = kDefaultHashDim;

    bool empty() const noexcept { return entries.empty(); }
    double norm() const noexcept;
};

struct Hyperparams {
    double learning_rate = 0.1;
    std::size_t epochs = 5;
    double l2 = 1e-4;
    std::size_t hash_dim = kDefaultHashDim;
    std::uint64_t seed = 0;

    friend bool operator==(const Hyperparams&, const Hyperparams&) = default;
};

struct ModelWeights {
    std::vector<double> weights;
    double bias = 0.0;
    Hyperparams hyperparams;
    double threshold = 0.5;

    static ModelWeights zeros(const Hyperparams& hp, double threshold = 0.5);
    bool finite() const noexcept;

    friend bool operator==(const ModelWeights& a, const ModelWeights& b) = default;
};

/// Tokens of one changed line: maximal [A-Za-z0-9_] runs and single
/// non-space characters.
std::vector<std::string> tokenize_line(std::string_view line);

/// Hashed unigrams and within-line bigrams of "+"/"−"-prefixed tokens from
/// the diff's added/removed lines, counted, then L2-normalized.
/// Throws Error{diff_parse} when the diff does not parse.
FeatureVector featurize(const ChangeRecord& record, std::size_t hash_dim = kDefaultHashDim);

/// Parallel over records; result i is featurize(records[i]).
std::vector<FeatureVector> featurize_batch(std::span<const ChangeRecord> records, std::size_t hash_dim);
std::vector<FeatureVector> featurize_batch_serial(std::span<const ChangeRecord> records, std::size_t hash_dim);

struct Example {
    const FeatureVector* x = nullptr;
    int y = 0;
};

struct LossGrad {
    double loss = 0.0;
    std::vector<double> grad_weights; // dense, length hash_dim
    double grad_bias = 0.0;
};

/// Mean logistic loss plus (l2/2)*||w||^2 (bias unregularized) and its exact
/// gradient. Throws Error{numeric} on any non-finite intermediate.
LossGrad loss_and_grad(const ModelWeights& model, std::span<const Example> batch);

/// Mean loss only (no gradient buffers).
double mean_loss(const ModelWeights& model, std::span<const Example> batch);

double sigmoid(double z) noexcept;
double score(const ModelWeights& model, const FeatureVector& x) noexcept;

struct TrainReport {
    std::vector<double> epoch_loss; // mean training loss after each epoch
    bool single_class = false;
};

/// Batch-size-1 SGD with a seeded shuffle per epoch. Deterministic for fixed
/// (records, hyperparams). Throws on empty input or non-finite weights.
ModelWeights train_native(std::span<const ChangeRecord> train, const Hyperparams& hp, TrainReport* report = nullptr,
                          double threshold = 0.5);

/// Same as train_native on pre-computed features.
ModelWeights train_on_features(std::span<const FeatureVector> features, std::span<const int> labels,
                               const Hyperparams& hp, TrainReport* report = nullptr, double threshold = 0.5);

struct Prediction {
    double probability = 0.5;
    int decision = 1;
};

/// decision = 1 iff probability >= model.threshold.
Prediction predict(const ModelWeights& model, const ChangeRecord& record);
std::vector<double> predict_batch(const ModelWeights& model, std::span<const ChangeRecord> records);
std::vector<double> predict_batch_serial(const ModelWeights& model, std::span<const ChangeRecord> records);

/// Named models in one file (model.bin). Binary, little-endian, weights
/// stored sparsely; see README for the layout.
using ModelBundle = std::map<std::string, ModelWeights>;

void save_bundle(const ModelBundle& bundle, const std::filesystem::path& path);
ModelBundle load_bundle(const std::filesystem::path& path);

} // namespace xlr::model
