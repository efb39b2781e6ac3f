#pragma once

#include "xlr/corpus.hpp"
#include "xlr/model.hpp"

#include <chrono>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace xlr::model {

enum class BackendKind { native, external };

struct BackendHandle {
    BackendKind kind = BackendKind::native;
    std::vector<std::string> command; // argv of the external backend
    std::filesystem::path working_dir;
    std::chrono::milliseconds timeout{120'000};
    // When set, every request/reply line exchanged with an external backend
    // is appended here as {"dir": "send"|"recv", "msg": ...}.
    std::optional<std::filesystem::path> transcript;
};

/// Common train/predict contract for the native model and external processes.
class Backend {
public:
    virtual ~Backend() = default;
    virtual void train(std::span<const ChangeRecord> records, const Hyperparams& hp) = 0;
    /// Probabilities in [0, 1], aligned with records.
    virtual std::vector<double> predict_proba(std::span<const ChangeRecord> records) = 0;
    virtual double threshold() const noexcept = 0;

    std::vector<int> predict_decisions(std::span<const ChangeRecord> records);
};

class NativeBackend final : public Backend {
public:
    explicit NativeBackend(double threshold = 0.5) : threshold_(threshold) {}
    explicit NativeBackend(ModelWeights weights) : threshold_(weights.threshold), weights_(std::move(weights)) {}

    void train(std::span<const ChangeRecord> records, const Hyperparams& hp) override;
    std::vector<double> predict_proba(std::span<const ChangeRecord> records) override;
    double threshold() const noexcept override { return threshold_; }

    const std::optional<ModelWeights>& weights() const noexcept { return weights_; }

private:
    double threshold_;
    std::optional<ModelWeights> weights_;
};

/// Child process speaking the line-delimited JSON backend protocol on its
/// stdin/stdout. The handshake runs in the constructor. Any protocol
/// violation kills the child and throws Error{protocol}.
class ExternalBackend final : public Backend {
public:
    explicit ExternalBackend(const BackendHandle& handle, double threshold = 0.5);
    ~ExternalBackend() override;

    ExternalBackend(const ExternalBackend&) = delete;
    ExternalBackend& operator=(const ExternalBackend&) = delete;

    void train(std::span<const ChangeRecord> records, const Hyperparams& hp) override;
    std::vector<double> predict_proba(std::span<const ChangeRecord> records) override;
    double threshold() const noexcept override { return threshold_; }

    /// Sends "shutdown" and waits for the child; returns its exit status.
    int shutdown();
    const nlohmann::ordered_json& handshake_result() const noexcept { return handshake_; }

private:
    nlohmann::ordered_json call(const std::string& cmd, nlohmann::ordered_json payload);
    void kill_child() noexcept;
    [[noreturn]] void violation(const std::string& what);

    BackendHandle handle_;
    double threshold_;
    int pid_ = -1;
    int to_child_ = -1;
    int from_child_ = -1;
    std::string read_buf_;
    long long next_id_ = 1;
    nlohmann::ordered_json handshake_;
};

/// native -> NativeBackend; external -> ExternalBackend (after handshake).
std::unique_ptr<Backend> open_backend(const BackendHandle& handle, double threshold = 0.5);

nlohmann::ordered_json hyperparams_to_json(const Hyperparams& hp);

} // namespace xlr::model
