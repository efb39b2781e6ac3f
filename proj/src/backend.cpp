#include "xlr/backend.hpp"

#include "xlr/error.hpp"
#include "xlr/jsonl.hpp"

#include <cerrno>
#include <cmath>
#include <cstring>
#include <fstream>

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

namespace xlr::model {

using json = nlohmann::ordered_json;

std::vector<int> Backend::predict_decisions(std::span<const ChangeRecord> records) {
    const auto probs = predict_proba(records);
    std::vector<int> out;
    out.reserve(probs.size());
    for (double p : probs) {
        out.push_back(p >= threshold() ? 1 : 0);
    }
    return out;
}

void NativeBackend::train(std::span<const ChangeRecord> records, const Hyperparams& hp) {
    weights_ = train_native(records, hp, nullptr, threshold_);
}

std::vector<double> NativeBackend::predict_proba(std::span<const ChangeRecord> records) {
    if (!weights_) {
        throw Error(ErrorCode::backend, "native backend has no trained model");
    }
    return predict_batch(*weights_, records);
}

json hyperparams_to_json(const Hyperparams& hp) {
    json j;
    j["learning_rate"] = hp.learning_rate;
    j["epochs"] = hp.epochs;
    j["l2"] = hp.l2;
    j["hash_dim"] = hp.hash_dim;
    j["seed"] = hp.seed;
    return j;
}

namespace {

void write_all(int fd, std::string_view data) {
    while (!data.empty()) {
        const ssize_t n = ::send(fd, data.data(), data.size(), MSG_NOSIGNAL);
        if (n < 0) {
            if (errno == EINTR) {
                continue;
            }
            throw Error(ErrorCode::backend, std::string("write to backend failed: ") + std::strerror(errno));
        }
        data.remove_prefix(static_cast<std::size_t>(n));
    }
}

} // namespace

ExternalBackend::ExternalBackend(const BackendHandle& handle, double threshold)
    : handle_(handle), threshold_(threshold) {
    if (handle_.command.empty() || handle_.command.front().empty()) {
        throw Error(ErrorCode::invalid_argument, "external backend needs a non-empty command");
    }

    int sv[2];
    if (::socketpair(AF_UNIX, SOCK_STREAM | SOCK_CLOEXEC, 0, sv) != 0) {
        throw Error(ErrorCode::backend, std::string("socketpair failed: ") + std::strerror(errno));
    }
    // Reports exec failure back to the parent; closes on successful exec.
    int status_pipe[2];
    if (::pipe2(status_pipe, O_CLOEXEC) != 0) {
        ::close(sv[0]);
        ::close(sv[1]);
        throw Error(ErrorCode::backend, std::string("pipe failed: ") + std::strerror(errno));
    }

    std::vector<char*> argv;
    for (auto& arg : handle_.command) {
        argv.push_back(arg.data());
    }
    argv.push_back(nullptr);
    const std::string dir = handle_.working_dir.string();

    const pid_t pid = ::fork();
    if (pid < 0) {
        const int err = errno;
        ::close(sv[0]);
        ::close(sv[1]);
        ::close(status_pipe[0]);
        ::close(status_pipe[1]);
        throw Error(ErrorCode::backend, std::string("fork failed: ") + std::strerror(err));
    }
    if (pid == 0) {
        ::close(status_pipe[0]);
        ::dup2(sv[1], STDIN_FILENO);
        ::dup2(sv[1], STDOUT_FILENO);
        int err = 0;
        if (!dir.empty() && ::chdir(dir.c_str()) != 0) {
            err = errno;
        } else {
            ::execvp(argv[0], argv.data());
            err = errno;
        }
        [[maybe_unused]] auto ignored = ::write(status_pipe[1], &err, sizeof err);
        ::_exit(127);
    }

    ::close(sv[1]);
    ::close(status_pipe[1]);
    pid_ = pid;
    to_child_ = sv[0];
    from_child_ = sv[0];

    int child_err = 0;
    ssize_t got;
    do {
        got = ::read(status_pipe[0], &child_err, sizeof child_err);
    } while (got < 0 && errno == EINTR);
    ::close(status_pipe[0]);
    if (got == static_cast<ssize_t>(sizeof child_err)) {
        ::waitpid(pid_, nullptr, 0);
        pid_ = -1;
        ::close(to_child_);
        to_child_ = from_child_ = -1;
        throw Error(ErrorCode::backend,
                    "cannot start backend '" + handle_.command.front() + "': " + std::strerror(child_err));
    }

    try {
        handshake_ = call("handshake", json::object());
    } catch (...) {
        kill_child();
        throw;
    }
    const auto proto = handshake_.find("protocol");
    const auto caps = handshake_.find("capabilities");
    bool can_train = false;
    bool can_predict = false;
    if (caps != handshake_.end() && caps->is_array()) {
        for (const auto& c : *caps) {
            can_train = can_train || c == "train";
            can_predict = can_predict || c == "predict";
        }
    }
    if (proto == handshake_.end() || *proto != 1 || !can_train || !can_predict) {
        violation("handshake must report protocol 1 with capabilities [\"train\", \"predict\"], got " +
                  dump_line(handshake_));
    }
}

ExternalBackend::~ExternalBackend() {
    if (pid_ > 0) {
        try {
            shutdown();
        } catch (...) {
            kill_child();
        }
    }
}

void ExternalBackend::kill_child() noexcept {
    if (pid_ > 0) {
        ::kill(pid_, SIGKILL);
        ::waitpid(pid_, nullptr, 0);
        pid_ = -1;
    }
    if (to_child_ >= 0) {
        ::close(to_child_);
    }
    to_child_ = from_child_ = -1;
}

void ExternalBackend::violation(const std::string& what) {
    kill_child();
    throw Error(ErrorCode::protocol, "backend protocol violation: " + what);
}

json ExternalBackend::call(const std::string& cmd, json payload) {
    if (pid_ <= 0) {
        throw Error(ErrorCode::backend, "backend process is not running");
    }
    const long long id = next_id_++;
    json request;
    request["id"] = id;
    request["cmd"] = cmd;
    for (auto& [key, value] : payload.items()) {
        request[key] = std::move(value);
    }
    const std::string out_line = dump_line(request);

    std::ofstream transcript;
    if (handle_.transcript) {
        transcript.open(*handle_.transcript, std::ios::app | std::ios::binary);
        transcript << dump_line(json{{"dir", "send"}, {"msg", request}}) << '\n';
    }

    try {
        write_all(to_child_, out_line + "\n");
    } catch (const Error&) {
        kill_child();
        throw;
    }

    const auto deadline = std::chrono::steady_clock::now() + handle_.timeout;
    std::size_t nl;
    while ((nl = read_buf_.find('\n')) == std::string::npos) {
        const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
        if (left.count() <= 0) {
            kill_child();
            throw Error(ErrorCode::backend, "backend timed out on '" + cmd + "' after " +
                                                std::to_string(handle_.timeout.count()) + " ms");
        }
        pollfd pfd{from_child_, POLLIN, 0};
        const int ready = ::poll(&pfd, 1, static_cast<int>(std::min<long long>(left.count(), 1'000'000)));
        if (ready < 0 && errno == EINTR) {
            continue;
        }
        if (ready <= 0) {
            continue;
        }
        char buf[65536];
        const ssize_t n = ::read(from_child_, buf, sizeof buf);
        if (n < 0 && errno == EINTR) {
            continue;
        }
        if (n <= 0) {
            violation("backend exited before replying to '" + cmd + "'");
        }
        read_buf_.append(buf, static_cast<std::size_t>(n));
    }
    const std::string line = read_buf_.substr(0, nl);
    read_buf_.erase(0, nl + 1);

    json reply;
    try {
        reply = json::parse(line);
    } catch (const json::parse_error&) {
        violation("malformed reply line '" + line.substr(0, 200) + "'");
    }
    if (transcript.is_open()) {
        transcript << dump_line(json{{"dir", "recv"}, {"msg", reply}}) << '\n';
    }
    if (!reply.is_object() || !reply.contains("id") || !reply.contains("ok") || !reply["ok"].is_boolean()) {
        violation("reply lacks id/ok: " + line.substr(0, 200));
    }
    if (!reply["id"].is_number_integer() || reply["id"].get<long long>() != id) {
        violation("reply id " + dump_line(reply["id"]) + " does not match request id " + std::to_string(id));
    }
    if (!reply["ok"].get<bool>()) {
        const auto err = reply.find("error");
        throw Error(ErrorCode::backend, "backend error on '" + cmd + "': " +
                                            (err != reply.end() && err->is_string() ? err->get<std::string>()
                                                                                    : std::string("(no message)")));
    }
    if (!reply.contains("result")) {
        violation("ok reply without result");
    }
    return reply["result"];
}

void ExternalBackend::train(std::span<const ChangeRecord> records, const Hyperparams& hp) {
    json payload;
    payload["records"] = json::array();
    for (const auto& r : records) {
        payload["records"].push_back(to_json(r));
    }
    payload["params"] = hyperparams_to_json(hp);
    call("train", std::move(payload));
}

std::vector<double> ExternalBackend::predict_proba(std::span<const ChangeRecord> records) {
    json payload;
    payload["records"] = json::array();
    for (const auto& r : records) {
        payload["records"].push_back(to_json(r));
    }
    const json result = call("predict", std::move(payload));
    const auto probs = result.find("probabilities");
    if (!result.is_object() || probs == result.end() || !probs->is_array()) {
        violation("predict result lacks a probabilities array");
    }
    if (probs->size() != records.size()) {
        violation("predict returned " + std::to_string(probs->size()) + " probabilities for " +
                  std::to_string(records.size()) + " records");
    }
    std::vector<double> out;
    out.reserve(records.size());
    for (const auto& p : *probs) {
        if (!p.is_number()) {
            violation("non-numeric probability " + dump_line(p));
        }
        const double v = p.get<double>();
        if (!std::isfinite(v) || v < 0.0 || v > 1.0) {
            violation("probability " + dump_line(p) + " outside [0, 1]");
        }
        out.push_back(v);
    }
    return out;
}

int ExternalBackend::shutdown() {
    if (pid_ <= 0) {
        return -1;
    }
    call("shutdown", json::object());
    ::shutdown(to_child_, SHUT_WR);
    int status = 0;
    const auto deadline = std::chrono::steady_clock::now() + std::chrono::seconds(5);
    while (true) {
        const pid_t r = ::waitpid(pid_, &status, WNOHANG);
        if (r == pid_) {
            break;
        }
        if (std::chrono::steady_clock::now() > deadline) {
            kill_child();
            return -1;
        }
        ::usleep(1000);
    }
    pid_ = -1;
    ::close(to_child_);
    to_child_ = from_child_ = -1;
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::unique_ptr<Backend> open_backend(const BackendHandle& handle, double threshold) {
    if (handle.kind == BackendKind::native) {
        return std::make_unique<NativeBackend>(threshold);
    }
    return std::make_unique<ExternalBackend>(handle, threshold);
}

} // namespace xlr::model
