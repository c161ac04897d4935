#pragma once

#include <cerrno>
#include <chrono>
#include <csignal>
#include <cstdio>
#include <cstring>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <fcntl.h>
#include <poll.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <json.hpp>

#include "forecaster.hpp"

// Wire protocol: one JSON object per line over the child's stdin/stdout.
//   child  -> {"type":"hello","name":...,"version":...}            once, at startup
//   parent -> {"type":"forecast","id":...,"context":[...],"horizon":h,"sample_interval":dt}
//   child  -> {"type":"forecast_result","id":...,"values":[...]}   or
//             {"type":"error","id":...,"reason":...}
//   parent -> {"type":"shutdown"}
// Numbers go out with 17 significant digits.

namespace sinebench {

/// The external process broke the protocol; its remaining work is cancelled.
class ProtocolError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class BridgeMessageType { Hello, Forecast, ForecastResult, Error, Shutdown };

struct BridgeMessage {
    BridgeMessageType type = BridgeMessageType::Hello;
    std::string id;
    std::string name;
    std::string version;
    std::vector<double> context;
    std::size_t horizon = 0;
    double sample_interval = 0.0;
    std::vector<double> values;
    std::string reason;
};

namespace detail {

inline void append_number17(std::string& out, double v) {
    char buf[40];
    const int n = std::snprintf(buf, sizeof buf, "%.17g", v);
    out.append(buf, static_cast<std::size_t>(n));
}

inline std::string json_string(std::string_view s) { return nlohmann::json(std::string(s)).dump(); }

}  // namespace detail

inline std::string encode_forecast_request(std::string_view id, std::span<const double> context, std::size_t horizon,
                                           double sample_interval) {
    std::string out = R"({"type":"forecast","id":)";
    out += detail::json_string(id);
    out += R"(,"context":[)";
    for (std::size_t i = 0; i < context.size(); ++i) {
        if (i) out.push_back(',');
        detail::append_number17(out, context[i]);
    }
    out += R"(],"horizon":)";
    out += std::to_string(horizon);
    out += R"(,"sample_interval":)";
    detail::append_number17(out, sample_interval);
    out += "}";
    return out;
}

inline std::string encode_forecast_result(std::string_view id, std::span<const double> values) {
    std::string out = R"({"type":"forecast_result","id":)";
    out += detail::json_string(id);
    out += R"(,"values":[)";
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) out.push_back(',');
        detail::append_number17(out, values[i]);
    }
    out += "]}";
    return out;
}

inline std::string encode_error(std::string_view id, std::string_view reason) {
    return R"({"type":"error","id":)" + detail::json_string(id) + R"(,"reason":)" + detail::json_string(reason) + "}";
}

inline std::string encode_hello(std::string_view name, std::string_view version) {
    return R"({"type":"hello","name":)" + detail::json_string(name) + R"(,"version":)" + detail::json_string(version) +
           "}";
}

inline std::string encode_shutdown() { return R"({"type":"shutdown"})"; }

/// Throws ProtocolError for malformed JSON, unknown types, or missing fields.
inline BridgeMessage parse_bridge_message(std::string_view line) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
        throw ProtocolError(std::string("malformed message: ") + e.what());
    }
    if (!j.is_object() || !j.contains("type") || !j["type"].is_string()) {
        throw ProtocolError("message without a type");
    }
    auto str = [&](const char* key) -> std::string {
        if (!j.contains(key) || !j[key].is_string()) throw ProtocolError(std::string("missing string field ") + key);
        return j[key].get<std::string>();
    };
    auto numbers = [&](const char* key) {
        if (!j.contains(key) || !j[key].is_array()) throw ProtocolError(std::string("missing array field ") + key);
        std::vector<double> v;
        v.reserve(j[key].size());
        for (const auto& e : j[key]) {
            if (!e.is_number()) throw ProtocolError(std::string("non-numeric entry in ") + key);
            v.push_back(e.get<double>());
        }
        return v;
    };
    BridgeMessage m;
    const auto type = j["type"].get<std::string>();
    if (type == "hello") {
        m.type = BridgeMessageType::Hello;
        m.name = str("name");
        m.version = str("version");
    } else if (type == "forecast") {
        m.type = BridgeMessageType::Forecast;
        m.id = str("id");
        m.context = numbers("context");
        if (!j.contains("horizon") || !j["horizon"].is_number_integer()) throw ProtocolError("missing horizon");
        const auto h = j["horizon"].get<long long>();
        m.horizon = h < 0 ? 0 : static_cast<std::size_t>(h);
        if (j.contains("sample_interval") && j["sample_interval"].is_number()) {
            m.sample_interval = j["sample_interval"].get<double>();
        }
    } else if (type == "forecast_result") {
        m.type = BridgeMessageType::ForecastResult;
        m.id = str("id");
        m.values = numbers("values");
    } else if (type == "error") {
        m.type = BridgeMessageType::Error;
        m.id = j.contains("id") && j["id"].is_string() ? j["id"].get<std::string>() : std::string();
        m.reason = j.contains("reason") && j["reason"].is_string() ? j["reason"].get<std::string>() : "unspecified";
    } else if (type == "shutdown") {
        m.type = BridgeMessageType::Shutdown;
    } else {
        throw ProtocolError("unknown message type: " + type);
    }
    return m;
}

/// `/bin/sh -c command` with pipes on stdin and stdout; stderr is inherited.
class ChildProcess {
public:
    explicit ChildProcess(const std::string& command) {
        std::signal(SIGPIPE, SIG_IGN);
        int to_child[2];
        int from_child[2];
        if (::pipe2(to_child, O_CLOEXEC) != 0) throw ProtocolError("pipe failed: " + std::string(std::strerror(errno)));
        if (::pipe2(from_child, O_CLOEXEC) != 0) {
            ::close(to_child[0]);
            ::close(to_child[1]);
            throw ProtocolError("pipe failed: " + std::string(std::strerror(errno)));
        }
        pid_ = ::fork();
        if (pid_ < 0) {
            for (int fd : {to_child[0], to_child[1], from_child[0], from_child[1]}) ::close(fd);
            throw ProtocolError("fork failed: " + std::string(std::strerror(errno)));
        }
        if (pid_ == 0) {
            ::dup2(to_child[0], STDIN_FILENO);
            ::dup2(from_child[1], STDOUT_FILENO);
            ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
            ::_exit(127);
        }
        ::close(to_child[0]);
        ::close(from_child[1]);
        stdin_fd_ = to_child[1];
        stdout_fd_ = from_child[0];
    }

    ChildProcess(const ChildProcess&) = delete;
    ChildProcess& operator=(const ChildProcess&) = delete;

    ~ChildProcess() {
        close_stdin();
        if (stdout_fd_ >= 0) ::close(stdout_fd_);
        if (pid_ > 0 && !reaped_) {
            // Give a cooperative child a moment to exit after EOF, then kill it.
            for (int i = 0; i < 50 && !try_reap(); ++i) ::usleep(10'000);
            if (!reaped_) {
                ::kill(pid_, SIGKILL);
                ::waitpid(pid_, nullptr, 0);
            }
        }
    }

    void write_line(std::string_view line) {
        std::string data(line);
        data.push_back('\n');
        std::size_t done = 0;
        while (done < data.size()) {
            const auto n = ::write(stdin_fd_, data.data() + done, data.size() - done);
            if (n < 0) {
                if (errno == EINTR) continue;
                throw ProtocolError("write to bridge process failed: " + std::string(std::strerror(errno)));
            }
            done += static_cast<std::size_t>(n);
        }
    }

    /// Next line without the newline; nullopt on EOF. Throws ProtocolError on timeout.
    std::optional<std::string> read_line(std::chrono::milliseconds timeout) {
        const auto deadline = std::chrono::steady_clock::now() + timeout;
        while (true) {
            const auto nl = pending_.find('\n');
            if (nl != std::string::npos) {
                std::string line = pending_.substr(0, nl);
                pending_.erase(0, nl + 1);
                if (!line.empty() && line.back() == '\r') line.pop_back();
                return line;
            }
            if (eof_) {
                if (pending_.empty()) return std::nullopt;
                std::string line = std::move(pending_);
                pending_.clear();
                return line;
            }
            const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
            if (left.count() <= 0) throw ProtocolError("bridge process timed out");
            pollfd p{stdout_fd_, POLLIN, 0};
            const int rc = ::poll(&p, 1, static_cast<int>(left.count()));
            if (rc < 0) {
                if (errno == EINTR) continue;
                throw ProtocolError("poll failed: " + std::string(std::strerror(errno)));
            }
            if (rc == 0) continue;
            char buf[1 << 16];
            const auto n = ::read(stdout_fd_, buf, sizeof buf);
            if (n < 0) {
                if (errno == EINTR) continue;
                throw ProtocolError("read from bridge process failed: " + std::string(std::strerror(errno)));
            }
            if (n == 0) {
                eof_ = true;
            } else {
                pending_.append(buf, static_cast<std::size_t>(n));
            }
        }
    }

    void close_stdin() {
        if (stdin_fd_ >= 0) {
            ::close(stdin_fd_);
            stdin_fd_ = -1;
        }
    }

    /// Waits up to `timeout` for exit; returns the exit status if the child exited.
    std::optional<int> wait(std::chrono::milliseconds timeout) {
        const auto deadline = std::chrono::steady_clock::now() + timeout;
        while (!try_reap()) {
            if (std::chrono::steady_clock::now() >= deadline) return std::nullopt;
            ::usleep(5'000);
        }
        return status_;
    }

private:
    bool try_reap() {
        if (reaped_) return true;
        int status = 0;
        const pid_t r = ::waitpid(pid_, &status, WNOHANG);
        if (r == pid_) {
            reaped_ = true;
            status_ = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
        }
        return reaped_;
    }

    pid_t pid_ = -1;
    int stdin_fd_ = -1;
    int stdout_fd_ = -1;
    std::string pending_;
    bool eof_ = false;
    bool reaped_ = false;
    int status_ = 0;
};

/// Forecaster served by an external process. One request in flight at a time.
class BridgeForecaster final : public Forecaster {
public:
    BridgeForecaster(std::string name, const std::string& command,
                     std::chrono::milliseconds timeout = std::chrono::minutes(5))
        : name_(std::move(name)), timeout_(timeout), child_(command) {
        auto line = child_.read_line(timeout_);
        if (!line) throw ProtocolError(name_ + ": bridge process exited before hello");
        const auto hello = parse_bridge_message(*line);
        if (hello.type != BridgeMessageType::Hello) throw ProtocolError(name_ + ": first message must be hello");
        remote_name_ = hello.name;
        remote_version_ = hello.version;
    }

    ~BridgeForecaster() override {
        try {
            shutdown();
        } catch (...) {
        }
    }

    std::string id() const override { return name_; }
    std::string version() const override { return remote_name_ + " " + remote_version_; }
    const std::string& remote_name() const { return remote_name_; }

    std::vector<double> forecast(std::span<const double> context, std::size_t horizon,
                                 double sample_interval) override {
        const std::string request_id = "r" + std::to_string(++requests_);
        child_.write_line(encode_forecast_request(request_id, context, horizon, sample_interval));
        auto line = child_.read_line(timeout_);
        if (!line) throw ProtocolError(name_ + ": bridge process closed its output");
        const auto reply = parse_bridge_message(*line);
        if (reply.id != request_id) {
            throw ProtocolError(name_ + ": reply id '" + reply.id + "' does not match request '" + request_id + "'");
        }
        if (reply.type == BridgeMessageType::Error) throw ForecastError(reply.reason);
        if (reply.type != BridgeMessageType::ForecastResult) {
            throw ProtocolError(name_ + ": expected forecast_result or error");
        }
        return reply.values;
    }

    void shutdown() {
        if (shut_down_) return;
        shut_down_ = true;
        child_.write_line(encode_shutdown());
        child_.close_stdin();
        child_.wait(std::chrono::seconds(5));
    }

private:
    std::string name_;
    std::chrono::milliseconds timeout_;
    ChildProcess child_;
    std::string remote_name_;
    std::string remote_version_;
    std::size_t requests_ = 0;
    bool shut_down_ = false;
};

}  // namespace sinebench
