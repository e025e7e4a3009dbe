#pragma once

#include <atomic>
#include <filesystem>
#include <memory>
#include <thread>

#include "pubquiz/scoring.hpp"

namespace pubquiz {

/// Deterministic local model served over the scoring wire protocol.
struct MockModelSpec {
    enum class Kind { OracleTable, Unigram };

    Kind kind = Kind::OracleTable;
    std::string model_name = "mock";
    std::map<std::string, TokenScores> oracle_entries;
    double default_logprob = -100.0;  // per pseudo-token, for texts not in the table
    std::string corpus;
    double smoothing = 0.0;

    // Fault/latency injection for tests and demos.
    int latency_ms = 0;
    long fail_after_requests = -1;  // respond 500 to score requests after this many; -1 = never

    BackendDescriptor as_backend(ModelKind model_kind = ModelKind::Causal) const;
};

/// Reads an oracle spec file:
/// {"model": ..., "default_logprob": ..., "entries": {text: [[token, logprob], ...]}}
MockModelSpec load_oracle_spec(const std::filesystem::path& path);

namespace httpimpl {
class ServerState;
}

/// Serves /v1/score and /v1/info until stopped or destroyed.
class MockServer {
public:
    explicit MockServer(MockModelSpec spec);
    ~MockServer();

    MockServer(const MockServer&) = delete;
    MockServer& operator=(const MockServer&) = delete;

    /// Binds and starts serving; port 0 picks a free port. Returns the bound port.
    int start(int port = 0);
    void stop();

    int port() const { return port_; }
    std::string endpoint() const { return "http://127.0.0.1:" + std::to_string(port_); }
    long requests_served() const;

private:
    MockModelSpec spec_;
    std::unique_ptr<httpimpl::ServerState> state_;
    std::thread thread_;
    int port_ = -1;
};

}  // namespace pubquiz
