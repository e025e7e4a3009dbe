#include "pubquiz/mock_server.hpp"

#include <chrono>
#include <fstream>

#include "httplib.h"
#include "json.hpp"

using json = nlohmann::json;

namespace pubquiz {

BackendDescriptor MockModelSpec::as_backend(ModelKind model_kind) const {
    BackendDescriptor d;
    d.kind = kind == Kind::OracleTable ? BackendKind::Oracle : BackendKind::Unigram;
    d.model_name = model_name;
    d.model_kind = model_kind;
    d.oracle_entries = oracle_entries;
    d.oracle_default = default_logprob;
    d.corpus = corpus;
    d.smoothing = smoothing;
    return d;
}

MockModelSpec load_oracle_spec(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open oracle spec " + path.string());
    json j;
    in >> j;
    MockModelSpec spec;
    spec.kind = MockModelSpec::Kind::OracleTable;
    spec.model_name = j.value("model", "mock");
    spec.default_logprob = j.value("default_logprob", -100.0);
    if (j.contains("entries")) {
        for (const auto& [text, tokens] : j["entries"].items()) {
            TokenScores scores;
            for (const auto& pair : tokens) {
                scores.tokens.push_back(pair.at(0).get<std::string>());
                scores.logprobs.push_back(pair.at(1).get<double>());
            }
            spec.oracle_entries[text] = std::move(scores);
        }
    }
    return spec;
}

namespace httpimpl {

class ServerState {
public:
    explicit ServerState(const MockModelSpec& spec)
        : spec_(spec), backend_(make_backend(spec.as_backend())) {
        server_.Get("/v1/info", [this](const httplib::Request&, httplib::Response& res) {
            json j = {{"model", spec_.model_name}, {"modes", {"causal", "masked"}}};
            res.set_content(j.dump(), "application/json");
        });
        server_.Post("/v1/score", [this](const httplib::Request& req, httplib::Response& res) {
            handle_score(req, res);
        });
    }

    void handle_score(const httplib::Request& req, httplib::Response& res) {
        long served = ++score_requests_;
        if (spec_.fail_after_requests >= 0 && served > spec_.fail_after_requests) {
            res.status = 500;
            res.set_content(R"({"error": "injected failure"})", "application/json");
            return;
        }
        if (spec_.latency_ms > 0)
            std::this_thread::sleep_for(std::chrono::milliseconds(spec_.latency_ms));

        auto bad_request = [&](const std::string& msg) {
            res.status = 400;
            res.set_content(json{{"error", msg}}.dump(), "application/json");
        };

        json body;
        try {
            body = json::parse(req.body);
        } catch (const json::exception& e) {
            return bad_request(std::string("bad JSON: ") + e.what());
        }
        if (!body.is_object() || !body.contains("model") || !body["model"].is_string())
            return bad_request("missing string field \"model\"");
        if (!body.contains("mode") || !body["mode"].is_string())
            return bad_request("missing string field \"mode\"");
        std::string mode = body["mode"].get<std::string>();
        if (mode != "causal" && mode != "masked") {
            res.status = 422;
            res.set_content(json{{"error", "unsupported mode \"" + mode + "\""}}.dump(),
                            "application/json");
            return;
        }
        if (!body.contains("texts") || !body["texts"].is_array() || body["texts"].empty())
            return bad_request("missing non-empty array field \"texts\"");
        std::vector<std::string> texts;
        for (const auto& t : body["texts"]) {
            if (!t.is_string() || t.get<std::string>().empty())
                return bad_request("texts must be non-empty strings");
            texts.push_back(t.get<std::string>());
        }

        // Both modes score identically: the mocks are tokenizer- and
        // objective-free by construction.
        std::vector<TokenScores> scored;
        try {
            scored = backend_->score(texts);
        } catch (const std::exception& e) {
            return bad_request(e.what());
        }
        json results = json::array();
        for (const auto& s : scored)
            results.push_back({{"tokens", s.tokens}, {"logprobs", s.logprobs}});
        res.set_content(json{{"results", std::move(results)}}.dump(), "application/json");
    }

    MockModelSpec spec_;
    std::unique_ptr<ScoringBackend> backend_;
    httplib::Server server_;
    std::atomic<long> score_requests_{0};
};

}  // namespace httpimpl

MockServer::MockServer(MockModelSpec spec) : spec_(std::move(spec)) {}

MockServer::~MockServer() {
    stop();
}

int MockServer::start(int port) {
    state_ = std::make_unique<httpimpl::ServerState>(spec_);
    if (port == 0) {
        port_ = state_->server_.bind_to_any_port("127.0.0.1");
    } else {
        if (!state_->server_.bind_to_port("127.0.0.1", port))
            throw std::runtime_error("cannot bind port " + std::to_string(port));
        port_ = port;
    }
    if (port_ < 0)
        throw std::runtime_error("cannot bind a port");
    thread_ = std::thread([this] { state_->server_.listen_after_bind(); });
    state_->server_.wait_until_ready();
    return port_;
}

void MockServer::stop() {
    if (state_) {
        state_->server_.stop();
        if (thread_.joinable())
            thread_.join();
    }
}

long MockServer::requests_served() const {
    return state_ ? state_->score_requests_.load() : 0;
}

}  // namespace pubquiz
