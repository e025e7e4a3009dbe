#include <chrono>
#include <memory>
#include <thread>

#include "httplib.h"
#include "json.hpp"
#include "pubquiz/scoring.hpp"

using json = nlohmann::json;

namespace pubquiz {

namespace {

class RemoteBackend final : public ScoringBackend {
public:
    explicit RemoteBackend(BackendDescriptor descriptor) : ScoringBackend(std::move(descriptor)) {}

    std::vector<TokenScores> score(const std::vector<std::string>& texts) override {
        for (std::size_t i = 0; i < texts.size(); ++i)
            if (texts[i].empty())
                throw BackendError("empty statement text", /*retryable=*/false, {i});

        json body = {{"model", descriptor_.model_name},
                     {"mode", to_string(descriptor_.model_kind)},
                     {"texts", texts}};
        std::string payload = body.dump();

        std::string last_error;
        for (int attempt = 0; attempt <= kMaxRetries; ++attempt) {
            if (attempt > 0)
                std::this_thread::sleep_for(backoff_base_ * (1 << (attempt - 1)));
            auto client = make_client();
            auto res = client->Post("/v1/score", payload, "application/json");
            if (!res) {
                last_error = "transport error: " + httplib::to_string(res.error());
                continue;
            }
            if (res->status >= 500) {
                last_error = "server error: HTTP " + std::to_string(res->status);
                continue;
            }
            if (res->status != 200)
                throw BackendError("scoring protocol violation: HTTP " + std::to_string(res->status) +
                                       " " + res->body,
                                   /*retryable=*/false, all_indices(texts.size()));
            return parse_response(res->body, texts.size());
        }
        throw BackendError("backend " + descriptor_.endpoint + " failed after " +
                               std::to_string(kMaxRetries + 1) + " attempts (" + last_error + ")",
                           /*retryable=*/true, all_indices(texts.size()));
    }

private:
    static constexpr int kMaxRetries = 3;
    std::chrono::milliseconds backoff_base_{100};

    std::unique_ptr<httplib::Client> make_client() const {
        auto client = std::make_unique<httplib::Client>(descriptor_.endpoint);
        auto secs = std::chrono::duration_cast<std::chrono::seconds>(descriptor_.timeout);
        client->set_connection_timeout(std::max<long>(1, secs.count()), 0);
        client->set_read_timeout(std::max<long>(1, secs.count()), 0);
        return client;
    }

    static std::vector<std::size_t> all_indices(std::size_t n) {
        std::vector<std::size_t> idx(n);
        for (std::size_t i = 0; i < n; ++i)
            idx[i] = i;
        return idx;
    }

    std::vector<TokenScores> parse_response(const std::string& body, std::size_t expected) const {
        json j;
        try {
            j = json::parse(body);
        } catch (const json::exception& e) {
            throw BackendError(std::string("scoring protocol violation: bad JSON: ") + e.what(),
                               /*retryable=*/false);
        }
        if (!j.contains("results") || !j["results"].is_array() || j["results"].size() != expected)
            throw BackendError("scoring protocol violation: results missing or misaligned",
                               /*retryable=*/false);
        std::vector<TokenScores> out;
        out.reserve(expected);
        for (const auto& entry : j["results"]) {
            TokenScores scores;
            try {
                scores.tokens = entry.at("tokens").get<std::vector<std::string>>();
                scores.logprobs = entry.at("logprobs").get<std::vector<double>>();
            } catch (const json::exception& e) {
                throw BackendError(std::string("scoring protocol violation: ") + e.what(),
                                   /*retryable=*/false);
            }
            if (scores.tokens.size() != scores.logprobs.size() || scores.tokens.empty())
                throw BackendError("scoring protocol violation: tokens/logprobs length mismatch",
                                   /*retryable=*/false);
            out.push_back(std::move(scores));
        }
        return out;
    }
};

}  // namespace

std::unique_ptr<ScoringBackend> make_remote_backend(const BackendDescriptor& descriptor) {
    return std::make_unique<RemoteBackend>(descriptor);
}

/// Queries /v1/info; returns the advertised model name or throws BackendError.
std::string probe_remote_backend(const BackendDescriptor& descriptor) {
    httplib::Client client(descriptor.endpoint);
    auto secs = std::chrono::duration_cast<std::chrono::seconds>(descriptor.timeout);
    client.set_connection_timeout(std::max<long>(1, secs.count()), 0);
    client.set_read_timeout(std::max<long>(1, secs.count()), 0);
    auto res = client.Get("/v1/info");
    if (!res)
        throw BackendError("backend " + descriptor.endpoint + " unreachable: " +
                               httplib::to_string(res.error()),
                           /*retryable=*/true);
    if (res->status != 200)
        throw BackendError("backend /v1/info returned HTTP " + std::to_string(res->status),
                           /*retryable=*/false);
    try {
        return json::parse(res->body).at("model").get<std::string>();
    } catch (const json::exception& e) {
        throw BackendError(std::string("bad /v1/info response: ") + e.what(), /*retryable=*/false);
    }
}

}  // namespace pubquiz
