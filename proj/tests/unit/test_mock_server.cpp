#include <cmath>

#include "doctest.h"
#include "helpers.hpp"
#include "httplib.h"
#include "json.hpp"
#include "pubquiz/mock_server.hpp"

using namespace pubquiz;
using namespace pubquiz::testing;
using json = nlohmann::json;

namespace {

MockModelSpec oracle_spec() {
    MockModelSpec spec;
    spec.kind = MockModelSpec::Kind::OracleTable;
    spec.oracle_entries["The capital of Uganda is Kampala."] = {{"<s>"}, {-1.0}};
    spec.default_logprob = -50.0;
    return spec;
}

}  // namespace

TEST_CASE("oracle table served over HTTP matches the in-process backend") {
    MockServer server(oracle_spec());
    server.start();

    BackendDescriptor remote;
    remote.kind = BackendKind::Remote;
    remote.endpoint = server.endpoint();
    auto client = make_backend(remote);

    std::vector<std::string> texts = {"The capital of Uganda is Kampala.", "unknown text"};
    auto via_http = client->score(texts);
    auto in_process = make_backend(oracle_spec().as_backend())->score(texts);
    REQUIRE(via_http.size() == in_process.size());
    for (std::size_t i = 0; i < texts.size(); ++i) {
        CHECK(via_http[i].tokens == in_process[i].tokens);
        CHECK(via_http[i].logprobs == in_process[i].logprobs);
    }
    CHECK(via_http[0].logprobs == std::vector<double>{-1.0});
    CHECK(via_http[1].logprobs == std::vector<double>{-50.0});
}

TEST_CASE("unigram mock: log of smoothed relative frequency, same for both modes") {
    MockModelSpec spec;
    spec.kind = MockModelSpec::Kind::Unigram;
    spec.corpus = "a a b";
    MockServer server(std::move(spec));
    server.start();

    for (ModelKind kind : {ModelKind::Causal, ModelKind::Masked}) {
        BackendDescriptor remote;
        remote.kind = BackendKind::Remote;
        remote.endpoint = server.endpoint();
        remote.model_kind = kind;
        auto scores = make_backend(remote)->score({"b"});
        CHECK(scores[0].logprobs[0] == doctest::Approx(std::log(1.0 / 3.0)).epsilon(1e-12));
    }
}

TEST_CASE("/v1/info reports the model and supported modes") {
    MockServer server(oracle_spec());
    server.start();
    httplib::Client client("127.0.0.1", server.port());
    auto res = client.Get("/v1/info");
    REQUIRE(res);
    auto j = json::parse(res->body);
    CHECK(j["model"] == "mock");
    CHECK(j["modes"] == json({"causal", "masked"}));

    BackendDescriptor remote;
    remote.kind = BackendKind::Remote;
    remote.endpoint = server.endpoint();
    CHECK(probe_remote_backend(remote) == "mock");
}

TEST_CASE("protocol violations map to 400/422") {
    MockServer server(oracle_spec());
    server.start();
    httplib::Client client("127.0.0.1", server.port());

    auto post = [&](const std::string& body) {
        auto res = client.Post("/v1/score", body, "application/json");
        REQUIRE(res);
        return res->status;
    };
    CHECK(post("{not json") == 400);
    CHECK(post(R"({"mode": "causal", "texts": ["x"]})") == 400);
    CHECK(post(R"({"model": "m", "mode": "diffusion", "texts": ["x"]})") == 422);
    CHECK(post(R"({"model": "m", "mode": "causal", "texts": []})") == 400);
    CHECK(post(R"({"model": "m", "mode": "causal", "texts": [""]})") == 400);
    CHECK(post(R"({"model": "m", "mode": "causal", "texts": [42]})") == 400);

    // A protocol error on the client side fails fast (no retries).
    BackendDescriptor remote;
    remote.kind = BackendKind::Remote;
    remote.endpoint = server.endpoint();
    auto backend = make_backend(remote);
    long before = server.requests_served();
    try {
        // Unsupported mode is simulated by a direct 422 via an invalid model kind
        // on the wire; here an empty text triggers the client-side check instead.
        backend->score({""});
        FAIL("expected BackendError");
    } catch (const BackendError& e) {
        CHECK_FALSE(e.retryable);
    }
    CHECK(server.requests_served() == before);
}

TEST_CASE("responses depend only on the request body") {
    MockModelSpec spec;
    spec.kind = MockModelSpec::Kind::Unigram;
    spec.corpus = "p q r p";
    MockServer server(std::move(spec));
    server.start();

    BackendDescriptor remote;
    remote.kind = BackendKind::Remote;
    remote.endpoint = server.endpoint();
    auto backend = make_backend(remote);
    auto first = backend->score({"p q", "r"});
    backend->score({"q"});
    auto again = backend->score({"p q", "r"});
    for (std::size_t i = 0; i < first.size(); ++i)
        CHECK(first[i].logprobs == again[i].logprobs);
}

TEST_CASE("injected failures return 500 and exhaust client retries") {
    MockModelSpec spec = oracle_spec();
    spec.fail_after_requests = 1;
    MockServer server(std::move(spec));
    server.start();

    BackendDescriptor remote;
    remote.kind = BackendKind::Remote;
    remote.endpoint = server.endpoint();
    auto backend = make_backend(remote);
    CHECK_NOTHROW(backend->score({"anything"}));
    try {
        backend->score({"anything"});
        FAIL("expected BackendError");
    } catch (const BackendError& e) {
        CHECK(e.retryable);
        CHECK(e.failed_indices == std::vector<std::size_t>{0});
    }
}

TEST_CASE("oracle spec files load") {
    TempDir dir("oracle_spec");
    {
        std::ofstream out(dir.path / "spec.json");
        out << R"({"model": "table", "default_logprob": -9.5,
                   "entries": {"hello world": [["hello", -0.1], ["world", -0.2]]}})";
    }
    auto spec = load_oracle_spec(dir.path / "spec.json");
    CHECK(spec.model_name == "table");
    CHECK(spec.default_logprob == -9.5);
    REQUIRE(spec.oracle_entries.count("hello world") == 1);
    CHECK(spec.oracle_entries["hello world"].logprobs == std::vector<double>{-0.1, -0.2});
}
