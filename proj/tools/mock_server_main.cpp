// pubquiz-mock-server: deterministic scoring endpoint for tests and demos.

#include <csignal>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "pubquiz/mock_server.hpp"

using namespace pubquiz;

namespace {
volatile std::sig_atomic_t g_stop = 0;
}

int main(int argc, char** argv) {
    CLI::App app{"Deterministic mock scoring server (oracle table or unigram model)"};

    int port = 8081;
    std::string oracle_file, corpus_file;
    double smoothing = 0.0;
    double default_logprob = -100.0;
    int latency_ms = 0;
    long fail_after = -1;

    app.add_option("--port", port, "Port to listen on (0 picks a free port)");
    app.add_option("--oracle", oracle_file, "Oracle-table spec file (JSON)");
    app.add_option("--corpus", corpus_file, "Unigram corpus file");
    app.add_option("--smoothing", smoothing, "Additive smoothing for the unigram model");
    app.add_option("--default-logprob", default_logprob,
                   "Oracle score for texts missing from the table");
    app.add_option("--latency-ms", latency_ms, "Artificial per-request latency");
    app.add_option("--fail-after", fail_after,
                   "Respond 500 to score requests after this many (fault injection)");

    CLI11_PARSE(app, argc, argv);

    MockModelSpec spec;
    try {
        if (!oracle_file.empty()) {
            spec = load_oracle_spec(oracle_file);
            spec.default_logprob = default_logprob;
        } else if (!corpus_file.empty()) {
            std::ifstream in(corpus_file);
            if (!in) {
                std::cerr << "error: cannot open " << corpus_file << "\n";
                return 1;
            }
            spec.kind = MockModelSpec::Kind::Unigram;
            spec.model_name = "unigram";
            spec.corpus = {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
            spec.smoothing = smoothing;
        } else {
            std::cerr << "error: one of --oracle or --corpus is required\n";
            return 1;
        }
        spec.latency_ms = latency_ms;
        spec.fail_after_requests = fail_after;

        MockServer server(std::move(spec));
        int bound = server.start(port);
        std::cout << "listening on http://127.0.0.1:" << bound << std::endl;

        std::signal(SIGINT, [](int) { g_stop = 1; });
        std::signal(SIGTERM, [](int) { g_stop = 1; });
        while (!g_stop)
            std::this_thread::sleep_for(std::chrono::milliseconds(100));
        server.stop();
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
