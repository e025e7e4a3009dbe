#pragma once

#include <chrono>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "pubquiz/statements.hpp"

namespace pubquiz {

enum class ModelKind { Causal, Masked };
enum class Reduction { Sum, Mean };

std::string to_string(ModelKind k);
ModelKind model_kind_from_string(const std::string& s);
std::string to_string(Reduction r);
Reduction reduction_from_string(const std::string& s);

/// Per-token natural-log probabilities for one scored text.
struct TokenScores {
    std::vector<std::string> tokens;
    std::vector<double> logprobs;
};

/// Sum or length-normalized mean of the token logprobs.
double reduce(const TokenScores& scores, Reduction reduction);

enum class BackendKind { Remote, Oracle, Unigram };

struct BackendDescriptor {
    BackendKind kind = BackendKind::Remote;
    std::string endpoint;  // Remote only, e.g. "http://localhost:8081"
    std::string model_name = "mock";
    ModelKind model_kind = ModelKind::Causal;
    std::chrono::milliseconds timeout{30000};
    int max_in_flight = 4;

    // Oracle configuration: fixed text -> token scores table.
    std::map<std::string, TokenScores> oracle_entries;
    double oracle_default = -100.0;

    // Unigram configuration: whitespace-tokenized corpus with additive smoothing.
    std::string corpus;
    double smoothing = 0.0;
};

class BackendError : public std::runtime_error {
public:
    BackendError(const std::string& msg, bool retryable, std::vector<std::size_t> failed_indices = {})
        : std::runtime_error(msg), retryable(retryable), failed_indices(std::move(failed_indices)) {}

    bool retryable;
    std::vector<std::size_t> failed_indices;  // positions in the request that failed
};

class ScoringBackend {
public:
    virtual ~ScoringBackend() = default;

    /// Scores the texts in one call; the result is order-aligned with the input.
    virtual std::vector<TokenScores> score(const std::vector<std::string>& texts) = 0;

    const BackendDescriptor& descriptor() const { return descriptor_; }

protected:
    explicit ScoringBackend(BackendDescriptor descriptor) : descriptor_(std::move(descriptor)) {}
    BackendDescriptor descriptor_;
};

std::unique_ptr<ScoringBackend> make_backend(const BackendDescriptor& descriptor);

/// Startup check for remote backends: queries /v1/info and returns the
/// advertised model name. Throws BackendError when unreachable.
std::string probe_remote_backend(const BackendDescriptor& descriptor);

/// Chunks the texts into batches of batch_size and scores up to
/// descriptor().max_in_flight batches concurrently. Results stay input-aligned.
std::vector<TokenScores> score_in_batches(ScoringBackend& backend,
                                          const std::vector<std::string>& texts, int batch_size);

std::vector<TokenScores> score_statements(ScoringBackend& backend,
                                          const std::vector<Statement>& statements,
                                          int batch_size = 32);

}  // namespace pubquiz
