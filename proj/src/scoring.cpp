#include "pubquiz/scoring.hpp"

#include <cmath>
#include <future>
#include <numeric>
#include <sstream>
#include <unordered_map>

namespace pubquiz {

std::string to_string(ModelKind k) {
    return k == ModelKind::Causal ? "causal" : "masked";
}

ModelKind model_kind_from_string(const std::string& s) {
    if (s == "causal" || s == "CLM" || s == "clm")
        return ModelKind::Causal;
    if (s == "masked" || s == "MLM" || s == "mlm")
        return ModelKind::Masked;
    throw std::invalid_argument("unknown model kind: \"" + s + "\"");
}

std::string to_string(Reduction r) {
    return r == Reduction::Sum ? "sum" : "mean";
}

Reduction reduction_from_string(const std::string& s) {
    if (s == "sum")
        return Reduction::Sum;
    if (s == "mean")
        return Reduction::Mean;
    throw std::invalid_argument("unknown reduction: \"" + s + "\"");
}

double reduce(const TokenScores& scores, Reduction reduction) {
    if (scores.logprobs.empty())
        throw std::invalid_argument("cannot reduce empty token scores");
    double sum = std::accumulate(scores.logprobs.begin(), scores.logprobs.end(), 0.0);
    return reduction == Reduction::Sum ? sum : sum / static_cast<double>(scores.logprobs.size());
}

namespace {

class OracleBackend final : public ScoringBackend {
public:
    explicit OracleBackend(BackendDescriptor descriptor) : ScoringBackend(std::move(descriptor)) {}

    std::vector<TokenScores> score(const std::vector<std::string>& texts) override {
        std::vector<TokenScores> out;
        out.reserve(texts.size());
        for (const auto& text : texts) {
            if (text.empty())
                throw BackendError("empty statement text", /*retryable=*/false);
            auto it = descriptor_.oracle_entries.find(text);
            if (it != descriptor_.oracle_entries.end())
                out.push_back(it->second);
            else
                out.push_back({{"<unk>"}, {descriptor_.oracle_default}});
        }
        return out;
    }
};

class UnigramBackend final : public ScoringBackend {
public:
    explicit UnigramBackend(BackendDescriptor descriptor) : ScoringBackend(std::move(descriptor)) {
        std::istringstream in(descriptor_.corpus);
        std::string token;
        while (in >> token) {
            ++counts_[token];
            ++total_;
        }
        if (total_ == 0)
            throw BackendError("unigram corpus is empty", /*retryable=*/false);
    }

    std::vector<TokenScores> score(const std::vector<std::string>& texts) override {
        std::vector<TokenScores> out;
        out.reserve(texts.size());
        for (const auto& text : texts) {
            TokenScores scores;
            std::istringstream in(text);
            std::string token;
            while (in >> token) {
                scores.tokens.push_back(token);
                scores.logprobs.push_back(logprob(token));
            }
            if (scores.tokens.empty())
                throw BackendError("empty statement text", /*retryable=*/false);
            out.push_back(std::move(scores));
        }
        return out;
    }

private:
    double logprob(const std::string& token) const {
        auto it = counts_.find(token);
        double count = it != counts_.end() ? static_cast<double>(it->second) : 0.0;
        double s = descriptor_.smoothing;
        // One extra vocabulary slot absorbs unseen tokens when smoothing is on.
        double denom = static_cast<double>(total_) + s * static_cast<double>(counts_.size() + 1);
        double p = (count + s) / denom;
        if (p <= 0.0)
            return kFloor;
        return std::min(std::log(p), 0.0);
    }

    // Finite stand-in for log(0); keeps scores JSON-serializable.
    static constexpr double kFloor = -100.0;

    std::unordered_map<std::string, std::size_t> counts_;
    std::size_t total_ = 0;
};

}  // namespace

std::unique_ptr<ScoringBackend> make_remote_backend(const BackendDescriptor& descriptor);

std::unique_ptr<ScoringBackend> make_backend(const BackendDescriptor& descriptor) {
    switch (descriptor.kind) {
        case BackendKind::Oracle:
            return std::make_unique<OracleBackend>(descriptor);
        case BackendKind::Unigram:
            return std::make_unique<UnigramBackend>(descriptor);
        case BackendKind::Remote:
            if (descriptor.endpoint.empty())
                throw std::invalid_argument("remote backend needs an endpoint");
            return make_remote_backend(descriptor);
    }
    throw std::invalid_argument("unknown backend kind");
}

std::vector<TokenScores> score_in_batches(ScoringBackend& backend,
                                          const std::vector<std::string>& texts, int batch_size) {
    if (texts.empty())
        throw std::invalid_argument("no texts to score");
    if (batch_size < 1)
        throw std::invalid_argument("batch_size must be positive");

    std::vector<std::pair<std::size_t, std::size_t>> batches;  // [begin, end)
    for (std::size_t begin = 0; begin < texts.size(); begin += batch_size)
        batches.emplace_back(begin, std::min(texts.size(), begin + batch_size));

    std::vector<TokenScores> out(texts.size());
    int max_in_flight = std::max(1, backend.descriptor().max_in_flight);

    std::size_t next = 0;
    while (next < batches.size()) {
        std::size_t wave_end = std::min(batches.size(), next + static_cast<std::size_t>(max_in_flight));
        std::vector<std::future<std::vector<TokenScores>>> futures;
        for (std::size_t b = next; b < wave_end; ++b) {
            auto [begin, end] = batches[b];
            std::vector<std::string> chunk(texts.begin() + begin, texts.begin() + end);
            futures.push_back(std::async(std::launch::async, [&backend, chunk = std::move(chunk)] {
                return backend.score(chunk);
            }));
        }
        for (std::size_t b = next; b < wave_end; ++b) {
            auto scores = futures[b - next].get();
            auto [begin, end] = batches[b];
            if (scores.size() != end - begin)
                throw BackendError("backend returned " + std::to_string(scores.size()) +
                                       " results for a batch of " + std::to_string(end - begin),
                                   /*retryable=*/false);
            std::move(scores.begin(), scores.end(), out.begin() + begin);
        }
        next = wave_end;
    }
    return out;
}

std::vector<TokenScores> score_statements(ScoringBackend& backend,
                                          const std::vector<Statement>& statements, int batch_size) {
    std::vector<std::string> texts;
    texts.reserve(statements.size());
    for (const auto& s : statements)
        texts.push_back(s.text);
    return score_in_batches(backend, texts, batch_size);
}

}  // namespace pubquiz
