#pragma once

#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "pubquiz/dataset.hpp"
#include "pubquiz/scoring.hpp"

namespace pubquiz::testing {

inline std::filesystem::path fixtures_dir() {
    return PUBQUIZ_FIXTURES_DIR;
}

inline std::filesystem::path temp_dir(const std::string& tag) {
    auto dir = std::filesystem::temp_directory_path() /
               ("pubquiz_test_" + tag + "_" + std::to_string(std::random_device{}()));
    std::filesystem::create_directories(dir);
    return dir;
}

/// In-memory relation with answer labels "A0".."A<n-1>" (ids equal labels)
/// and subjects "S0".."S<m-1>"; correct answer of instance i is
/// correct_answers[i].
inline Relation make_relation(const std::string& id, std::size_t answer_count,
                              const std::vector<std::size_t>& correct_answers,
                              std::vector<std::string> templates = {
                                  "Subject [X] maps to answer [Y]."}) {
    Relation r;
    r.id = id;
    r.templates = std::move(templates);
    for (std::size_t a = 0; a < answer_count; ++a) {
        r.answer_space.ids.push_back(id + "_A" + std::to_string(a));
        r.answer_space.labels.push_back(id + "-answer-" + std::to_string(a));
    }
    for (std::size_t i = 0; i < correct_answers.size(); ++i) {
        RelationInstance inst;
        inst.sub_id = id + "_S" + std::to_string(i);
        inst.sub_label = id + "-subject-" + std::to_string(i);
        inst.answer_idx = correct_answers[i];
        inst.resolved_answer = correct_answers[i];
        r.instances.push_back(std::move(inst));
    }
    return r;
}

/// Oracle descriptor that makes the model "predict" favored(relation, instance)
/// for every instance and template: the favored statement text scores -1.0,
/// everything else falls back to the -100.0 default.
template <typename Favored>
BackendDescriptor designed_oracle(const Dataset& dataset, Favored favored,
                                  const std::string& model_name = "designed-oracle") {
    BackendDescriptor d;
    d.kind = BackendKind::Oracle;
    d.model_name = model_name;
    for (const auto& relation : dataset.relations) {
        for (std::size_t i = 0; i < relation.instances.size(); ++i) {
            std::size_t fav = favored(relation, i);
            for (std::size_t t = 0; t < relation.templates.size(); ++t) {
                auto statements = build_statements(relation, i, t);
                d.oracle_entries[statements[fav].text] = {{"<s>"}, {-1.0}};
            }
        }
    }
    return d;
}

/// Oracle that answers every instance correctly.
inline BackendDescriptor perfect_oracle(const Dataset& dataset) {
    return designed_oracle(dataset, [](const Relation& r, std::size_t i) {
        return r.instances[i].resolved_answer;
    });
}

/// Deterministic pseudo-random backend: every text gets a single-token score
/// drawn from a hash of (seed, text). Scores are a pure function of the text.
class RandomScoreBackend final : public ScoringBackend {
public:
    explicit RandomScoreBackend(std::uint64_t seed)
        : ScoringBackend([] {
              BackendDescriptor d;
              d.kind = BackendKind::Oracle;
              d.model_name = "random";
              return d;
          }()),
          seed_(seed) {}

    std::vector<TokenScores> score(const std::vector<std::string>& texts) override {
        std::vector<TokenScores> out;
        for (const auto& text : texts) {
            std::seed_seq seq{seed_, static_cast<std::uint64_t>(std::hash<std::string>{}(text))};
            std::mt19937_64 rng(seq);
            std::uniform_real_distribution<double> dist(-10.0, 0.0);
            out.push_back({{"<s>"}, {dist(rng)}});
        }
        return out;
    }

private:
    std::uint64_t seed_;
};

struct TempDir {
    std::filesystem::path path;
    explicit TempDir(const std::string& tag) : path(temp_dir(tag)) {}
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
};

inline std::string slurp(const std::filesystem::path& file) {
    std::ifstream in(file, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace pubquiz::testing
