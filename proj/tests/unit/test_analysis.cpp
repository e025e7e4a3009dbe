#include <cmath>
#include <numeric>
#include <random>

#include "doctest.h"
#include "helpers.hpp"
#include "pubquiz/analysis.hpp"
#include "pubquiz/evaluator.hpp"

using namespace pubquiz;
using namespace pubquiz::testing;

namespace {

DatasetResults results_with_accuracy(const std::string& model, std::size_t correct,
                                     std::size_t total) {
    DatasetResults results;
    results.metadata.model_name = model;
    results.metadata.dataset_name = "synthetic";
    RelationResult r;
    r.relation_id = "R1";
    r.template_count = 1;
    r.instance_count = total;
    r.correct_per_template = {correct};
    r.total_per_template = {total};
    r.predictions_stored = false;
    results.relations.push_back(std::move(r));
    return results;
}

}  // namespace

TEST_CASE("softmax basics") {
    auto equal = softmax({0.0, 0.0, 0.0});
    for (double p : equal)
        CHECK(p == doctest::Approx(1.0 / 3.0).epsilon(1e-12));

    SUBCASE("shift invariance") {
        std::mt19937 rng(11);
        std::uniform_real_distribution<double> dist(-30.0, 0.0);
        for (int round = 0; round < 20; ++round) {
            std::vector<double> scores(5);
            for (auto& s : scores)
                s = dist(rng);
            auto base = softmax(scores);
            for (auto& s : scores)
                s += 17.3;
            auto shifted = softmax(scores);
            for (std::size_t i = 0; i < base.size(); ++i)
                CHECK(std::abs(base[i] - shifted[i]) < 1e-9);
        }
    }
}

TEST_CASE("estimate_bias: distributions sum to 1 and average over instances") {
    Dataset dataset;
    dataset.name = "bias";
    dataset.relations.push_back(make_relation("R1", 2, {0, 1}));
    // Instance 0 one-hot on answer 0, instance 1 one-hot on answer 1: widely
    // separated scores make the softmax effectively [1,0] and [0,1].
    BackendDescriptor oracle = perfect_oracle(dataset);
    oracle.oracle_default = -1000.0;
    auto results = evaluate_dataset(dataset, *make_backend(oracle), {});

    auto report = estimate_bias(results, "R1");
    REQUIRE(report.mean.size() == 2);
    CHECK(std::accumulate(report.mean.begin(), report.mean.end(), 0.0) ==
          doctest::Approx(1.0).epsilon(1e-9));
    CHECK(report.mean[0] == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(report.mean[1] == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(report.reduction == "sum");

    CHECK_THROWS_AS(estimate_bias(results, "missing"), ResultsError);
}

TEST_CASE("one-hot correct predictions over a balanced relation give a uniform bias") {
    Dataset dataset;
    dataset.name = "balanced";
    // 8 instances, 4 answers, each answer correct exactly twice.
    dataset.relations.push_back(
        make_relation("R1", 4, {0, 1, 2, 3, 0, 1, 2, 3}, {"T1 [X] [Y].", "T2 [Y] [X]."}));
    BackendDescriptor oracle = perfect_oracle(dataset);
    oracle.oracle_default = -1000.0;
    RunConfig config;
    config.template_selection = TemplateSelection::All();
    auto results = evaluate_dataset(dataset, *make_backend(oracle), config);

    auto report = estimate_bias(results, "R1");
    REQUIRE(report.per_template.size() == 2);
    for (const auto& dist : report.per_template)
        for (double p : dist)
            CHECK(p == doctest::Approx(0.25).epsilon(1e-9));
    for (std::size_t a = 0; a < 4; ++a) {
        CHECK(report.mean[a] == doctest::Approx(0.25).epsilon(1e-9));
        CHECK(report.min[a] <= report.mean[a]);
        CHECK(report.max[a] >= report.mean[a]);
    }
}

TEST_CASE("bias is unavailable for metrics-only results") {
    auto results = results_with_accuracy("m", 1, 2);
    CHECK_THROWS_AS(estimate_bias(results, "R1"), ResultsError);
}

TEST_CASE("generic-subject bias averages per-subject distributions") {
    Dataset dataset;
    dataset.name = "generic";
    dataset.relations.push_back(make_relation("R1", 7, {0}));
    const Relation& relation = dataset.relations[0];
    std::vector<std::string> subjects = {"it", "the region", "this place",
                                         "the area", "that spot", "the territory"};

    SUBCASE("uniform oracle gives the uniform distribution") {
        BackendDescriptor flat;
        flat.kind = BackendKind::Oracle;
        auto backend = make_backend(flat);
        auto report = estimate_generic_bias(*backend, relation, subjects);
        REQUIRE(report.per_subject.size() == 6);
        for (const auto& dist : report.per_subject)
            for (double p : dist)
                CHECK(p == doctest::Approx(1.0 / 7.0).epsilon(1e-9));
        for (double p : report.mean)
            CHECK(p == doctest::Approx(1.0 / 7.0).epsilon(1e-9));
    }

    SUBCASE("an answer favored for every subject dominates the mean") {
        BackendDescriptor oracle;
        oracle.kind = BackendKind::Oracle;
        oracle.oracle_default = -1000.0;
        for (const auto& subject : subjects) {
            auto statements = build_generic_statements(relation, {subject}, 0);
            oracle.oracle_entries[statements[3].text] = {{"<s>"}, {-1.0}};
        }
        auto backend = make_backend(oracle);
        auto report = estimate_generic_bias(*backend, relation, subjects);
        std::size_t argmax = 0;
        for (std::size_t a = 1; a < report.mean.size(); ++a)
            if (report.mean[a] > report.mean[argmax])
                argmax = a;
        CHECK(argmax == 3);
        CHECK(report.mean[3] > 0.99);
    }

    SUBCASE("empty subject list is rejected") {
        BackendDescriptor flat;
        flat.kind = BackendKind::Oracle;
        auto backend = make_backend(flat);
        CHECK_THROWS_AS(estimate_generic_bias(*backend, relation, {}), std::invalid_argument);
    }
}

TEST_CASE("relative trajectory arithmetic") {
    SUBCASE("a drop from 0.405 to 0.2931 is 72.37 percent of baseline") {
        std::vector<DatasetResults> series = {results_with_accuracy("m", 4050, 10000),
                                              results_with_accuracy("m", 2931, 10000)};
        auto report = relative_trajectory(series);
        REQUIRE(report.points.size() == 2);
        CHECK(report.points[0].relative == doctest::Approx(100.0));
        CHECK(*report.points[1].relative == doctest::Approx(72.37).epsilon(0.0002));
    }

    SUBCASE("constant series stays at 100") {
        std::vector<DatasetResults> series(4, results_with_accuracy("m", 3, 7));
        for (const auto& p : relative_trajectory(series).points)
            CHECK(*p.relative == doctest::Approx(100.0));
    }

    SUBCASE("zero baseline yields undefined markers") {
        std::vector<DatasetResults> series = {results_with_accuracy("m", 0, 5),
                                              results_with_accuracy("m", 2, 5)};
        auto report = relative_trajectory(series);
        CHECK(report.points[0].relative == doctest::Approx(100.0));
        CHECK_FALSE(report.points[1].relative.has_value());
    }

    SUBCASE("scale-free: scaling all absolutes leaves relatives unchanged") {
        std::vector<DatasetResults> series = {results_with_accuracy("m", 40, 100),
                                              results_with_accuracy("m", 25, 100),
                                              results_with_accuracy("m", 10, 100)};
        std::vector<DatasetResults> scaled = {results_with_accuracy("m", 40, 400),
                                              results_with_accuracy("m", 25, 400),
                                              results_with_accuracy("m", 10, 400)};
        auto a = relative_trajectory(series);
        auto b = relative_trajectory(scaled);
        for (std::size_t i = 0; i < a.points.size(); ++i)
            CHECK(*a.points[i].relative == doctest::Approx(*b.points[i].relative).epsilon(1e-12));
    }

    CHECK_THROWS_AS(relative_trajectory({}), ResultsError);
}

TEST_CASE("compare_models builds a leaderboard table") {
    SUBCASE("identical results give identical rows") {
        auto r = results_with_accuracy("same", 3, 4);
        auto table = compare_models({r, r}, Grouping::Overall);
        REQUIRE(table.rows.size() == 2);
        CHECK(*table.rows[0].values[0] == *table.rows[1].values[0]);
        CHECK_FALSE(table.dataset_mismatch);
    }

    SUBCASE("designed accuracies 1.0 and 0.5 appear verbatim") {
        auto table = compare_models(
            {results_with_accuracy("strong", 8, 8), results_with_accuracy("weak", 4, 8)},
            Grouping::Overall);
        CHECK(*table.rows[0].values[0] == doctest::Approx(1.0));
        CHECK(*table.rows[1].values[0] == doctest::Approx(0.5));
    }

    SUBCASE("mismatched dataset names raise the warning flag") {
        auto a = results_with_accuracy("m1", 1, 2);
        auto b = results_with_accuracy("m2", 1, 2);
        b.metadata.dataset_name = "other";
        CHECK(compare_models({a, b}, Grouping::Overall).dataset_mismatch);
    }

    CHECK_THROWS_AS(compare_models({}, Grouping::Overall), ResultsError);
}
