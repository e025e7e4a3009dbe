#include <cmath>
#include <random>

#include "doctest.h"
#include "helpers.hpp"
#include "pubquiz/evaluator.hpp"
#include "pubquiz/results.hpp"

using namespace pubquiz;
using namespace pubquiz::testing;

namespace {

// Results with randomized correctness, annotated with 1-3 domains per relation.
DatasetResults random_results(std::mt19937& rng, std::size_t relation_count = 6) {
    static const std::vector<std::vector<std::string>> domain_sets = {
        {"Geography"}, {"Science", "Biographical"}, {"Culture", "Biographical", "Geography"}};
    Dataset dataset;
    dataset.name = "random-fixture";
    for (std::size_t r = 0; r < relation_count; ++r) {
        std::size_t answers = 3 + rng() % 4;
        std::size_t instances = 2 + rng() % 8;
        std::vector<std::size_t> correct(instances);
        for (auto& c : correct)
            c = rng() % answers;
        auto relation = make_relation("G" + std::to_string(r), answers, correct,
                                      {"A [X] B [Y].", "C [Y] D [X]."});
        relation.domains = domain_sets[r % domain_sets.size()];
        dataset.relations.push_back(std::move(relation));
    }
    auto backend = designed_oracle(dataset, [&rng](const Relation& rel, std::size_t i) {
        // Roughly half the instances answered correctly.
        if (rng() % 2 == 0)
            return rel.instances[i].resolved_answer;
        return (rel.instances[i].resolved_answer + 1) % rel.answer_space.size();
    });
    RunConfig config;
    config.template_selection = TemplateSelection::All();
    return evaluate_dataset(dataset, *make_backend(backend), config);
}

}  // namespace

TEST_CASE("results round trip: same metrics before and after reload") {
    Dataset dataset;
    dataset.name = "rt";
    dataset.relations.push_back(make_relation("R1", 4, {0, 1, 2, 3, 0}));
    auto backend = make_backend(perfect_oracle(dataset));
    TempDir dir("results_rt");
    RunConfig config;
    config.save_path = dir.path;
    auto written = evaluate_dataset(dataset, *backend, config);

    auto loaded = load_results(dir.path);
    CHECK(loaded.metadata.complete);
    CHECK(loaded.metadata.dataset_name == "rt");
    CHECK(loaded.overall_accuracy() == doctest::Approx(written.overall_accuracy()));
    REQUIRE(loaded.relations.size() == 1);
    CHECK(loaded.relations[0].predictions.size() == 5);
    CHECK(loaded.relations[0].answer_labels == dataset.relations[0].answer_space.labels);
}

TEST_CASE("metrics-only directories load without instance tables") {
    Dataset dataset;
    dataset.name = "mo";
    dataset.relations.push_back(make_relation("R1", 4, {0, 1, 2}));
    auto backend = make_backend(perfect_oracle(dataset));
    TempDir dir("results_mo");
    RunConfig config;
    config.save_path = dir.path;
    config.store_instance_predictions = false;
    config.metrics = {"accuracy"};
    evaluate_dataset(dataset, *backend, config);

    auto loaded = load_results(dir.path);
    CHECK_FALSE(loaded.instance_level());
    CHECK(loaded.overall_accuracy() == doctest::Approx(1.0));
    CHECK(get_metrics(loaded, Grouping::Relation).rows.size() == 1);
    CHECK_THROWS_WITH_AS(get_metrics(loaded, Grouping::None), doctest::Contains("not stored"),
                         ResultsError);
}

TEST_CASE("orphaned result files are loaded and flagged") {
    Dataset dataset;
    dataset.name = "orphan";
    dataset.relations.push_back(make_relation("R1", 3, {0, 1}));
    auto backend = make_backend(perfect_oracle(dataset));
    TempDir dir("results_orphan");
    RunConfig config;
    config.save_path = dir.path;
    evaluate_dataset(dataset, *backend, config);
    std::filesystem::copy(dir.path / "R1_results.jsonl", dir.path / "R9_results.jsonl");

    auto loaded = load_results(dir.path);
    REQUIRE(loaded.relations.size() == 2);
    const RelationResult* orphan = loaded.find("R9");
    REQUIRE(orphan != nullptr);
    CHECK(orphan->orphaned);
    CHECK_FALSE(loaded.find("R1")->orphaned);
}

TEST_CASE("corrupt result lines are skipped with a flag") {
    Dataset dataset;
    dataset.name = "corrupt";
    dataset.relations.push_back(make_relation("R1", 3, {0, 1, 2}));
    auto backend = make_backend(perfect_oracle(dataset));
    TempDir dir("results_corrupt");
    RunConfig config;
    config.save_path = dir.path;
    evaluate_dataset(dataset, *backend, config);
    {
        std::ofstream out(dir.path / "R1_results.jsonl", std::ios::app);
        out << "{broken\n";
    }
    auto loaded = load_results(dir.path);
    CHECK(loaded.load_flagged_corrupt);
    CHECK(loaded.find("R1")->corrupt);
    CHECK(loaded.find("R1")->predictions.size() == 3);
}

TEST_CASE("domain grouping uses fractional 1/k supports") {
    Dataset dataset;
    dataset.name = "dom";
    auto relation = make_relation("R1", 4, std::vector<std::size_t>(10, 1));
    relation.domains = {"Arts", "Economic"};
    dataset.relations.push_back(std::move(relation));
    auto results = evaluate_dataset(dataset, *make_backend(perfect_oracle(dataset)), {});

    auto report = get_metrics(results, Grouping::Domain);
    REQUIRE(report.rows.size() == 2);
    // 10 instances over 2 domains: support 5.0 each.
    CHECK(report.rows[0].support == doctest::Approx(5.0).epsilon(1e-12));
    CHECK(report.rows[1].support == doctest::Approx(5.0).epsilon(1e-12));
    CHECK(report.rows[0].key == "Arts");
}

TEST_CASE("domain grouping without annotations is an error") {
    Dataset dataset;
    dataset.name = "nodom";
    dataset.relations.push_back(make_relation("R1", 3, {0}));
    auto results = evaluate_dataset(dataset, *make_backend(perfect_oracle(dataset)), {});
    CHECK_THROWS_AS(get_metrics(results, Grouping::Domain), ResultsError);
}

TEST_CASE("perfect fixture scores 1.0 under every grouping") {
    std::mt19937 rng(5);
    Dataset dataset;
    dataset.name = "perfect";
    for (int r = 0; r < 3; ++r) {
        auto relation = make_relation("P" + std::to_string(r), 4, {0, 1, 2, 3});
        relation.domains = {"D" + std::to_string(r % 2)};
        dataset.relations.push_back(std::move(relation));
    }
    auto results = evaluate_dataset(dataset, *make_backend(perfect_oracle(dataset)), {});
    for (auto grouping : {Grouping::Overall, Grouping::Domain, Grouping::Cardinality,
                          Grouping::Relation, Grouping::None})
        for (const auto& row : get_metrics(results, grouping).rows)
            CHECK(row.accuracy == doctest::Approx(1.0));
}

TEST_CASE("grouped metrics are consistent with the overall accuracy") {
    std::mt19937 rng(2024);
    for (int round = 0; round < 8; ++round) {
        auto results = random_results(rng);
        double total_support = 0;
        for (const auto& r : results.relations)
            for (auto n : r.total_per_template)
                total_support += static_cast<double>(n);
        double overall = results.overall_accuracy();

        for (auto grouping : {Grouping::Domain, Grouping::Cardinality, Grouping::Relation}) {
            auto report = get_metrics(results, grouping);
            double weighted = 0, support = 0;
            for (const auto& row : report.rows) {
                weighted += row.accuracy * row.support;
                support += row.support;
            }
            // Support conservation and support-weighted consistency.
            CHECK(support == doctest::Approx(total_support).epsilon(1e-9));
            CHECK(weighted / support == doctest::Approx(overall).epsilon(1e-12));
        }
    }
}

TEST_CASE("brute-force recount matches get_metrics on small fixtures") {
    std::mt19937 rng(99);
    auto results = random_results(rng, 4);

    // Independent recount: a direct loop over the stored prediction rows.
    std::size_t correct = 0, total = 0;
    for (const auto& r : results.relations) {
        for (const auto& p : r.predictions) {
            ++total;
            std::size_t argmax = 0;
            for (std::size_t a = 1; a < p.scores.size(); ++a)
                if (p.scores[a] > p.scores[argmax])
                    argmax = a;
            if (argmax == p.correct_index)
                ++correct;
        }
    }
    REQUIRE(total <= 50 * 2);
    auto report = get_metrics(results, Grouping::Overall);
    REQUIRE(report.rows.size() == 1);
    CHECK(report.rows[0].accuracy ==
          doctest::Approx(static_cast<double>(correct) / total).epsilon(1e-12));
    CHECK(report.rows[0].support == doctest::Approx(static_cast<double>(total)));
}

TEST_CASE("mean-over-templates averages per-template accuracies with equal weight") {
    Dataset dataset;
    dataset.name = "mot";
    dataset.relations.push_back(
        make_relation("R1", 2, {0, 0, 0, 0}, {"T1 [X] [Y].", "T2 [X] [Y]."}));
    // Template 0: all 4 correct; template 1: only the first correct.
    BackendDescriptor oracle = designed_oracle(dataset, [](const Relation&, std::size_t) {
        return std::size_t{0};
    });
    const Relation& rel = dataset.relations[0];
    for (std::size_t i = 1; i < 4; ++i) {
        auto statements = build_statements(rel, i, 1);
        oracle.oracle_entries[statements[1].text] = {{"<s>"}, {-0.5}};
    }
    RunConfig config;
    config.template_selection = TemplateSelection::All();
    auto results = evaluate_dataset(dataset, *make_backend(oracle), config);

    auto pooled = get_metrics(results, Grouping::Overall, TemplatePolicy::PerTemplate);
    CHECK(pooled.rows[0].accuracy == doctest::Approx(5.0 / 8.0));
    CHECK(pooled.rows[0].support == doctest::Approx(8.0));

    auto averaged = get_metrics(results, Grouping::Overall, TemplatePolicy::MeanOverTemplates);
    CHECK(averaged.rows[0].accuracy == doctest::Approx((1.0 + 0.25) / 2.0));
    CHECK(averaged.rows[0].support == doctest::Approx(4.0));
}
