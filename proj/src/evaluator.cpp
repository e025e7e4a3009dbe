#include "pubquiz/evaluator.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <unordered_map>

namespace fs = std::filesystem;

namespace pubquiz {

namespace {

std::string utc_timestamp() {
    auto now = std::chrono::system_clock::now();
    std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

RunMetadata make_metadata(const Dataset& dataset, const BackendDescriptor& backend,
                          const RunConfig& config) {
    RunMetadata m;
    m.model_name = backend.model_name;
    switch (backend.kind) {
        case BackendKind::Remote: m.backend_kind = "remote"; break;
        case BackendKind::Oracle: m.backend_kind = "oracle"; break;
        case BackendKind::Unigram: m.backend_kind = "unigram"; break;
    }
    m.endpoint = backend.endpoint;
    m.model_kind = to_string(backend.model_kind);
    m.reduction = to_string(config.reduction);
    m.template_selection = config.template_selection.to_string();
    m.dataset_name = dataset.name;
    m.timestamp = utc_timestamp();
    m.engine_version = PUBQUIZ_VERSION;
    m.requested_metrics = config.metrics;
    return m;
}

std::vector<std::size_t> selected_templates(const Relation& relation, const RunConfig& config) {
    if (config.template_selection.all) {
        std::vector<std::size_t> all(relation.templates.size());
        for (std::size_t t = 0; t < all.size(); ++t)
            all[t] = t;
        return all;
    }
    if (config.template_selection.index >= relation.templates.size())
        throw ResultsError("template index " + std::to_string(config.template_selection.index) +
                           " out of range for relation " + relation.id);
    return {config.template_selection.index};
}

// Scores every candidate statement of the relation, deduplicating identical
// texts across instances, and produces one prediction per (instance, template).
RelationResult evaluate_relation(const Relation& relation, ScoringBackend& backend,
                                 const RunConfig& config) {
    RelationResult result;
    result.relation_id = relation.id;
    result.answer_labels = relation.answer_space.labels;
    result.domains = relation.domains;
    result.cardinality = relation.instances.empty()
                             ? relation.cardinality
                             : std::optional<Cardinality>(relation.effective_cardinality());
    result.template_count = relation.templates.size();
    result.instance_count = relation.instances.size();

    auto templates = selected_templates(relation, config);

    std::vector<std::string> texts;                      // unique texts, first-seen order
    std::unordered_map<std::string, std::size_t> dedup;  // text -> index into texts
    struct Item {
        std::size_t instance;
        std::size_t tmpl;
        std::vector<std::size_t> score_slots;  // per answer, index into texts
    };
    std::vector<Item> items;

    for (std::size_t t : templates) {
        for (std::size_t i = 0; i < relation.instances.size(); ++i) {
            auto statements = build_statements(relation, i, t);
            Item item{i, t, {}};
            item.score_slots.reserve(statements.size());
            for (auto& s : statements) {
                auto [it, inserted] = dedup.try_emplace(s.text, texts.size());
                if (inserted)
                    texts.push_back(std::move(s.text));
                item.score_slots.push_back(it->second);
            }
            items.push_back(std::move(item));
        }
    }

    if (texts.empty())
        return result;

    auto token_scores = score_in_batches(backend, texts, config.batch_size);
    std::vector<double> reduced(token_scores.size());
    for (std::size_t i = 0; i < token_scores.size(); ++i)
        reduced[i] = reduce(token_scores[i], config.reduction);

    for (const auto& item : items) {
        InstancePrediction p;
        p.instance_index = item.instance;
        p.template_index = item.tmpl;
        p.scores.reserve(item.score_slots.size());
        for (std::size_t slot : item.score_slots)
            p.scores.push_back(reduced[slot]);
        p.predicted_index = 0;
        p.tie_count = 1;
        for (std::size_t a = 1; a < p.scores.size(); ++a) {
            if (p.scores[a] > p.scores[p.predicted_index]) {
                p.predicted_index = a;
                p.tie_count = 1;
            } else if (p.scores[a] == p.scores[p.predicted_index]) {
                ++p.tie_count;
            }
        }
        p.correct_index = relation.instances[item.instance].resolved_answer;
        result.predictions.push_back(std::move(p));
    }
    result.tally();
    return result;
}

}  // namespace

DatasetResults evaluate_dataset(const Dataset& dataset, ScoringBackend& backend,
                                const RunConfig& config) {
    if (!config.store_instance_predictions && config.metrics.empty())
        throw ResultsError("metrics-only mode needs at least one requested metric");

    DatasetResults results;
    results.metadata = make_metadata(dataset, backend.descriptor(), config);
    results.metadata.complete = false;

    if (config.save_path)
        write_run_metadata(results, *config.save_path);

    for (const auto& relation : dataset.relations) {
        RelationResult relation_result;
        try {
            relation_result = evaluate_relation(relation, backend, config);
        } catch (const BackendError& e) {
            results.metadata.error = std::string("relation ") + relation.id + ": " + e.what();
            break;
        }
        if (!config.store_instance_predictions) {
            relation_result.predictions.clear();
            relation_result.predictions_stored = false;
        }
        results.relations.push_back(std::move(relation_result));
        if (config.save_path) {
            if (config.store_instance_predictions)
                write_relation_result(results.relations.back(), *config.save_path);
            write_run_metadata(results, *config.save_path);
        }
        if (config.on_relation_done)
            config.on_relation_done(relation.id);
    }

    results.metadata.complete =
        results.metadata.error.empty() && results.relations.size() == dataset.relations.size();
    if (config.save_path) {
        if (!config.store_instance_predictions)
            write_metrics_file(results, *config.save_path);
        write_run_metadata(results, *config.save_path);
    }
    return results;
}

DatasetResults evaluate_dataset(const Dataset& dataset, const BackendDescriptor& backend,
                                const RunConfig& config) {
    auto b = make_backend(backend);
    return evaluate_dataset(dataset, *b, config);
}

std::vector<DatasetResults> evaluate_checkpoint_series(
    const std::vector<BackendDescriptor>& checkpoints, const Dataset& dataset,
    const RunConfig& config) {
    if (checkpoints.empty())
        throw ResultsError("checkpoint series is empty");
    std::vector<DatasetResults> series;
    for (std::size_t i = 0; i < checkpoints.size(); ++i) {
        RunConfig point_config = config;
        if (config.save_path)
            point_config.save_path = *config.save_path / ("checkpoint_" + std::to_string(i));
        DatasetResults results;
        try {
            auto backend = make_backend(checkpoints[i]);
            results = evaluate_dataset(dataset, *backend, point_config);
        } catch (const std::exception& e) {
            results.metadata = make_metadata(dataset, checkpoints[i], point_config);
            results.metadata.complete = false;
            results.metadata.error = e.what();
        }
        results.metadata.series_position = static_cast<int>(i);
        if (point_config.save_path)
            write_run_metadata(results, *point_config.save_path);
        series.push_back(std::move(results));
    }
    return series;
}

}  // namespace pubquiz
