#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "pubquiz/dataset.hpp"
#include "pubquiz/scoring.hpp"

namespace pubquiz {

class ResultsError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Scores and ranking outcome for one (instance, template) pair.
struct InstancePrediction {
    std::size_t instance_index = 0;
    std::size_t template_index = 0;
    std::vector<double> scores;  // one per answer option, answer-space order
    std::size_t predicted_index = 0;  // argmax, ties broken to the lowest index
    std::size_t correct_index = 0;
    std::size_t tie_count = 1;  // number of options attaining the max
};

struct RelationResult {
    std::string relation_id;
    std::vector<std::string> answer_labels;
    std::vector<std::string> domains;
    std::optional<Cardinality> cardinality;
    std::size_t template_count = 1;
    std::size_t instance_count = 0;

    std::vector<InstancePrediction> predictions;  // empty in metrics-only results
    bool predictions_stored = true;

    // Per-template tallies; the only per-relation data kept in metrics-only mode.
    std::vector<std::size_t> correct_per_template;
    std::vector<std::size_t> total_per_template;

    bool orphaned = false;  // result file without a metadata entry
    bool corrupt = false;   // at least one unparseable line was skipped

    void tally();  // recomputes the per-template counts from predictions
    double accuracy() const;
};

struct RunMetadata {
    std::string model_name;
    std::string backend_kind;
    std::string endpoint;
    std::string model_kind;
    std::string reduction;
    std::string template_selection;  // "all" or a template index
    std::string dataset_name;
    std::string timestamp;
    std::string engine_version;
    std::vector<std::string> requested_metrics;
    bool complete = true;
    std::string error;       // set when complete == false
    int series_position = -1;  // >= 0 inside a checkpoint series
};

struct DatasetResults {
    RunMetadata metadata;
    std::vector<RelationResult> relations;
    bool load_flagged_corrupt = false;

    bool instance_level() const;
    const RelationResult* find(const std::string& relation_id) const;
    double overall_accuracy() const;
};

/// Reads a results directory written by the evaluator (either per-relation
/// prediction files or a metrics-only metrics.json).
DatasetResults load_results(const std::filesystem::path& path);

// Persistence building blocks; the evaluator flushes through these so a crash
// loses at most one relation.
void write_run_metadata(const DatasetResults& results, const std::filesystem::path& dir);
void write_relation_result(const RelationResult& relation, const std::filesystem::path& dir);
void write_metrics_file(const DatasetResults& results, const std::filesystem::path& dir);
void save_results(const DatasetResults& results, const std::filesystem::path& dir);

enum class Grouping { Overall, Domain, Cardinality, Relation, None };
enum class TemplatePolicy { PerTemplate, MeanOverTemplates };

Grouping grouping_from_string(const std::string& s);
std::string to_string(Grouping g);

struct MetricsRow {
    std::string key;
    double accuracy = 0.0;
    double support = 0.0;
};

struct MetricsReport {
    Grouping grouping = Grouping::Overall;
    TemplatePolicy template_policy = TemplatePolicy::PerTemplate;
    std::vector<MetricsRow> rows;
};

/// The four aggregation granularities. Domain grouping weighs each relation's
/// counts by 1/(number of domains), so supports can be fractional.
/// Grouping::None yields one row per prediction, keyed
/// "<relation>/<instance>/<template>" with 0/1 accuracy and support 1.
MetricsReport get_metrics(const DatasetResults& results, Grouping grouping,
                          TemplatePolicy template_policy = TemplatePolicy::PerTemplate);

}  // namespace pubquiz
