#pragma once

#include <optional>
#include <string>
#include <vector>

#include "pubquiz/results.hpp"
#include "pubquiz/scoring.hpp"

namespace pubquiz {

/// Mean softmax distribution over the answer options of one relation: the
/// answers a model favors, per template and summarized across templates.
struct BiasReport {
    std::string relation_id;
    std::vector<std::string> answer_labels;
    std::string reduction;  // reduction the underlying scores were computed with
    std::vector<std::vector<double>> per_template;  // [template][answer]
    std::vector<std::vector<double>> per_subject;   // generic variant only, [subject][answer]
    std::vector<double> mean;  // across templates
    std::vector<double> min;
    std::vector<double> max;
};

/// Softmax with max-subtraction, shift invariant.
std::vector<double> softmax(const std::vector<double>& scores);

/// Bias from stored instance-level scores: per template, the softmax
/// distributions of all instances averaged over instances, then mean/min/max
/// taken across templates.
BiasReport estimate_bias(const DatasetResults& results, const std::string& relation_id);

/// Bias measured without subject information: generic subjects replace the
/// instances, statements are scored live, and the per-subject distributions
/// are averaged.
BiasReport estimate_generic_bias(ScoringBackend& backend, const Relation& relation,
                                 const std::vector<std::string>& generic_subjects,
                                 Reduction reduction = Reduction::Sum);

struct TrajectoryPoint {
    int position = 0;
    double absolute = 0.0;
    std::optional<double> relative;  // percent of baseline; empty when baseline == 0
};

struct TrajectoryReport {
    std::string group_key;
    std::vector<TrajectoryPoint> points;
};

/// Scores across a checkpoint series relative to position 0 (in percent).
/// The metric is the accuracy of the given group (Overall by default).
TrajectoryReport relative_trajectory(const std::vector<DatasetResults>& series,
                                     Grouping grouping = Grouping::Overall,
                                     const std::string& group_key = "");

struct ComparisonTable {
    std::vector<std::string> columns;  // group keys
    struct Row {
        std::string model;
        std::vector<std::optional<double>> values;
    };
    std::vector<Row> rows;
    bool dataset_mismatch = false;
};

/// One row per model, one column per group; the leaderboard emitter.
ComparisonTable compare_models(const std::vector<DatasetResults>& results_list, Grouping grouping,
                               TemplatePolicy template_policy = TemplatePolicy::PerTemplate);

}  // namespace pubquiz
