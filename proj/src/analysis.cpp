#include "pubquiz/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace pubquiz {

std::vector<double> softmax(const std::vector<double>& scores) {
    if (scores.empty())
        throw std::invalid_argument("softmax of empty score vector");
    double max_score = *std::max_element(scores.begin(), scores.end());
    std::vector<double> out(scores.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        out[i] = std::exp(scores[i] - max_score);
        sum += out[i];
    }
    for (auto& v : out)
        v /= sum;
    return out;
}

namespace {

void summarize_across(const std::vector<std::vector<double>>& distributions, BiasReport& report) {
    std::size_t n = report.answer_labels.size();
    report.mean.assign(n, 0.0);
    report.min.assign(n, 1.0);
    report.max.assign(n, 0.0);
    for (const auto& dist : distributions) {
        for (std::size_t a = 0; a < n; ++a) {
            report.mean[a] += dist[a];
            report.min[a] = std::min(report.min[a], dist[a]);
            report.max[a] = std::max(report.max[a], dist[a]);
        }
    }
    for (auto& v : report.mean)
        v /= static_cast<double>(distributions.size());
}

std::vector<double> mean_of(const std::vector<std::vector<double>>& dists, std::size_t n) {
    std::vector<double> mean(n, 0.0);
    for (const auto& d : dists)
        for (std::size_t a = 0; a < n; ++a)
            mean[a] += d[a];
    for (auto& v : mean)
        v /= static_cast<double>(dists.size());
    return mean;
}

}  // namespace

BiasReport estimate_bias(const DatasetResults& results, const std::string& relation_id) {
    const RelationResult* relation = results.find(relation_id);
    if (!relation)
        throw ResultsError("relation " + relation_id + " not in the results");
    if (!relation->predictions_stored || relation->predictions.empty())
        throw ResultsError("relation " + relation_id +
                           ": instance-level scores not stored, cannot estimate bias");

    BiasReport report;
    report.relation_id = relation_id;
    report.answer_labels = relation->answer_labels;
    report.reduction = results.metadata.reduction;
    std::size_t n = relation->answer_labels.empty() ? relation->predictions.front().scores.size()
                                                    : relation->answer_labels.size();
    if (report.answer_labels.empty())
        report.answer_labels.resize(n);

    std::map<std::size_t, std::vector<std::vector<double>>> by_template;
    for (const auto& p : relation->predictions)
        by_template[p.template_index].push_back(softmax(p.scores));

    for (const auto& [t, dists] : by_template)
        report.per_template.push_back(mean_of(dists, n));
    summarize_across(report.per_template, report);
    return report;
}

BiasReport estimate_generic_bias(ScoringBackend& backend, const Relation& relation,
                                 const std::vector<std::string>& generic_subjects,
                                 Reduction reduction) {
    if (generic_subjects.empty())
        throw std::invalid_argument("generic subject list is empty");

    BiasReport report;
    report.relation_id = relation.id;
    report.answer_labels = relation.answer_space.labels;
    report.reduction = to_string(reduction);
    std::size_t n = relation.answer_space.size();

    // [subject][template] distributions; per-template averages over subjects,
    // per-subject constituents averaged over templates.
    std::vector<std::vector<std::vector<double>>> grid(generic_subjects.size());
    for (std::size_t t = 0; t < relation.templates.size(); ++t) {
        auto statements = build_generic_statements(relation, generic_subjects, t);
        auto token_scores = score_statements(backend, statements);
        for (std::size_t s = 0; s < generic_subjects.size(); ++s) {
            std::vector<double> scores(n);
            for (std::size_t a = 0; a < n; ++a)
                scores[a] = reduce(token_scores[s * n + a], reduction);
            grid[s].push_back(softmax(scores));
        }
    }

    for (std::size_t t = 0; t < relation.templates.size(); ++t) {
        std::vector<std::vector<double>> over_subjects;
        for (std::size_t s = 0; s < generic_subjects.size(); ++s)
            over_subjects.push_back(grid[s][t]);
        report.per_template.push_back(mean_of(over_subjects, n));
    }
    for (std::size_t s = 0; s < generic_subjects.size(); ++s)
        report.per_subject.push_back(mean_of(grid[s], n));
    summarize_across(report.per_template, report);
    return report;
}

TrajectoryReport relative_trajectory(const std::vector<DatasetResults>& series, Grouping grouping,
                                     const std::string& group_key) {
    if (series.empty())
        throw ResultsError("trajectory series is empty");

    auto absolute = [&](const DatasetResults& results) {
        if (grouping == Grouping::Overall)
            return results.overall_accuracy();
        auto report = get_metrics(results, grouping);
        for (const auto& row : report.rows)
            if (row.key == group_key)
                return row.accuracy;
        throw ResultsError("group \"" + group_key + "\" not found in the " + to_string(grouping) +
                           " metrics");
    };

    TrajectoryReport report;
    report.group_key = grouping == Grouping::Overall ? "overall" : group_key;
    double baseline = absolute(series.front());
    for (std::size_t i = 0; i < series.size(); ++i) {
        TrajectoryPoint point;
        point.position = static_cast<int>(i);
        point.absolute = absolute(series[i]);
        if (i == 0)
            point.relative = 100.0;
        else if (baseline != 0.0)
            point.relative = 100.0 * point.absolute / baseline;
        report.points.push_back(point);
    }
    return report;
}

ComparisonTable compare_models(const std::vector<DatasetResults>& results_list, Grouping grouping,
                               TemplatePolicy template_policy) {
    if (results_list.empty())
        throw ResultsError("no results to compare");

    ComparisonTable table;
    const std::string& dataset_name = results_list.front().metadata.dataset_name;
    for (const auto& results : results_list)
        if (results.metadata.dataset_name != dataset_name)
            table.dataset_mismatch = true;

    std::vector<MetricsReport> reports;
    for (const auto& results : results_list) {
        reports.push_back(get_metrics(results, grouping, template_policy));
        for (const auto& row : reports.back().rows)
            if (std::find(table.columns.begin(), table.columns.end(), row.key) ==
                table.columns.end())
                table.columns.push_back(row.key);
    }

    for (std::size_t i = 0; i < results_list.size(); ++i) {
        ComparisonTable::Row row;
        row.model = results_list[i].metadata.model_name;
        if (row.model.empty())
            row.model = "model_" + std::to_string(i);
        row.values.assign(table.columns.size(), std::nullopt);
        for (const auto& mrow : reports[i].rows) {
            auto it = std::find(table.columns.begin(), table.columns.end(), mrow.key);
            row.values[it - table.columns.begin()] = mrow.accuracy;
        }
        table.rows.push_back(std::move(row));
    }
    return table;
}

}  // namespace pubquiz
