#pragma once

#include <filesystem>
#include <functional>
#include <optional>

#include "pubquiz/dataset.hpp"
#include "pubquiz/results.hpp"
#include "pubquiz/scoring.hpp"

namespace pubquiz {

struct TemplateSelection {
    bool all = false;
    std::size_t index = 0;

    static TemplateSelection All() { return {true, 0}; }
    static TemplateSelection Single(std::size_t i) { return {false, i}; }
    std::string to_string() const { return all ? "all" : std::to_string(index); }
};

struct RunConfig {
    TemplateSelection template_selection;
    Reduction reduction = Reduction::Sum;
    int batch_size = 32;
    bool store_instance_predictions = true;
    std::optional<std::filesystem::path> save_path;
    std::vector<std::string> metrics;  // requested metric names, e.g. {"accuracy"}

    // Test hook, invoked after each relation has been evaluated and flushed.
    std::function<void(const std::string& relation_id)> on_relation_done;
};

/// Runs the full probe: every instance of every relation is turned into one
/// multiple-choice item, all candidate statements are scored, and the ranking
/// outcome recorded. Results are flushed per relation when save_path is set;
/// a backend failure aborts the run and leaves a partial directory marked
/// complete=false.
DatasetResults evaluate_dataset(const Dataset& dataset, ScoringBackend& backend,
                                const RunConfig& config);

DatasetResults evaluate_dataset(const Dataset& dataset, const BackendDescriptor& backend,
                                const RunConfig& config);

/// Evaluates an ordered series of checkpoints; each result is tagged with its
/// series position. A failing checkpoint is recorded (complete=false) and the
/// remaining checkpoints are still evaluated. When config.save_path is set,
/// checkpoint i is saved under "<save_path>/checkpoint_<i>".
std::vector<DatasetResults> evaluate_checkpoint_series(
    const std::vector<BackendDescriptor>& checkpoints, const Dataset& dataset,
    const RunConfig& config);

}  // namespace pubquiz
