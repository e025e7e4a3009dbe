// pubquiz: evaluate relational knowledge in language models by ranking
// candidate statements from a closed answer space.
//
// Exit codes: 0 ok, 1 configuration error, 2 partial run, 3 backend
// unreachable, 4 required data not stored.

#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "pubquiz/analysis.hpp"
#include "pubquiz/evaluator.hpp"
#include "pubquiz/mock_server.hpp"
#include "pubquiz/reports.hpp"

namespace fs = std::filesystem;
using namespace pubquiz;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitPartial = 2;
constexpr int kExitBackend = 3;
constexpr int kExitNoData = 4;

struct BackendFlags {
    std::string url;
    std::string model = "remote";
    std::string model_kind = "causal";
    std::string oracle_file;
    std::string corpus_file;
    double smoothing = 0.0;
    double default_logprob = -100.0;
    long timeout_secs = 30;
    int max_in_flight = 4;

    void attach(CLI::App* cmd) {
        cmd->add_option("--backend", url, "Scoring endpoint URL (e.g. http://localhost:8081)")
            ->envname("PUBQUIZ_BACKEND_URL");
        cmd->add_option("--model", model, "Model name recorded in the results");
        cmd->add_option("--model-kind", model_kind, "Scoring rule: causal or masked")
            ->check(CLI::IsMember({"causal", "masked"}));
        cmd->add_option("--oracle", oracle_file, "In-process oracle-table spec file (JSON)");
        cmd->add_option("--corpus", corpus_file, "In-process unigram corpus file");
        cmd->add_option("--smoothing", smoothing, "Additive smoothing for the unigram backend");
        cmd->add_option("--default-logprob", default_logprob,
                        "Oracle score for texts missing from the table");
        cmd->add_option("--timeout", timeout_secs, "Request timeout in seconds")
            ->envname("PUBQUIZ_TIMEOUT_SECS");
        cmd->add_option("--max-in-flight", max_in_flight, "Concurrent requests cap");
    }

    BackendDescriptor resolve() const {
        BackendDescriptor d;
        d.model_kind = model_kind_from_string(model_kind);
        d.timeout = std::chrono::seconds(timeout_secs);
        d.max_in_flight = max_in_flight;
        if (!url.empty()) {
            d.kind = BackendKind::Remote;
            d.endpoint = url;
            d.model_name = model;
        } else if (!oracle_file.empty()) {
            auto spec = load_oracle_spec(oracle_file);
            spec.default_logprob = default_logprob;
            d = spec.as_backend(d.model_kind);
            d.timeout = std::chrono::seconds(timeout_secs);
            d.max_in_flight = max_in_flight;
        } else if (!corpus_file.empty()) {
            std::ifstream in(corpus_file);
            if (!in)
                throw CLI::ValidationError("--corpus", "cannot open " + corpus_file);
            d.kind = BackendKind::Unigram;
            d.model_name = "unigram:" + fs::path(corpus_file).filename().string();
            d.corpus = {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
            d.smoothing = smoothing;
        } else {
            throw CLI::ValidationError("backend", "one of --backend, --oracle or --corpus is required");
        }
        return d;
    }
};

void emit(const std::string& rendered, const std::string& output_file) {
    if (output_file.empty()) {
        std::cout << rendered;
    } else {
        std::ofstream out(output_file);
        if (!out)
            throw CLI::ValidationError("--output", "cannot write " + output_file);
        out << rendered;
    }
}

int run_evaluate(const std::string& dataset_path, const BackendFlags& backend_flags,
                 long template_index, bool all_templates, const std::string& reduction,
                 int batch_size, const std::string& save_path,
                 const std::vector<std::string>& metrics_only, bool permissive) {
    if (save_path.empty() && metrics_only.empty()) {
        std::cerr << "error: --save is required unless --metrics-only is given\n";
        return kExitConfig;
    }

    LoadReport report;
    Dataset dataset = load_dataset(dataset_path, {.strict = !permissive}, &report);
    for (const auto& w : report.warnings)
        std::cerr << "warning: " << w << "\n";

    BackendDescriptor descriptor = backend_flags.resolve();
    if (descriptor.kind == BackendKind::Remote) {
        try {
            probe_remote_backend(descriptor);
        } catch (const BackendError& e) {
            std::cerr << "error: " << e.what() << "\n";
            return kExitBackend;
        }
    }

    RunConfig config;
    config.template_selection =
        all_templates ? TemplateSelection::All() : TemplateSelection::Single(template_index);
    config.reduction = reduction_from_string(reduction);
    config.batch_size = batch_size;
    if (!metrics_only.empty()) {
        config.store_instance_predictions = false;
        config.metrics = metrics_only;
    } else {
        config.metrics = {"accuracy"};
    }
    if (!save_path.empty())
        config.save_path = save_path;

    auto backend = make_backend(descriptor);
    DatasetResults results = evaluate_dataset(dataset, *backend, config);
    std::cout << "overall accuracy: " << results.overall_accuracy() << "\n";
    if (!results.metadata.complete) {
        std::cerr << "error: run incomplete: " << results.metadata.error << "\n";
        return kExitPartial;
    }
    return kExitOk;
}

DatasetResults load_with_info(const std::string& results_dir, const std::string& relation_info) {
    DatasetResults results = load_results(results_dir);
    if (!relation_info.empty()) {
        auto info = load_relation_info(relation_info);
        for (auto& r : results.relations) {
            auto it = info.find(r.relation_id);
            if (it == info.end())
                continue;
            if (!it->second.domains.empty())
                r.domains = it->second.domains;
            if (it->second.cardinality)
                r.cardinality = it->second.cardinality;
        }
    }
    if (results.load_flagged_corrupt)
        std::cerr << "warning: some result lines could not be parsed and were skipped\n";
    return results;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multiple-choice knowledge probe for language models"};
    app.require_subcommand(1);
    app.set_config("--config", "pubquiz.toml", "TOML config file mirroring the flag names");

    std::string format = "table";
    std::string output_file;

    // evaluate
    auto* cmd_evaluate = app.add_subcommand("evaluate", "Run the probe over a dataset");
    std::string dataset_path, save_path, reduction = "sum";
    long template_index = 0;
    bool all_templates = false, permissive = false;
    int batch_size = 32;
    std::vector<std::string> metrics_only;
    BackendFlags eval_backend;
    cmd_evaluate->add_option("--dataset", dataset_path, "Dataset directory")
        ->required()
        ->check(CLI::ExistingDirectory);
    eval_backend.attach(cmd_evaluate);
    cmd_evaluate->add_option("--template-index", template_index, "Template to evaluate (default 0)");
    cmd_evaluate->add_flag("--all-templates", all_templates, "Evaluate every template");
    cmd_evaluate->add_option("--reduction", reduction, "Statement score reduction")
        ->check(CLI::IsMember({"sum", "mean"}));
    cmd_evaluate->add_option("--batch-size", batch_size, "Statements per backend request")
        ->check(CLI::PositiveNumber);
    cmd_evaluate->add_option("--save", save_path, "Results directory");
    cmd_evaluate->add_option("--metrics-only", metrics_only,
                             "Skip instance-level storage; compute the named metrics");
    cmd_evaluate->add_flag("--permissive", permissive, "Skip malformed dataset lines instead of failing");

    // metrics
    auto* cmd_metrics = app.add_subcommand("metrics", "Aggregate stored results");
    std::string metrics_dir, accumulate = "overall", relation_info, template_policy = "per-template";
    cmd_metrics->add_option("results", metrics_dir, "Results directory")->required();
    cmd_metrics->add_option("--accumulate", accumulate, "Grouping granularity")
        ->check(CLI::IsMember({"overall", "domains", "cardinality", "relation", "none"}));
    cmd_metrics->add_option("--relation-info", relation_info, "Side file with domain annotations");
    cmd_metrics->add_option("--template-policy", template_policy, "Pooled or averaged templates")
        ->check(CLI::IsMember({"per-template", "mean"}));
    cmd_metrics->add_option("--format", format, "Output format")
        ->check(CLI::IsMember({"table", "csv", "json", "markdown"}));
    cmd_metrics->add_option("--output", output_file, "Write the report to a file");

    // bias
    auto* cmd_bias = app.add_subcommand("bias", "Answer-bias distribution for one relation");
    std::string bias_dir, bias_relation, subjects_file, bias_dataset, bias_reduction = "sum";
    BackendFlags bias_backend;
    cmd_bias->add_option("results", bias_dir, "Results directory (stored-score variant)");
    cmd_bias->add_option("--relation", bias_relation, "Relation id")->required();
    cmd_bias->add_option("--generic-subjects", subjects_file,
                         "File with one generic subject per line (live-scoring variant)");
    cmd_bias->add_option("--dataset", bias_dataset, "Dataset directory (generic variant)");
    cmd_bias->add_option("--reduction", bias_reduction, "Reduction for the generic variant")
        ->check(CLI::IsMember({"sum", "mean"}));
    bias_backend.attach(cmd_bias);
    cmd_bias->add_option("--format", format, "Output format")
        ->check(CLI::IsMember({"table", "csv", "json", "markdown"}));
    cmd_bias->add_option("--output", output_file, "Write the report to a file");

    // compare
    auto* cmd_compare = app.add_subcommand("compare", "Compare result directories");
    std::vector<std::string> compare_dirs;
    std::string relative_to, compare_accumulate = "overall", compare_info;
    cmd_compare->add_option("results", compare_dirs, "Result directories, in order")->required();
    cmd_compare->add_option("--relative-to", relative_to,
                            "Baseline directory: emit a relative trajectory");
    cmd_compare->add_option("--accumulate", compare_accumulate, "Grouping for the comparison table")
        ->check(CLI::IsMember({"overall", "domains", "cardinality", "relation"}));
    cmd_compare->add_option("--relation-info", compare_info, "Side file with domain annotations");
    cmd_compare->add_option("--format", format, "Output format")
        ->check(CLI::IsMember({"table", "csv", "json", "markdown"}));
    cmd_compare->add_option("--output", output_file, "Write the report to a file");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (*cmd_evaluate)
            return run_evaluate(dataset_path, eval_backend, template_index, all_templates,
                                reduction, batch_size, save_path, metrics_only, permissive);

        if (*cmd_metrics) {
            DatasetResults results = load_with_info(metrics_dir, relation_info);
            TemplatePolicy policy = template_policy == "mean" ? TemplatePolicy::MeanOverTemplates
                                                              : TemplatePolicy::PerTemplate;
            MetricsReport report;
            try {
                report = get_metrics(results, grouping_from_string(accumulate), policy);
            } catch (const ResultsError& e) {
                std::cerr << "error: " << e.what() << "\n";
                return kExitNoData;
            }
            emit(render(report, report_format_from_string(format)), output_file);
            return kExitOk;
        }

        if (*cmd_bias) {
            BiasReport report;
            if (!subjects_file.empty()) {
                if (bias_dataset.empty()) {
                    std::cerr << "error: --generic-subjects needs --dataset\n";
                    return kExitConfig;
                }
                std::ifstream in(subjects_file);
                if (!in) {
                    std::cerr << "error: cannot open " << subjects_file << "\n";
                    return kExitConfig;
                }
                std::vector<std::string> subjects;
                std::string line;
                while (std::getline(in, line))
                    if (!line.empty())
                        subjects.push_back(line);
                Dataset dataset = load_dataset(bias_dataset);
                const Relation* relation = dataset.find(bias_relation);
                if (!relation) {
                    std::cerr << "error: relation " << bias_relation << " not in the dataset\n";
                    return kExitConfig;
                }
                BackendDescriptor descriptor = bias_backend.resolve();
                if (descriptor.kind == BackendKind::Remote) {
                    try {
                        probe_remote_backend(descriptor);
                    } catch (const BackendError& e) {
                        std::cerr << "error: " << e.what() << "\n";
                        return kExitBackend;
                    }
                }
                auto backend = make_backend(descriptor);
                report = estimate_generic_bias(*backend, *relation, subjects,
                                               reduction_from_string(bias_reduction));
            } else {
                if (bias_dir.empty()) {
                    std::cerr << "error: a results directory or --generic-subjects is required\n";
                    return kExitConfig;
                }
                DatasetResults results = load_results(bias_dir);
                if (!results.find(bias_relation)) {
                    std::cerr << "error: relation " << bias_relation << " not in the results\n";
                    return kExitConfig;
                }
                try {
                    report = estimate_bias(results, bias_relation);
                } catch (const ResultsError& e) {
                    std::cerr << "error: " << e.what() << "\n";
                    return kExitNoData;
                }
            }
            emit(render(report, report_format_from_string(format)), output_file);
            return kExitOk;
        }

        if (*cmd_compare) {
            std::vector<DatasetResults> series;
            for (const auto& dir : compare_dirs)
                series.push_back(load_with_info(dir, compare_info));
            if (!relative_to.empty()) {
                // The baseline leads the series; drop a duplicate mention from
                // the positional list.
                std::vector<DatasetResults> ordered;
                ordered.push_back(load_with_info(relative_to, compare_info));
                for (std::size_t i = 0; i < compare_dirs.size(); ++i)
                    if (fs::weakly_canonical(compare_dirs[i]) != fs::weakly_canonical(relative_to))
                        ordered.push_back(std::move(series[i]));
                auto report = relative_trajectory(ordered);
                emit(render(report, report_format_from_string(format)), output_file);
            } else {
                auto table = compare_models(series, grouping_from_string(compare_accumulate));
                if (table.dataset_mismatch)
                    std::cerr << "warning: results were evaluated on different datasets\n";
                emit(render(table, report_format_from_string(format)), output_file);
            }
            return kExitOk;
        }
    } catch (const CLI::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const BackendError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitBackend;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    }
    return kExitConfig;
}
