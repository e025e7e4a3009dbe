#include <pybind11/chrono.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "pubquiz/analysis.hpp"
#include "pubquiz/evaluator.hpp"
#include "pubquiz/mock_server.hpp"
#include "pubquiz/reports.hpp"

namespace py = pybind11;
using namespace pubquiz;

PYBIND11_MODULE(_core, m) {
    m.doc() = "Multiple-choice knowledge probe engine";
    m.attr("__version__") = PUBQUIZ_VERSION;

    py::register_exception<DatasetError>(m, "DatasetError");
    py::register_exception<ResultsError>(m, "ResultsError");
    py::register_exception<BackendError>(m, "BackendError");

    // ---- dataset ----------------------------------------------------------

    py::enum_<Cardinality>(m, "Cardinality")
        .value("ONE_TO_ONE", Cardinality::OneToOne)
        .value("ONE_TO_MANY", Cardinality::OneToMany);

    py::class_<AnswerSpace>(m, "AnswerSpace")
        .def(py::init<>())
        .def_readwrite("ids", &AnswerSpace::ids)
        .def_readwrite("labels", &AnswerSpace::labels)
        .def("__len__", &AnswerSpace::size)
        .def("index_of_id", &AnswerSpace::index_of_id);

    py::class_<RelationInstance>(m, "RelationInstance")
        .def(py::init<>())
        .def_readwrite("sub_id", &RelationInstance::sub_id)
        .def_readwrite("sub_label", &RelationInstance::sub_label)
        .def_readwrite("obj_id", &RelationInstance::obj_id)
        .def_readwrite("obj_label", &RelationInstance::obj_label)
        .def_readwrite("answer_idx", &RelationInstance::answer_idx)
        .def_readwrite("resolved_answer", &RelationInstance::resolved_answer);

    py::class_<Relation>(m, "Relation")
        .def(py::init<>())
        .def_readwrite("id", &Relation::id)
        .def_readwrite("templates", &Relation::templates)
        .def_readwrite("answer_space", &Relation::answer_space)
        .def_readwrite("instances", &Relation::instances)
        .def_readwrite("domains", &Relation::domains)
        .def_readwrite("cardinality", &Relation::cardinality)
        .def("effective_cardinality", &Relation::effective_cardinality);

    py::class_<Dataset>(m, "Dataset")
        .def(py::init<>())
        .def_readwrite("name", &Dataset::name)
        .def_readwrite("relations", &Dataset::relations)
        .def("find", &Dataset::find, py::return_value_policy::reference_internal)
        .def("total_instances", &Dataset::total_instances);

    py::class_<LoadOptions>(m, "LoadOptions")
        .def(py::init<>())
        .def_readwrite("strict", &LoadOptions::strict);

    py::class_<LoadReport>(m, "LoadReport")
        .def(py::init<>())
        .def_readwrite("warnings", &LoadReport::warnings)
        .def_readwrite("parsed_lines", &LoadReport::parsed_lines)
        .def_readwrite("skipped_instances", &LoadReport::skipped_instances);

    py::class_<RelationInfo>(m, "RelationInfo")
        .def(py::init<>())
        .def_readwrite("domains", &RelationInfo::domains)
        .def_readwrite("cardinality", &RelationInfo::cardinality);

    m.def(
        "load_dataset",
        [](const std::filesystem::path& root, const LoadOptions& options) {
            LoadReport report;
            Dataset dataset = load_dataset(root, options, &report);
            return py::make_tuple(std::move(dataset), std::move(report));
        },
        py::arg("root"), py::arg("options") = LoadOptions{},
        "Loads a dataset directory; returns (dataset, load_report).");
    m.def("save_dataset", &save_dataset, py::arg("dataset"), py::arg("root"));
    m.def("load_relation_info", &load_relation_info, py::arg("path"));
    m.def(
        "apply_relation_info",
        [](Dataset& dataset, const std::map<std::string, RelationInfo>& info) {
            std::vector<std::string> warnings;
            apply_relation_info(dataset, info, &warnings);
            return warnings;
        },
        py::arg("dataset"), py::arg("info"));
    m.def("derive_cardinality", &derive_cardinality, py::arg("relation"));

    // ---- statements -------------------------------------------------------

    py::class_<Statement>(m, "Statement")
        .def_readonly("relation_id", &Statement::relation_id)
        .def_readonly("instance_index", &Statement::instance_index)
        .def_readonly("template_index", &Statement::template_index)
        .def_readonly("answer_index", &Statement::answer_index)
        .def_readonly("text", &Statement::text);

    m.def("build_statements", &build_statements, py::arg("relation"), py::arg("instance_index"),
          py::arg("template_index"));
    m.def("build_generic_statements", &build_generic_statements, py::arg("relation"),
          py::arg("generic_subjects"), py::arg("template_index"));

    // ---- scoring ----------------------------------------------------------

    py::enum_<ModelKind>(m, "ModelKind")
        .value("CAUSAL", ModelKind::Causal)
        .value("MASKED", ModelKind::Masked);

    py::enum_<Reduction>(m, "Reduction")
        .value("SUM", Reduction::Sum)
        .value("MEAN", Reduction::Mean);

    py::enum_<BackendKind>(m, "BackendKind")
        .value("REMOTE", BackendKind::Remote)
        .value("ORACLE", BackendKind::Oracle)
        .value("UNIGRAM", BackendKind::Unigram);

    py::class_<TokenScores>(m, "TokenScores")
        .def(py::init<>())
        .def(py::init([](std::vector<std::string> tokens, std::vector<double> logprobs) {
                 return TokenScores{std::move(tokens), std::move(logprobs)};
             }),
             py::arg("tokens"), py::arg("logprobs"))
        .def_readwrite("tokens", &TokenScores::tokens)
        .def_readwrite("logprobs", &TokenScores::logprobs);

    m.def("reduce", &reduce, py::arg("scores"), py::arg("reduction"));

    py::class_<BackendDescriptor>(m, "BackendDescriptor")
        .def(py::init<>())
        .def_readwrite("kind", &BackendDescriptor::kind)
        .def_readwrite("endpoint", &BackendDescriptor::endpoint)
        .def_readwrite("model_name", &BackendDescriptor::model_name)
        .def_readwrite("model_kind", &BackendDescriptor::model_kind)
        .def_readwrite("timeout", &BackendDescriptor::timeout)
        .def_readwrite("max_in_flight", &BackendDescriptor::max_in_flight)
        .def_readwrite("oracle_entries", &BackendDescriptor::oracle_entries)
        .def_readwrite("oracle_default", &BackendDescriptor::oracle_default)
        .def_readwrite("corpus", &BackendDescriptor::corpus)
        .def_readwrite("smoothing", &BackendDescriptor::smoothing);

    py::class_<ScoringBackend>(m, "ScoringBackend")
        .def("score", &ScoringBackend::score, py::arg("texts"))
        .def_property_readonly("descriptor", &ScoringBackend::descriptor);

    m.def("make_backend", &make_backend, py::arg("descriptor"));
    m.def("probe_remote_backend", &probe_remote_backend, py::arg("descriptor"));
    m.def("score_in_batches", &score_in_batches, py::arg("backend"), py::arg("texts"),
          py::arg("batch_size"));

    // ---- evaluation -------------------------------------------------------

    py::class_<TemplateSelection>(m, "TemplateSelection")
        .def(py::init<>())
        .def_static("all", &TemplateSelection::All)
        .def_static("single", &TemplateSelection::Single, py::arg("index"))
        .def("__str__", &TemplateSelection::to_string);

    py::class_<RunConfig>(m, "RunConfig")
        .def(py::init<>())
        .def_readwrite("template_selection", &RunConfig::template_selection)
        .def_readwrite("reduction", &RunConfig::reduction)
        .def_readwrite("batch_size", &RunConfig::batch_size)
        .def_readwrite("store_instance_predictions", &RunConfig::store_instance_predictions)
        .def_readwrite("save_path", &RunConfig::save_path)
        .def_readwrite("metrics", &RunConfig::metrics)
        .def_readwrite("on_relation_done", &RunConfig::on_relation_done);

    m.def(
        "evaluate_dataset",
        [](const Dataset& dataset, const BackendDescriptor& backend, const RunConfig& config) {
            return evaluate_dataset(dataset, backend, config);
        },
        py::arg("dataset"), py::arg("backend"), py::arg("config") = RunConfig{});
    m.def(
        "evaluate_dataset",
        [](const Dataset& dataset, ScoringBackend& backend, const RunConfig& config) {
            return evaluate_dataset(dataset, backend, config);
        },
        py::arg("dataset"), py::arg("backend"), py::arg("config") = RunConfig{});
    m.def("evaluate_checkpoint_series", &evaluate_checkpoint_series, py::arg("checkpoints"),
          py::arg("dataset"), py::arg("config") = RunConfig{});

    // ---- results and metrics ----------------------------------------------

    py::enum_<Grouping>(m, "Grouping")
        .value("OVERALL", Grouping::Overall)
        .value("DOMAIN", Grouping::Domain)
        .value("CARDINALITY", Grouping::Cardinality)
        .value("RELATION", Grouping::Relation)
        .value("NONE", Grouping::None);

    py::enum_<TemplatePolicy>(m, "TemplatePolicy")
        .value("PER_TEMPLATE", TemplatePolicy::PerTemplate)
        .value("MEAN_OVER_TEMPLATES", TemplatePolicy::MeanOverTemplates);

    py::class_<InstancePrediction>(m, "InstancePrediction")
        .def_readonly("instance_index", &InstancePrediction::instance_index)
        .def_readonly("template_index", &InstancePrediction::template_index)
        .def_readonly("scores", &InstancePrediction::scores)
        .def_readonly("predicted_index", &InstancePrediction::predicted_index)
        .def_readonly("correct_index", &InstancePrediction::correct_index)
        .def_readonly("tie_count", &InstancePrediction::tie_count);

    py::class_<RelationResult>(m, "RelationResult")
        .def_readonly("relation_id", &RelationResult::relation_id)
        .def_readonly("answer_labels", &RelationResult::answer_labels)
        .def_readonly("domains", &RelationResult::domains)
        .def_readonly("cardinality", &RelationResult::cardinality)
        .def_readonly("template_count", &RelationResult::template_count)
        .def_readonly("instance_count", &RelationResult::instance_count)
        .def_readonly("predictions", &RelationResult::predictions)
        .def_readonly("predictions_stored", &RelationResult::predictions_stored)
        .def_readonly("correct_per_template", &RelationResult::correct_per_template)
        .def_readonly("total_per_template", &RelationResult::total_per_template)
        .def_readonly("orphaned", &RelationResult::orphaned)
        .def_readonly("corrupt", &RelationResult::corrupt)
        .def("accuracy", &RelationResult::accuracy);

    py::class_<RunMetadata>(m, "RunMetadata")
        .def_readonly("model_name", &RunMetadata::model_name)
        .def_readonly("backend_kind", &RunMetadata::backend_kind)
        .def_readonly("endpoint", &RunMetadata::endpoint)
        .def_readonly("model_kind", &RunMetadata::model_kind)
        .def_readonly("reduction", &RunMetadata::reduction)
        .def_readonly("template_selection", &RunMetadata::template_selection)
        .def_readonly("dataset_name", &RunMetadata::dataset_name)
        .def_readonly("timestamp", &RunMetadata::timestamp)
        .def_readonly("engine_version", &RunMetadata::engine_version)
        .def_readonly("requested_metrics", &RunMetadata::requested_metrics)
        .def_readonly("complete", &RunMetadata::complete)
        .def_readonly("error", &RunMetadata::error)
        .def_readonly("series_position", &RunMetadata::series_position);

    py::class_<DatasetResults>(m, "DatasetResults")
        .def_readonly("metadata", &DatasetResults::metadata)
        .def_readonly("relations", &DatasetResults::relations)
        .def_readonly("load_flagged_corrupt", &DatasetResults::load_flagged_corrupt)
        .def("instance_level", &DatasetResults::instance_level)
        .def("find", &DatasetResults::find, py::return_value_policy::reference_internal)
        .def("overall_accuracy", &DatasetResults::overall_accuracy);

    m.def("load_results", &load_results, py::arg("path"));
    m.def("save_results", &save_results, py::arg("results"), py::arg("dir"));

    py::class_<MetricsRow>(m, "MetricsRow")
        .def_readonly("key", &MetricsRow::key)
        .def_readonly("accuracy", &MetricsRow::accuracy)
        .def_readonly("support", &MetricsRow::support);

    py::class_<MetricsReport>(m, "MetricsReport")
        .def_readonly("grouping", &MetricsReport::grouping)
        .def_readonly("template_policy", &MetricsReport::template_policy)
        .def_readonly("rows", &MetricsReport::rows);

    m.def("get_metrics", &get_metrics, py::arg("results"), py::arg("grouping"),
          py::arg("template_policy") = TemplatePolicy::PerTemplate);

    // ---- analysis ---------------------------------------------------------

    py::class_<BiasReport>(m, "BiasReport")
        .def_readonly("relation_id", &BiasReport::relation_id)
        .def_readonly("answer_labels", &BiasReport::answer_labels)
        .def_readonly("reduction", &BiasReport::reduction)
        .def_readonly("per_template", &BiasReport::per_template)
        .def_readonly("per_subject", &BiasReport::per_subject)
        .def_readonly("mean", &BiasReport::mean)
        .def_readonly("min", &BiasReport::min)
        .def_readonly("max", &BiasReport::max);

    m.def("softmax", &softmax, py::arg("scores"));
    m.def("estimate_bias", &estimate_bias, py::arg("results"), py::arg("relation_id"));
    m.def("estimate_generic_bias", &estimate_generic_bias, py::arg("backend"), py::arg("relation"),
          py::arg("generic_subjects"), py::arg("reduction") = Reduction::Sum);

    py::class_<TrajectoryPoint>(m, "TrajectoryPoint")
        .def_readonly("position", &TrajectoryPoint::position)
        .def_readonly("absolute", &TrajectoryPoint::absolute)
        .def_readonly("relative", &TrajectoryPoint::relative);

    py::class_<TrajectoryReport>(m, "TrajectoryReport")
        .def_readonly("group_key", &TrajectoryReport::group_key)
        .def_readonly("points", &TrajectoryReport::points);

    m.def("relative_trajectory", &relative_trajectory, py::arg("series"),
          py::arg("grouping") = Grouping::Overall, py::arg("group_key") = "");

    py::class_<ComparisonTable::Row>(m, "ComparisonRow")
        .def_readonly("model", &ComparisonTable::Row::model)
        .def_readonly("values", &ComparisonTable::Row::values);

    py::class_<ComparisonTable>(m, "ComparisonTable")
        .def_readonly("columns", &ComparisonTable::columns)
        .def_readonly("rows", &ComparisonTable::rows)
        .def_readonly("dataset_mismatch", &ComparisonTable::dataset_mismatch);

    m.def("compare_models", &compare_models, py::arg("results_list"), py::arg("grouping"),
          py::arg("template_policy") = TemplatePolicy::PerTemplate);

    // ---- mock server ------------------------------------------------------

    py::class_<MockModelSpec> spec(m, "MockModelSpec");
    py::enum_<MockModelSpec::Kind>(spec, "Kind")
        .value("ORACLE_TABLE", MockModelSpec::Kind::OracleTable)
        .value("UNIGRAM", MockModelSpec::Kind::Unigram);
    spec.def(py::init<>())
        .def_readwrite("kind", &MockModelSpec::kind)
        .def_readwrite("model_name", &MockModelSpec::model_name)
        .def_readwrite("oracle_entries", &MockModelSpec::oracle_entries)
        .def_readwrite("default_logprob", &MockModelSpec::default_logprob)
        .def_readwrite("corpus", &MockModelSpec::corpus)
        .def_readwrite("smoothing", &MockModelSpec::smoothing)
        .def_readwrite("latency_ms", &MockModelSpec::latency_ms)
        .def_readwrite("fail_after_requests", &MockModelSpec::fail_after_requests)
        .def("as_backend", &MockModelSpec::as_backend, py::arg("model_kind") = ModelKind::Causal);

    m.def("load_oracle_spec", &load_oracle_spec, py::arg("path"));

    py::class_<MockServer>(m, "MockServer")
        .def(py::init<MockModelSpec>(), py::arg("spec"))
        .def("start", &MockServer::start, py::arg("port") = 0,
             py::call_guard<py::gil_scoped_release>())
        .def("stop", &MockServer::stop, py::call_guard<py::gil_scoped_release>())
        .def_property_readonly("port", &MockServer::port)
        .def("endpoint", &MockServer::endpoint)
        .def("requests_served", &MockServer::requests_served)
        .def("__enter__",
             [](MockServer& self) -> MockServer& {
                 if (self.port() < 0) {
                     py::gil_scoped_release release;
                     self.start();
                 }
                 return self;
             })
        .def("__exit__", [](MockServer& self, py::object, py::object, py::object) {
            py::gil_scoped_release release;
            self.stop();
            return false;
        });
}
