#include "pubquiz/results.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

#include "json.hpp"

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace pubquiz {

void RelationResult::tally() {
    correct_per_template.assign(template_count, 0);
    total_per_template.assign(template_count, 0);
    for (const auto& p : predictions) {
        if (p.template_index >= template_count) {
            template_count = p.template_index + 1;
            correct_per_template.resize(template_count, 0);
            total_per_template.resize(template_count, 0);
        }
        ++total_per_template[p.template_index];
        if (p.predicted_index == p.correct_index)
            ++correct_per_template[p.template_index];
    }
}

double RelationResult::accuracy() const {
    std::size_t correct = 0, total = 0;
    for (std::size_t t = 0; t < total_per_template.size(); ++t) {
        correct += t < correct_per_template.size() ? correct_per_template[t] : 0;
        total += total_per_template[t];
    }
    return total == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(total);
}

bool DatasetResults::instance_level() const {
    return std::all_of(relations.begin(), relations.end(),
                       [](const RelationResult& r) { return r.predictions_stored; });
}

const RelationResult* DatasetResults::find(const std::string& relation_id) const {
    for (const auto& r : relations)
        if (r.relation_id == relation_id)
            return &r;
    return nullptr;
}

double DatasetResults::overall_accuracy() const {
    double correct = 0, total = 0;
    for (const auto& r : relations) {
        for (std::size_t t = 0; t < r.total_per_template.size(); ++t) {
            correct += t < r.correct_per_template.size() ? r.correct_per_template[t] : 0;
            total += r.total_per_template[t];
        }
    }
    return total == 0 ? 0.0 : correct / total;
}

namespace {

ordered_json metadata_to_json(const DatasetResults& results) {
    ordered_json j = ordered_json::object();
    const RunMetadata& m = results.metadata;
    j["model"] = m.model_name;
    j["backend_kind"] = m.backend_kind;
    j["endpoint"] = m.endpoint;
    j["model_kind"] = m.model_kind;
    j["reduction"] = m.reduction;
    j["template_selection"] = m.template_selection;
    j["dataset"] = m.dataset_name;
    j["timestamp"] = m.timestamp;
    j["engine_version"] = m.engine_version;
    j["requested_metrics"] = m.requested_metrics;
    j["complete"] = m.complete;
    if (!m.error.empty())
        j["error"] = m.error;
    if (m.series_position >= 0)
        j["series_position"] = m.series_position;
    ordered_json rels = ordered_json::object();
    for (const auto& r : results.relations) {
        ordered_json rj = ordered_json::object();
        rj["answer_space_labels"] = r.answer_labels;
        rj["domains"] = r.domains;
        if (r.cardinality)
            rj["cardinality"] = to_string(*r.cardinality);
        rj["template_count"] = r.template_count;
        rj["instance_count"] = r.instance_count;
        rels[r.relation_id] = std::move(rj);
    }
    j["relations"] = std::move(rels);
    return j;
}

void metadata_from_json(const ordered_json& j, DatasetResults& results) {
    RunMetadata& m = results.metadata;
    m.model_name = j.value("model", "");
    m.backend_kind = j.value("backend_kind", "");
    m.endpoint = j.value("endpoint", "");
    m.model_kind = j.value("model_kind", "");
    m.reduction = j.value("reduction", "");
    m.template_selection = j.value("template_selection", "");
    m.dataset_name = j.value("dataset", "");
    m.timestamp = j.value("timestamp", "");
    m.engine_version = j.value("engine_version", "");
    if (j.contains("requested_metrics"))
        m.requested_metrics = j["requested_metrics"].get<std::vector<std::string>>();
    m.complete = j.value("complete", true);
    m.error = j.value("error", "");
    m.series_position = j.value("series_position", -1);
    if (j.contains("relations")) {
        for (const auto& [id, rj] : j["relations"].items()) {
            RelationResult r;
            r.relation_id = id;
            if (rj.contains("answer_space_labels"))
                r.answer_labels = rj["answer_space_labels"].get<std::vector<std::string>>();
            if (rj.contains("domains"))
                r.domains = rj["domains"].get<std::vector<std::string>>();
            if (rj.contains("cardinality"))
                r.cardinality = cardinality_from_string(rj["cardinality"].get<std::string>());
            r.template_count = rj.value("template_count", std::size_t{1});
            r.instance_count = rj.value("instance_count", std::size_t{0});
            results.relations.push_back(std::move(r));
        }
    }
}

}  // namespace

void write_run_metadata(const DatasetResults& results, const fs::path& dir) {
    fs::create_directories(dir);
    std::ofstream out(dir / "metadata.json");
    if (!out)
        throw ResultsError("cannot write " + (dir / "metadata.json").string());
    out << metadata_to_json(results).dump(4) << "\n";
}

void write_relation_result(const RelationResult& relation, const fs::path& dir) {
    fs::create_directories(dir);
    fs::path file = dir / (relation.relation_id + "_results.jsonl");
    std::ofstream out(file);
    if (!out)
        throw ResultsError("cannot write " + file.string());
    for (const auto& p : relation.predictions) {
        ordered_json j = ordered_json::object();
        j["instance_index"] = p.instance_index;
        j["template_index"] = p.template_index;
        j["scores"] = p.scores;
        j["predicted_index"] = p.predicted_index;
        j["correct_index"] = p.correct_index;
        j["tie_count"] = p.tie_count;
        out << j.dump() << "\n";
    }
}

void write_metrics_file(const DatasetResults& results, const fs::path& dir) {
    fs::create_directories(dir);
    ordered_json j = ordered_json::object();
    j["overall_accuracy"] = results.overall_accuracy();
    ordered_json rels = ordered_json::object();
    for (const auto& r : results.relations) {
        ordered_json rj = ordered_json::object();
        rj["correct_per_template"] = r.correct_per_template;
        rj["total_per_template"] = r.total_per_template;
        rels[r.relation_id] = std::move(rj);
    }
    j["relations"] = std::move(rels);
    std::ofstream out(dir / "metrics.json");
    if (!out)
        throw ResultsError("cannot write " + (dir / "metrics.json").string());
    out << j.dump(4) << "\n";
}

void save_results(const DatasetResults& results, const fs::path& dir) {
    write_run_metadata(results, dir);
    bool any_predictions = false;
    for (const auto& r : results.relations) {
        if (r.predictions_stored) {
            write_relation_result(r, dir);
            any_predictions = true;
        }
    }
    if (!any_predictions)
        write_metrics_file(results, dir);
}

DatasetResults load_results(const fs::path& path) {
    fs::path metadata_path = path / "metadata.json";
    std::ifstream in(metadata_path);
    if (!in)
        throw ResultsError("cannot open " + metadata_path.string());
    ordered_json meta;
    try {
        in >> meta;
    } catch (const nlohmann::json::exception& e) {
        throw ResultsError(metadata_path.string() + ": " + e.what());
    }

    DatasetResults results;
    metadata_from_json(meta, results);

    ordered_json metrics;
    {
        std::ifstream min(path / "metrics.json");
        if (min) {
            try {
                min >> metrics;
            } catch (const nlohmann::json::exception&) {
                results.load_flagged_corrupt = true;
            }
        }
    }

    auto load_predictions = [&](RelationResult& r, const fs::path& file) {
        std::ifstream fin(file);
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(fin, line)) {
            ++line_no;
            if (line.empty())
                continue;
            try {
                auto j = nlohmann::json::parse(line);
                InstancePrediction p;
                p.instance_index = j.at("instance_index").get<std::size_t>();
                p.template_index = j.at("template_index").get<std::size_t>();
                p.scores = j.at("scores").get<std::vector<double>>();
                p.predicted_index = j.at("predicted_index").get<std::size_t>();
                p.correct_index = j.at("correct_index").get<std::size_t>();
                p.tie_count = j.at("tie_count").get<std::size_t>();
                r.predictions.push_back(std::move(p));
            } catch (const nlohmann::json::exception&) {
                r.corrupt = true;
                results.load_flagged_corrupt = true;
            }
        }
        r.predictions_stored = true;
        r.tally();
    };

    for (auto& r : results.relations) {
        fs::path file = path / (r.relation_id + "_results.jsonl");
        if (fs::exists(file)) {
            load_predictions(r, file);
        } else if (metrics.contains("relations") && metrics["relations"].contains(r.relation_id)) {
            const auto& rj = metrics["relations"][r.relation_id];
            r.correct_per_template = rj.at("correct_per_template").get<std::vector<std::size_t>>();
            r.total_per_template = rj.at("total_per_template").get<std::vector<std::size_t>>();
            r.predictions_stored = false;
        } else {
            // Relation announced in the metadata but never flushed (partial run).
            r.predictions_stored = false;
            r.correct_per_template.assign(r.template_count, 0);
            r.total_per_template.assign(r.template_count, 0);
        }
    }

    // Result files with no metadata entry are kept, flagged as orphaned.
    std::vector<fs::path> orphan_files;
    for (const auto& entry : fs::directory_iterator(path)) {
        std::string name = entry.path().filename().string();
        const std::string suffix = "_results.jsonl";
        if (name.size() <= suffix.size() || name.substr(name.size() - suffix.size()) != suffix)
            continue;
        std::string id = name.substr(0, name.size() - suffix.size());
        if (!results.find(id))
            orphan_files.push_back(entry.path());
    }
    std::sort(orphan_files.begin(), orphan_files.end());
    for (const auto& file : orphan_files) {
        RelationResult r;
        std::string name = file.filename().string();
        r.relation_id = name.substr(0, name.size() - std::string("_results.jsonl").size());
        r.orphaned = true;
        r.template_count = 1;
        load_predictions(r, file);
        std::size_t max_instance = 0;
        for (const auto& p : r.predictions)
            max_instance = std::max(max_instance, p.instance_index + 1);
        r.instance_count = max_instance;
        results.relations.push_back(std::move(r));
    }
    return results;
}

Grouping grouping_from_string(const std::string& s) {
    if (s == "overall")
        return Grouping::Overall;
    if (s == "domains" || s == "domain")
        return Grouping::Domain;
    if (s == "cardinality")
        return Grouping::Cardinality;
    if (s == "relation" || s == "relations")
        return Grouping::Relation;
    if (s == "none")
        return Grouping::None;
    throw std::invalid_argument("unknown grouping: \"" + s + "\"");
}

std::string to_string(Grouping g) {
    switch (g) {
        case Grouping::Overall: return "overall";
        case Grouping::Domain: return "domains";
        case Grouping::Cardinality: return "cardinality";
        case Grouping::Relation: return "relation";
        case Grouping::None: return "none";
    }
    return "?";
}

namespace {

// Cardinality for grouping purposes: stored annotation, else derived from the
// multiset of correct answers in the stored predictions.
std::optional<Cardinality> result_cardinality(const RelationResult& r) {
    if (r.cardinality)
        return r.cardinality;
    if (!r.predictions_stored || r.predictions.empty())
        return std::nullopt;
    std::map<std::size_t, std::size_t> counts;
    for (const auto& p : r.predictions)
        if (p.template_index == r.predictions.front().template_index)
            ++counts[p.correct_index];
    for (const auto& [idx, n] : counts)
        if (n > 1)
            return Cardinality::OneToMany;
    return Cardinality::OneToOne;
}

}  // namespace

MetricsReport get_metrics(const DatasetResults& results, Grouping grouping,
                          TemplatePolicy template_policy) {
    MetricsReport report;
    report.grouping = grouping;
    report.template_policy = template_policy;

    if (grouping == Grouping::None) {
        for (const auto& r : results.relations) {
            if (!r.predictions_stored)
                throw ResultsError("relation " + r.relation_id +
                                   ": instance predictions not stored (metrics-only results)");
            for (const auto& p : r.predictions) {
                report.rows.push_back({r.relation_id + "/" + std::to_string(p.instance_index) + "/" +
                                           std::to_string(p.template_index),
                                       p.predicted_index == p.correct_index ? 1.0 : 0.0, 1.0});
            }
        }
        return report;
    }

    // Per relation: a weighted-count pair (numerator, denominator) under the
    // requested template policy, then distributed over the group keys.
    struct Cell {
        double num = 0.0;
        double den = 0.0;
    };
    std::vector<std::pair<std::string, Cell>> cells;  // insertion-ordered
    auto cell = [&](const std::string& key) -> Cell& {
        for (auto& [k, c] : cells)
            if (k == key)
                return c;
        cells.emplace_back(key, Cell{});
        return cells.back().second;
    };

    for (const auto& r : results.relations) {
        if (r.total_per_template.empty())
            continue;
        std::size_t total_all = 0, correct_all = 0;
        for (std::size_t t = 0; t < r.total_per_template.size(); ++t) {
            total_all += r.total_per_template[t];
            correct_all += t < r.correct_per_template.size() ? r.correct_per_template[t] : 0;
        }
        if (total_all == 0)
            continue;

        double num, den;
        if (template_policy == TemplatePolicy::PerTemplate) {
            num = static_cast<double>(correct_all);
            den = static_cast<double>(total_all);
        } else {
            // Equal-weight mean over per-template accuracies, carried on a
            // support of one instance set.
            double acc = 0.0;
            std::size_t templates_used = 0;
            double instances = 0.0;
            for (std::size_t t = 0; t < r.total_per_template.size(); ++t) {
                if (r.total_per_template[t] == 0)
                    continue;
                acc += static_cast<double>(r.correct_per_template[t]) /
                       static_cast<double>(r.total_per_template[t]);
                instances = std::max(instances, static_cast<double>(r.total_per_template[t]));
                ++templates_used;
            }
            acc /= static_cast<double>(templates_used);
            den = instances;
            num = acc * instances;
        }

        switch (grouping) {
            case Grouping::Overall: {
                auto& c = cell("overall");
                c.num += num;
                c.den += den;
                break;
            }
            case Grouping::Relation: {
                auto& c = cell(r.relation_id);
                c.num += num;
                c.den += den;
                break;
            }
            case Grouping::Cardinality: {
                auto card = result_cardinality(r);
                if (!card)
                    throw ResultsError("relation " + r.relation_id +
                                       ": cardinality unavailable (no annotation and no predictions)");
                auto& c = cell(to_string(*card));
                c.num += num;
                c.den += den;
                break;
            }
            case Grouping::Domain: {
                if (r.domains.empty())
                    throw ResultsError("relation " + r.relation_id +
                                       ": no domain annotations (pass a relation_info file)");
                double w = 1.0 / static_cast<double>(r.domains.size());
                for (const auto& d : r.domains) {
                    auto& c = cell(d);
                    c.num += w * num;
                    c.den += w * den;
                }
                break;
            }
            case Grouping::None:
                break;  // handled above
        }
    }

    if (grouping == Grouping::Domain || grouping == Grouping::Cardinality)
        std::sort(cells.begin(), cells.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });
    for (const auto& [key, c] : cells)
        report.rows.push_back({key, c.den == 0.0 ? 0.0 : c.num / c.den, c.den});
    return report;
}

}  // namespace pubquiz
