#include "pubquiz/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "json.hpp"

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace pubquiz {

std::string to_string(Cardinality c) {
    return c == Cardinality::OneToOne ? "1:1" : "1:N";
}

Cardinality cardinality_from_string(const std::string& s) {
    if (s == "1:1" || s == "one-to-one" || s == "OneToOne")
        return Cardinality::OneToOne;
    if (s == "1:N" || s == "one-to-many" || s == "OneToMany")
        return Cardinality::OneToMany;
    throw DatasetError("unknown cardinality value: \"" + s + "\"");
}

std::optional<std::size_t> AnswerSpace::index_of_id(const std::string& id) const {
    auto it = std::find(ids.begin(), ids.end(), id);
    if (it == ids.end())
        return std::nullopt;
    return static_cast<std::size_t>(it - ids.begin());
}

Cardinality Relation::effective_cardinality() const {
    if (cardinality)
        return *cardinality;
    return derive_cardinality(*this);
}

Cardinality derive_cardinality(const Relation& relation) {
    if (relation.instances.empty())
        throw DatasetError("relation " + relation.id + ": cannot derive cardinality without instances");
    std::unordered_set<std::size_t> seen;
    for (const auto& inst : relation.instances) {
        if (!seen.insert(inst.resolved_answer).second)
            return Cardinality::OneToMany;
    }
    return Cardinality::OneToOne;
}

const Relation* Dataset::find(const std::string& relation_id) const {
    for (const auto& r : relations)
        if (r.id == relation_id)
            return &r;
    return nullptr;
}

std::size_t Dataset::total_instances() const {
    std::size_t n = 0;
    for (const auto& r : relations)
        n += r.instances.size();
    return n;
}

namespace {

void check_template(const std::string& relation_id, const std::string& tmpl) {
    for (const char* placeholder : {"[X]", "[Y]"}) {
        std::size_t first = tmpl.find(placeholder);
        if (first == std::string::npos)
            throw DatasetError("relation " + relation_id + ": template \"" + tmpl +
                               "\" is missing placeholder " + placeholder);
        if (tmpl.find(placeholder, first + 1) != std::string::npos)
            throw DatasetError("relation " + relation_id + ": template \"" + tmpl +
                               "\" contains placeholder " + placeholder + " more than once");
    }
}

std::string location(const fs::path& file, std::size_t line_no) {
    return file.filename().string() + ":" + std::to_string(line_no);
}

RelationInstance parse_instance(const ordered_json& j, const fs::path& file, std::size_t line_no) {
    if (!j.is_object())
        throw DatasetError(location(file, line_no) + ": instance line is not a JSON object");
    RelationInstance inst;
    try {
        inst.sub_id = j.at("sub_id").get<std::string>();
        inst.sub_label = j.at("sub_label").get<std::string>();
        if (j.contains("obj_id"))
            inst.obj_id = j.at("obj_id").get<std::string>();
        if (j.contains("obj_label"))
            inst.obj_label = j.at("obj_label").get<std::string>();
        if (j.contains("answer_idx")) {
            auto idx = j.at("answer_idx").get<long long>();
            if (idx < 0)
                throw DatasetError(location(file, line_no) + ": negative answer_idx");
            inst.answer_idx = static_cast<std::size_t>(idx);
        }
    } catch (const nlohmann::json::exception& e) {
        throw DatasetError(location(file, line_no) + ": " + e.what());
    }
    if (!inst.obj_id && !inst.answer_idx)
        throw DatasetError(location(file, line_no) + ": instance needs obj_id or answer_idx");
    return inst;
}

// Resolves the correct-answer index and cross-checks obj_id against answer_idx.
void resolve_answer(Relation& relation, RelationInstance& inst, const fs::path& file,
                    std::size_t line_no) {
    std::optional<std::size_t> from_id;
    if (inst.obj_id) {
        from_id = relation.answer_space.index_of_id(*inst.obj_id);
        if (!from_id && !inst.answer_idx)
            throw DatasetError(location(file, line_no) + ": obj_id \"" + *inst.obj_id +
                               "\" not in the answer space of relation " + relation.id);
    }
    if (inst.answer_idx) {
        if (*inst.answer_idx >= relation.answer_space.size())
            throw DatasetError(location(file, line_no) + ": answer_idx " +
                               std::to_string(*inst.answer_idx) + " out of bounds (answer space has " +
                               std::to_string(relation.answer_space.size()) + " entries)");
        if (from_id && *from_id != *inst.answer_idx)
            throw DatasetError(location(file, line_no) + ": obj_id and answer_idx disagree");
        inst.resolved_answer = *inst.answer_idx;
    } else {
        inst.resolved_answer = *from_id;
    }
}

}  // namespace

Dataset load_dataset(const fs::path& root, const LoadOptions& options, LoadReport* report) {
    LoadReport local;
    LoadReport& rep = report ? *report : local;

    fs::path metadata_path = root / "metadata_relations.json";
    std::ifstream meta_in(metadata_path);
    if (!meta_in)
        throw DatasetError("cannot open " + metadata_path.string());

    ordered_json metadata;
    try {
        meta_in >> metadata;
    } catch (const nlohmann::json::exception& e) {
        throw DatasetError(metadata_path.string() + ": " + e.what());
    }
    if (!metadata.is_object())
        throw DatasetError(metadata_path.string() + ": top level must be an object keyed by relation id");

    Dataset dataset;
    dataset.name = root.filename().string();
    if (dataset.name.empty())
        dataset.name = root.parent_path().filename().string();

    for (auto& [relation_id, meta] : metadata.items()) {
        Relation relation;
        relation.id = relation_id;
        if (!meta.contains("templates") || !meta["templates"].is_array() || meta["templates"].empty())
            throw DatasetError("relation " + relation_id + ": metadata needs a non-empty templates list");
        for (const auto& t : meta["templates"]) {
            std::string tmpl = t.get<std::string>();
            check_template(relation_id, tmpl);
            relation.templates.push_back(std::move(tmpl));
        }
        bool has_labels = meta.contains("answer_space_labels") && !meta["answer_space_labels"].empty();
        if (has_labels) {
            for (const auto& l : meta["answer_space_labels"])
                relation.answer_space.labels.push_back(l.get<std::string>());
            if (meta.contains("answer_space_ids")) {
                for (const auto& i : meta["answer_space_ids"])
                    relation.answer_space.ids.push_back(i.get<std::string>());
            } else {
                // No ids given: labels double as ids.
                relation.answer_space.ids = relation.answer_space.labels;
            }
            if (relation.answer_space.ids.size() != relation.answer_space.labels.size())
                throw DatasetError("relation " + relation_id +
                                   ": answer_space_ids and answer_space_labels differ in length");
        } else {
            relation.answer_space_from_metadata = false;
        }
        if (meta.contains("domains"))
            for (const auto& d : meta["domains"])
                relation.domains.push_back(d.get<std::string>());
        if (meta.contains("cardinality"))
            relation.cardinality = cardinality_from_string(meta["cardinality"].get<std::string>());

        fs::path relation_file = root / (relation_id + ".jsonl");
        std::ifstream rel_in(relation_file);
        if (!rel_in)
            throw DatasetError("relation " + relation_id + ": cannot open " + relation_file.string());

        std::vector<std::pair<RelationInstance, std::size_t>> pending;  // instance, line number
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(rel_in, line)) {
            ++line_no;
            if (line.find_first_not_of(" \t\r") == std::string::npos)
                continue;
            ++rep.parsed_lines;
            try {
                ordered_json j = ordered_json::parse(line);
                pending.emplace_back(parse_instance(j, relation_file, line_no), line_no);
            } catch (const nlohmann::json::exception& e) {
                DatasetError err(location(relation_file, line_no) + ": malformed line: " + e.what());
                if (options.strict)
                    throw err;
                rep.warnings.push_back(err.what());
                ++rep.skipped_instances;
            } catch (const DatasetError& e) {
                if (options.strict)
                    throw;
                rep.warnings.push_back(e.what());
                ++rep.skipped_instances;
            }
        }

        if (!relation.answer_space_from_metadata) {
            // First-appearance order, deduplicated by obj_id, first label wins.
            std::unordered_set<std::string> seen;
            for (const auto& [inst, ln] : pending) {
                if (!inst.obj_id || !inst.obj_label)
                    throw DatasetError(location(relation_file, ln) +
                                       ": relation has no answer space in the metadata, so every "
                                       "instance needs obj_id and obj_label");
                if (seen.insert(*inst.obj_id).second) {
                    relation.answer_space.ids.push_back(*inst.obj_id);
                    relation.answer_space.labels.push_back(*inst.obj_label);
                }
            }
        }
        if (relation.answer_space.size() < 2)
            throw DatasetError("relation " + relation_id + ": answer space needs at least 2 entries, has " +
                               std::to_string(relation.answer_space.size()));
        for (const auto& label : relation.answer_space.labels)
            if (label.empty())
                throw DatasetError("relation " + relation_id + ": empty answer label");
        {
            std::unordered_set<std::string> ids(relation.answer_space.ids.begin(),
                                                relation.answer_space.ids.end());
            if (ids.size() != relation.answer_space.ids.size())
                throw DatasetError("relation " + relation_id + ": duplicate answer ids");
        }

        for (auto& [inst, ln] : pending) {
            try {
                resolve_answer(relation, inst, relation_file, ln);
                relation.instances.push_back(std::move(inst));
            } catch (const DatasetError& e) {
                if (options.strict)
                    throw;
                rep.warnings.push_back(e.what());
                ++rep.skipped_instances;
            }
        }
        dataset.relations.push_back(std::move(relation));
    }
    return dataset;
}

void save_dataset(const Dataset& dataset, const fs::path& root) {
    fs::create_directories(root);
    ordered_json metadata = ordered_json::object();
    for (const auto& relation : dataset.relations) {
        ordered_json meta = ordered_json::object();
        meta["templates"] = relation.templates;
        if (relation.answer_space_from_metadata) {
            meta["answer_space_labels"] = relation.answer_space.labels;
            meta["answer_space_ids"] = relation.answer_space.ids;
        }
        if (!relation.domains.empty())
            meta["domains"] = relation.domains;
        if (relation.cardinality)
            meta["cardinality"] = to_string(*relation.cardinality);
        metadata[relation.id] = std::move(meta);

        std::ofstream out(root / (relation.id + ".jsonl"));
        if (!out)
            throw DatasetError("cannot write " + (root / (relation.id + ".jsonl")).string());
        for (const auto& inst : relation.instances) {
            ordered_json j = ordered_json::object();
            j["sub_id"] = inst.sub_id;
            j["sub_label"] = inst.sub_label;
            if (inst.obj_id)
                j["obj_id"] = *inst.obj_id;
            if (inst.obj_label)
                j["obj_label"] = *inst.obj_label;
            if (inst.answer_idx)
                j["answer_idx"] = *inst.answer_idx;
            out << j.dump() << "\n";
        }
    }
    std::ofstream meta_out(root / "metadata_relations.json");
    if (!meta_out)
        throw DatasetError("cannot write " + (root / "metadata_relations.json").string());
    meta_out << metadata.dump(4) << "\n";
}

std::map<std::string, RelationInfo> load_relation_info(const fs::path& path) {
    std::ifstream in(path);
    if (!in)
        throw DatasetError("cannot open " + path.string());
    ordered_json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw DatasetError(path.string() + ": " + e.what());
    }
    if (!j.is_object())
        throw DatasetError(path.string() + ": top level must be an object keyed by relation id");
    std::map<std::string, RelationInfo> info;
    for (auto& [relation_id, entry] : j.items()) {
        RelationInfo ri;
        if (entry.contains("domains"))
            for (const auto& d : entry["domains"])
                ri.domains.push_back(d.get<std::string>());
        if (entry.contains("cardinality"))
            ri.cardinality = cardinality_from_string(entry["cardinality"].get<std::string>());
        info[relation_id] = std::move(ri);
    }
    return info;
}

void apply_relation_info(Dataset& dataset, const std::map<std::string, RelationInfo>& info,
                         std::vector<std::string>* warnings) {
    auto warn = [&](const std::string& msg) {
        if (warnings)
            warnings->push_back(msg);
    };
    for (const auto& [relation_id, ri] : info) {
        Relation* relation = nullptr;
        for (auto& r : dataset.relations)
            if (r.id == relation_id)
                relation = &r;
        if (!relation) {
            warn("relation_info: id \"" + relation_id + "\" not in dataset, ignored");
            continue;
        }
        if (!ri.domains.empty()) {
            if (ri.domains.size() > 3)
                warn("relation_info: " + relation_id + " has " + std::to_string(ri.domains.size()) +
                     " domains (more than the usual maximum of 3)");
            relation->domains = ri.domains;
        }
        if (ri.cardinality)
            relation->cardinality = ri.cardinality;
    }
}

}  // namespace pubquiz
