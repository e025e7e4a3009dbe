#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace pubquiz {

class DatasetError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class Cardinality { OneToOne, OneToMany };

std::string to_string(Cardinality c);
Cardinality cardinality_from_string(const std::string& s);

/// The closed set of candidate answers shared by all instances of a relation.
struct AnswerSpace {
    std::vector<std::string> ids;
    std::vector<std::string> labels;

    std::size_t size() const { return ids.size(); }
    std::optional<std::size_t> index_of_id(const std::string& id) const;
};

struct RelationInstance {
    std::string sub_id;
    std::string sub_label;
    std::optional<std::string> obj_id;
    std::optional<std::string> obj_label;
    std::optional<std::size_t> answer_idx;

    // Index into the answer space, resolved during validation.
    std::size_t resolved_answer = 0;
};

struct Relation {
    std::string id;
    std::vector<std::string> templates;
    AnswerSpace answer_space;
    std::vector<RelationInstance> instances;
    std::vector<std::string> domains;
    std::optional<Cardinality> cardinality;  // explicit metadata, overrides derivation
    bool answer_space_from_metadata = true;

    Cardinality effective_cardinality() const;
};

/// OneToOne iff no answer-space entry is the correct answer of more than one
/// instance. Explicit metadata takes precedence (see Relation::effective_cardinality).
Cardinality derive_cardinality(const Relation& relation);

struct Dataset {
    std::string name;
    std::vector<Relation> relations;

    const Relation* find(const std::string& relation_id) const;
    std::size_t total_instances() const;
};

struct LoadOptions {
    // Strict mode turns any instance-level problem into an error; permissive
    // mode skips the offending line and records it in the report.
    bool strict = true;
};

struct LoadReport {
    std::vector<std::string> warnings;
    std::size_t parsed_lines = 0;
    std::size_t skipped_instances = 0;
};

/// Loads a dataset directory: `metadata_relations.json` plus one
/// `<relation id>.jsonl` file per relation. Answer spaces missing from the
/// metadata are constructed from the instances' objects in first-appearance
/// order, deduplicated by obj_id.
Dataset load_dataset(const std::filesystem::path& root, const LoadOptions& options = {},
                     LoadReport* report = nullptr);

/// Writes the dataset back in the on-disk format. Deterministic: saving a
/// reloaded copy reproduces the same bytes.
void save_dataset(const Dataset& dataset, const std::filesystem::path& root);

struct RelationInfo {
    std::vector<std::string> domains;
    std::optional<Cardinality> cardinality;
};

std::map<std::string, RelationInfo> load_relation_info(const std::filesystem::path& path);

/// Merges side-file annotations onto the dataset. Ids not present in the
/// dataset are ignored with a warning.
void apply_relation_info(Dataset& dataset, const std::map<std::string, RelationInfo>& info,
                         std::vector<std::string>* warnings = nullptr);

}  // namespace pubquiz
