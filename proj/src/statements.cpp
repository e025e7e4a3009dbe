#include "pubquiz/statements.hpp"

#include <stdexcept>

namespace pubquiz {

namespace {

// Substitutes at the placeholder positions of the original template ("[X]"
// first), then rejects any placeholder the inserted labels smuggled in.
std::string instantiate(const std::string& tmpl, const std::string& subject,
                        const std::string& answer) {
    std::size_t x_pos = tmpl.find("[X]");
    std::string text = tmpl;
    text.replace(x_pos, 3, subject);
    std::size_t y_pos = tmpl.find("[Y]");
    if (y_pos > x_pos)
        y_pos += subject.size() - 3;
    text.replace(y_pos, 3, answer);
    if (text.find("[X]") != std::string::npos || text.find("[Y]") != std::string::npos)
        throw std::invalid_argument("substituted label contains a placeholder: \"" + text + "\"");
    return text;
}

}  // namespace

std::vector<Statement> build_statements(const Relation& relation, std::size_t instance_index,
                                        std::size_t template_index) {
    if (instance_index >= relation.instances.size())
        throw std::out_of_range("instance index " + std::to_string(instance_index) +
                                " out of range for relation " + relation.id);
    if (template_index >= relation.templates.size())
        throw std::out_of_range("template index " + std::to_string(template_index) +
                                " out of range for relation " + relation.id);
    const auto& tmpl = relation.templates[template_index];
    const auto& subject = relation.instances[instance_index].sub_label;
    std::vector<Statement> statements;
    statements.reserve(relation.answer_space.size());
    for (std::size_t a = 0; a < relation.answer_space.size(); ++a) {
        statements.push_back({relation.id, static_cast<std::ptrdiff_t>(instance_index),
                              template_index, a,
                              instantiate(tmpl, subject, relation.answer_space.labels[a])});
    }
    return statements;
}

std::vector<Statement> build_generic_statements(const Relation& relation,
                                                const std::vector<std::string>& generic_subjects,
                                                std::size_t template_index) {
    if (generic_subjects.empty())
        throw std::invalid_argument("generic subject list is empty");
    if (template_index >= relation.templates.size())
        throw std::out_of_range("template index " + std::to_string(template_index) +
                                " out of range for relation " + relation.id);
    const auto& tmpl = relation.templates[template_index];
    std::vector<Statement> statements;
    statements.reserve(generic_subjects.size() * relation.answer_space.size());
    for (const auto& subject : generic_subjects) {
        for (std::size_t a = 0; a < relation.answer_space.size(); ++a) {
            statements.push_back({relation.id, kGenericInstance, template_index, a,
                                  instantiate(tmpl, subject, relation.answer_space.labels[a])});
        }
    }
    return statements;
}

}  // namespace pubquiz
