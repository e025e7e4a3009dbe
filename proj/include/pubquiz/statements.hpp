#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "pubquiz/dataset.hpp"

namespace pubquiz {

// instance_index value marking statements built from a generic subject.
inline constexpr std::ptrdiff_t kGenericInstance = -1;

/// One fully instantiated candidate sentence: both placeholders substituted,
/// ready to be scored.
struct Statement {
    std::string relation_id;
    std::ptrdiff_t instance_index = 0;  // kGenericInstance for generic subjects
    std::size_t template_index = 0;
    std::size_t answer_index = 0;
    std::string text;
};

/// Builds one statement per answer-space entry, in answer-space order.
/// Substitution is literal: "[X]" -> subject label, "[Y]" -> candidate label.
std::vector<Statement> build_statements(const Relation& relation, std::size_t instance_index,
                                        std::size_t template_index);

/// Like build_statements, but with caller-supplied subjects instead of an
/// instance (one statement per subject x answer, subject-major order).
std::vector<Statement> build_generic_statements(const Relation& relation,
                                                const std::vector<std::string>& generic_subjects,
                                                std::size_t template_index);

}  // namespace pubquiz
