#pragma once

#include "brqual/core/model.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace brqual::improve {

struct FewShotPair {
    std::string bad_example;
    std::string good_example;
};

/// A prompt stored in the catalog. Improvement templates carry a section
/// and an issue class; utility prompts (extraction, analysis, query
/// generation) leave both unset.
struct PromptTemplate {
    std::string prompt_id;
    std::optional<SectionKind> section;
    std::optional<IssueClass> issue_class;
    std::string system_text;
    std::vector<FewShotPair> few_shot_pairs;
    std::vector<std::string> slots;  // declared placeholder names
    std::string body;                // user message with {{slot}} placeholders

    bool is_improvement() const { return section.has_value() && issue_class.has_value(); }
};

inline const std::vector<std::string>& improvement_slots() {
    static const std::vector<std::string> kSlots{"report_context", "detector_findings", "retrieved_knowledge"};
    return kSlots;
}

/// Placeholder names in order of appearance ("{{ name }}" is accepted).
std::vector<std::string> slot_names(std::string_view body);

/// Replaces each {{name}}; throws std::invalid_argument on a placeholder
/// without a value.
std::string render(std::string_view body, const std::map<std::string, std::string>& values);

/// Invariant violations (empty when valid): every declared slot appears
/// exactly once, no undeclared slot appears, improvement templates declare
/// the three standard slots and carry at least one few-shot pair.
std::vector<std::string> validate_template(const PromptTemplate& t);

/// Parses "---\n<yaml front-matter>\n---\n<body>".
PromptTemplate parse_template(std::string_view file_text, const std::string& origin = "<memory>");

class PromptCatalog {
public:
    /// Loads every *.md / *.prompt file in the directory; throws ConfigError
    /// on invalid or duplicate templates.
    static PromptCatalog load(const std::filesystem::path& directory);

    void add(PromptTemplate t);
    const PromptTemplate& get(const std::string& prompt_id) const;
    const PromptTemplate* find(SectionKind section, IssueClass issue_class) const;
    std::vector<std::string> ids() const;
    std::size_t size() const { return templates_.size(); }

private:
    std::map<std::string, PromptTemplate> templates_;
};

}  // namespace brqual::improve
