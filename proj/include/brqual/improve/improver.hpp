#pragma once

#include "brqual/core/json.hpp"
#include "brqual/core/model.hpp"
#include "brqual/improve/catalog.hpp"
#include "brqual/provider/gateway.hpp"
#include "brqual/rag/index.hpp"
#include "brqual/rag/retrieval.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace brqual::improve {

// Headers that introduce optional prompt material. Each appears in an
// assembled prompt only when its component is enabled.
inline constexpr std::string_view kFindingsHeader = "Detector findings:";
inline constexpr std::string_view kKnowledgeHeader = "Relevant knowledge (most relevant first):";
inline constexpr std::string_view kFewShotHeader = "Examples of poor and improved sections:";
inline constexpr std::string_view kFormatReminder =
    "Format reminder: reply with a numbered list of steps only, one step per line (1. ..., 2. ...).";

struct Ablation {
    bool rag = true;
    bool detector = true;
    bool few_shot = true;

    bool operator==(const Ablation&) const = default;
};

void to_json(Json& j, const Ablation& a);
void from_json(const Json& j, Ablation& a);

struct ImprovementRecord {
    SectionKind section = SectionKind::StepsToReproduce;
    IssueClass issue_class = IssueClass::Enhance;
    std::string prompt_id;
    std::vector<std::string> retrieved_chunk_ids;
    std::string before;
    std::string after;
    Ablation ablation_config;
    std::string request_hash;
    bool success = false;
    std::string error;

    bool operator==(const ImprovementRecord&) const = default;
};

void to_json(Json& j, const ImprovementRecord& r);
void from_json(const Json& j, ImprovementRecord& r);

struct ImprovedReport {
    StructuredReport base;
    std::vector<ImprovementRecord> records;
    std::vector<std::string> warnings;

    bool operator==(const ImprovedReport&) const = default;
};

void to_json(Json& j, const ImprovedReport& r);
void from_json(const Json& j, ImprovedReport& r);

/// Template for the most severe flagged issue class of a section
/// (Missing > Incomplete > Ambiguous > Enhance); nullptr when the section
/// carries no flag. Throws CatalogMissing for a flagged combination without
/// a template.
const PromptTemplate* select_template(const PromptCatalog& catalog, SectionKind section,
                                      const std::vector<IssueFlag>& flags);

struct AssembledPrompt {
    provider::ChatRequest request;
    std::vector<std::string> chunk_ids;  // knowledge blocks kept, in rank order
    std::size_t dropped_blocks = 0;
};

/// Rough prompt size: one token per four characters.
std::size_t estimate_tokens(const provider::ChatRequest& request);

struct ReportText {
    std::string summary;
    std::string description;
};

/// Fills report_context, detector_findings and retrieved_knowledge. Under a
/// token budget the lowest-ranked knowledge blocks are dropped first;
/// SlotOverflow when the prompt does not fit even without knowledge.
AssembledPrompt assemble_prompt(const PromptTemplate& tmpl, const StructuredReport& report, const ReportText& source,
                                const DetectionResult& detection, const rag::RetrievalResult* retrieval,
                                const rag::VectorIndex* index, const Ablation& ablation, std::size_t token_budget);

/// Numbered enumerated lines of an S2R completion; empty when there are none.
std::vector<std::string> parse_enumerated_steps(std::string_view completion);

/// Sends the prompt and validates the output. S2R must come back as a
/// numbered list; one retry with a format reminder, then UnparseableOutput.
ImprovementRecord improve_section(SectionKind section, const PromptTemplate& tmpl, const AssembledPrompt& assembled,
                                  provider::Gateway& gateway, std::string before, const Ablation& ablation);

struct ImproveConfig {
    rag::RetrievalConfig retrieval;
    std::size_t token_budget = 16000;
};

/// Improves every flagged required section (all three with the Enhance
/// template when the detector is ablated). Environment is never touched.
/// Per-section failures become failed records; authentication and transport
/// outages propagate.
ImprovedReport improve_report(const StructuredReport& report, const ReportText& source,
                              const DetectionResult& detection, provider::Gateway& gateway,
                              const PromptCatalog& catalog, const rag::VectorIndex* index, const Ablation& ablation,
                              const ImproveConfig& config = {});

}  // namespace brqual::improve
