#pragma once

#include "brqual/core/model.hpp"
#include "brqual/improve/catalog.hpp"
#include "brqual/preprocess/clean.hpp"
#include "brqual/preprocess/rules.hpp"
#include "brqual/provider/gateway.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace brqual::preprocess {

inline constexpr std::string_view kExtractPromptId = "preprocess.extract.v1";

/// Conservative LLM extraction. The completion must be a JSON object keyed
/// by section name with string or null values; every extracted string must
/// fuzzily originate from summary + description. Empty descriptions
/// short-circuit to an all-Absent report without a provider call.
StructuredReport llm_extract_sections(const std::string& key, std::string_view summary,
                                      const CleanedText& description, provider::Gateway& gateway,
                                      const improve::PromptCatalog& catalog);

/// Parses an extraction completion (exposed for tests).
StructuredReport parse_extraction(const std::string& key, std::string_view completion, std::string_view source);

/// Two-stage fallback: explicit headers first (HeaderMatched), then
/// per-sentence cue voting (HeuristicClassified). Filled sections of
/// `partial` are never touched.
StructuredReport heuristic_extract_sections(std::string_view summary, const CleanedText& description,
                                            StructuredReport partial, const RuleSet& rules);

/// "Affects: v1, v2" and "Priority: P" lines, newline-separated; empty when
/// the report carries neither.
std::string metadata_block(const RawBugReport& raw);

StructuredReport enrich_metadata(StructuredReport report, const RawBugReport& raw);

struct PreprocessResult {
    StructuredReport report;
    std::vector<std::string> warnings;
};

/// clean -> llm extract -> heuristic fallback (when any section is Absent)
/// -> metadata enrichment. Never throws for a single bad report: provider and
/// completion failures become warnings. A null gateway skips the LLM level.
PreprocessResult preprocess_report(const RawBugReport& raw, provider::Gateway* gateway,
                                   const improve::PromptCatalog* catalog, const RuleSet& rules);

}  // namespace brqual::preprocess
