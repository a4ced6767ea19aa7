#pragma once

#include "brqual/core/model.hpp"
#include "brqual/detect/classifier.hpp"
#include "brqual/improve/catalog.hpp"
#include "brqual/provider/gateway.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace brqual::detect {

inline constexpr std::string_view kAnalyzePromptId = "detect.analyze.v1";

/// One Missing flag per required section (S2R, OB, EB) whose content has
/// fewer than the minimum-substance number of tokens.
std::vector<IssueFlag> heuristic_check(const StructuredReport& report);

struct AnalyzerPrior {
    double classifier_score = 0.0;
    double threshold = 0.5;
    std::vector<IssueFlag> flags;  // classifier and heuristic flags
};

struct AnalyzerOutput {
    std::vector<IssueFlag> flags;
    std::vector<std::string> recommendations;
    std::vector<std::string> warnings;
};

/// Parses the analyzer's line protocol:
///   FLAG|<section>|<issue_class>|<detail>
///   RECOMMENDATION|<text>
///   NO_ISSUES
/// Lines naming an unknown section or class are dropped with a warning.
/// Throws MalformedCompletion when no line follows the protocol.
AnalyzerOutput parse_analysis(std::string_view completion);

/// Prior findings as shown to the analyzer (and reused by the improver).
std::string format_prior(const AnalyzerPrior& prior);

/// Calls the analyzer prompt. A malformed completion contributes nothing
/// but a warning; provider errors propagate.
AnalyzerOutput llm_analyze(const StructuredReport& report, const AnalyzerPrior& prior, provider::Gateway& gateway,
                           const improve::PromptCatalog& catalog);

/// classify + heuristic_check, then the analyzer iff the classifier score
/// reaches the threshold or a heuristic flag exists. A score at or above the
/// threshold contributes one Classifier-sourced Enhance flag per required
/// section.
DetectionResult detect_report(const StructuredReport& report, std::string_view classifier_input,
                              const ClassifierModel& model, provider::Gateway& gateway,
                              const improve::PromptCatalog& catalog);

}  // namespace brqual::detect
