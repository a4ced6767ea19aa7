#pragma once

#include "brqual/core/json.hpp"
#include "brqual/core/model.hpp"
#include "brqual/evaluate/similarity.hpp"
#include "brqual/evaluate/stats.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace brqual::evaluate {

/// Components compared in the study, in table order.
inline constexpr std::array<SectionKind, 3> kStudyComponents{
    SectionKind::ObservedBehavior, SectionKind::ExpectedBehavior, SectionKind::StepsToReproduce};
inline constexpr std::size_t kMinStudyTriples = 5;

/// Section texts of one report version; missing entries read as empty.
using SectionTexts = std::map<SectionKind, std::string>;

SectionTexts section_texts(const StructuredReport& report);

struct StudyTriple {
    std::string key;
    SectionTexts raw;
    SectionTexts improved_a;  // comparison pipeline
    SectionTexts improved_b;  // this pipeline
    SectionTexts ground_truth;
};

/// Sections are objects keyed by S2R/OB/EB (or full names).
void to_json(Json& j, const StudyTriple& t);
void from_json(const Json& j, StudyTriple& t);

enum class Metric { TfIdf, Embedding };
std::string_view to_string(Metric m);

struct ComponentScore {
    double tfidf = 0.0;
    double embedding = 0.0;

    double get(Metric m) const { return m == Metric::TfIdf ? tfidf : embedding; }
};

struct SimilarityScores {
    std::string key;
    std::map<SectionKind, ComponentScore> sections;
    ComponentScore average;  // per-report mean of the three components
};

void to_json(Json& j, const SimilarityScores& s);

struct StatTestResult {
    std::optional<SectionKind> component;  // nullopt is the Avg. row
    Metric metric = Metric::TfIdf;
    double mean_raw = 0.0;
    double mean_a = 0.0;
    double mean_b = 0.0;
    double w_statistic = 0.0;
    double p_value = 1.0;
    double corrected_alpha = 0.0;
    bool significant = false;
    double cliffs_delta = 0.0;
    Magnitude magnitude = Magnitude::Negligible;
    std::size_t pairs = 0;
    std::string note;
};

void to_json(Json& j, const StatTestResult& r);

struct StudyOptions {
    double alpha = 0.05;
    std::size_t workers = 1;
    /// IDF corpus shared by every component; by default each component is
    /// fitted on all of its texts across the four versions.
    std::optional<std::vector<std::string>> corpus;
    std::string name_a = "Baseline";
    std::string name_b = "Improved";
};

struct StudyReport {
    std::size_t triples = 0;
    double corrected_alpha = 0.0;
    std::vector<SimilarityScores> raw;
    std::vector<SimilarityScores> improved_a;
    std::vector<SimilarityScores> improved_b;
    std::vector<StatTestResult> tests;     // components x metrics, Bonferroni family
    std::vector<StatTestResult> averages;  // one Avg. row per metric, outside the family
    std::vector<std::string> warnings;
    std::string name_a;
    std::string name_b;
};

void to_json(Json& j, const StudyReport& r);

/// Scores raw and both improved versions against ground truth, then runs one
/// paired Wilcoxon test (b against a) per component and metric. A test with
/// too few non-zero differences reports p = 1 and a note. Throws
/// InsufficientData below kMinStudyTriples.
StudyReport run_similarity_study(const std::vector<StudyTriple>& triples, const WordVectors& table,
                                 const StudyOptions& options = {});

/// Plain-text table grouped by metric: Type | Metric | Raw | A | B | Diff. | p | delta.
std::string format_study_table(const StudyReport& report);

}  // namespace brqual::evaluate
