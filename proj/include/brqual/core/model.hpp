#pragma once

#include <array>
#include <chrono>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace brqual {

/// UTC instant with second precision.
using Timestamp = std::chrono::sys_seconds;

/// Renders as "YYYY-MM-DDTHH:MM:SSZ".
std::string format_timestamp(Timestamp ts);

/// Accepts ISO-8601 with optional fractional seconds and either "Z" or a
/// numeric offset ("+0000", "+01:00"). Fractional seconds are truncated.
Timestamp parse_timestamp(std::string_view text);

enum class SectionKind { StepsToReproduce, Environment, ObservedBehavior, ExpectedBehavior };

inline constexpr std::array<SectionKind, 4> kAllSections{
    SectionKind::StepsToReproduce, SectionKind::Environment, SectionKind::ObservedBehavior,
    SectionKind::ExpectedBehavior};

/// Sections the detector and the improver care about (Environment is optional).
inline constexpr std::array<SectionKind, 3> kRequiredSections{
    SectionKind::StepsToReproduce, SectionKind::ObservedBehavior, SectionKind::ExpectedBehavior};

std::string_view to_string(SectionKind kind);
std::string_view short_name(SectionKind kind);  // S2R / ENV / OB / EB
/// Accepts canonical names and the S2R/ENV/OB/EB abbreviations, case-insensitively.
std::optional<SectionKind> parse_section_kind(std::string_view text);

enum class Provenance {
    LlmExtracted,
    HeaderMatched,
    HeuristicClassified,
    MetadataEnriched,
    Generated,
    Absent
};

std::string_view to_string(Provenance p);
std::optional<Provenance> parse_provenance(std::string_view text);

struct Comment {
    std::string author;
    std::string body;
    Timestamp created{};

    bool operator==(const Comment&) const = default;
};

struct IssueLink {
    std::string link_type;
    std::string target_key;

    bool operator==(const IssueLink&) const = default;
};

struct RawBugReport {
    std::string key;
    std::string summary;
    std::string description;
    Timestamp created{};
    Timestamp updated{};
    std::string status;
    std::optional<std::string> resolution;
    std::vector<Comment> comments;
    std::vector<std::string> affected_versions;
    std::optional<std::string> priority;
    std::vector<IssueLink> issue_links;

    bool operator==(const RawBugReport&) const = default;
};

struct Section {
    std::string content;
    Provenance provenance = Provenance::Absent;

    bool empty() const;
    bool operator==(const Section&) const = default;
};

struct StructuredReport {
    std::string key;
    std::map<SectionKind, Section> sections;
    std::vector<std::string> s2r_steps;

    /// A report with all four sections present and Absent.
    static StructuredReport blank(std::string key);

    /// Missing keys read as an empty Absent section.
    const Section& section(SectionKind kind) const;

    /// Replaces a section; keeps s2r_steps in sync for StepsToReproduce.
    void set_section(SectionKind kind, std::string content, Provenance provenance);

    bool operator==(const StructuredReport&) const = default;
};

/// Prompt rendering of a report: one <section name="..."> block per kind in
/// canonical order, empty blocks for absent sections.
std::string format_sections(const StructuredReport& report);

/// Splits S2R content into steps: one per non-blank line, list markers removed.
std::vector<std::string> parse_steps(std::string_view content);

enum class IssueClass { Missing, Incomplete, Ambiguous, Enhance };
std::string_view to_string(IssueClass c);
std::optional<IssueClass> parse_issue_class(std::string_view text);
/// Lower rank is more severe.
int severity_rank(IssueClass c);

enum class FlagSource { Classifier, Heuristic, LlmAnalyzer };
std::string_view to_string(FlagSource s);

struct IssueFlag {
    SectionKind section = SectionKind::StepsToReproduce;
    IssueClass issue_class = IssueClass::Missing;
    std::string detail;
    FlagSource source = FlagSource::Heuristic;

    bool operator==(const IssueFlag&) const = default;
};

enum class Verdict { Pass, Fail };

struct DetectionResult {
    std::string key;
    Verdict verdict = Verdict::Pass;
    double classifier_score = 0.0;
    std::vector<IssueFlag> flags;
    std::vector<std::string> recommendations;
    bool llm_invoked = false;
    std::vector<std::string> warnings;

    bool operator==(const DetectionResult&) const = default;
};

/// Appends a flag unless one with the same (section, issue_class, source)
/// already exists. Returns true when the flag was added.
bool merge_flag(std::vector<IssueFlag>& flags, IssueFlag flag);

enum class ReportOrigin { Preprocessor, Improver };

/// Empty iff every StructuredReport invariant holds. Preprocessor-origin
/// reports additionally must not carry Generated provenance.
std::vector<std::string> validate_structured_report(const StructuredReport& report,
                                                    ReportOrigin origin = ReportOrigin::Improver);

}  // namespace brqual
