#include "brqual/core/model.hpp"

#include "brqual/core/error.hpp"
#include "brqual/core/text.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>

namespace brqual {

namespace {

int parse_int(std::string_view text, std::size_t pos, std::size_t len) {
    if (pos + len > text.size()) throw SchemaError("timestamp too short: " + std::string(text));
    int value = 0;
    auto sv = text.substr(pos, len);
    auto [ptr, ec] = std::from_chars(sv.data(), sv.data() + sv.size(), value);
    if (ec != std::errc{} || ptr != sv.data() + sv.size()) {
        throw SchemaError("malformed timestamp: " + std::string(text));
    }
    return value;
}

}  // namespace

std::string format_timestamp(Timestamp ts) {
    using namespace std::chrono;
    auto day = floor<days>(ts);
    year_month_day ymd{day};
    hh_mm_ss hms{ts - day};
    char buf[64];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02ld:%02ld:%02ldZ", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                  static_cast<long>(hms.hours().count()), static_cast<long>(hms.minutes().count()),
                  static_cast<long>(hms.seconds().count()));
    return buf;
}

Timestamp parse_timestamp(std::string_view text) {
    using namespace std::chrono;
    text = text::trim(text);
    // YYYY-MM-DDTHH:MM:SS
    if (text.size() < 19 || text[4] != '-' || text[7] != '-' || (text[10] != 'T' && text[10] != ' ') ||
        text[13] != ':' || text[16] != ':') {
        throw SchemaError("malformed timestamp: " + std::string(text));
    }
    const int y = parse_int(text, 0, 4);
    const int mo = parse_int(text, 5, 2);
    const int d = parse_int(text, 8, 2);
    const int h = parse_int(text, 11, 2);
    const int mi = parse_int(text, 14, 2);
    const int s = parse_int(text, 17, 2);
    year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
    if (!ymd.ok() || h > 23 || mi > 59 || s > 60) {
        throw SchemaError("timestamp out of range: " + std::string(text));
    }
    std::size_t pos = 19;
    if (pos < text.size() && text[pos] == '.') {
        ++pos;
        while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) ++pos;
    }
    seconds offset{0};
    if (pos < text.size()) {
        const char sign = text[pos];
        if (sign == 'Z' || sign == 'z') {
            ++pos;
        } else if (sign == '+' || sign == '-') {
            const int oh = parse_int(text, pos + 1, 2);
            std::size_t mpos = pos + 3;
            if (mpos < text.size() && text[mpos] == ':') ++mpos;
            const int om = parse_int(text, mpos, 2);
            offset = hours{oh} + minutes{om};
            if (sign == '-') offset = -offset;
            pos = mpos + 2;
        }
        if (pos != text.size()) throw SchemaError("malformed timestamp: " + std::string(text));
    }
    return sys_days{ymd} + hours{h} + minutes{mi} + seconds{s} - offset;
}

std::string_view to_string(SectionKind kind) {
    switch (kind) {
        case SectionKind::StepsToReproduce: return "StepsToReproduce";
        case SectionKind::Environment: return "Environment";
        case SectionKind::ObservedBehavior: return "ObservedBehavior";
        case SectionKind::ExpectedBehavior: return "ExpectedBehavior";
    }
    return "?";
}

std::string_view short_name(SectionKind kind) {
    switch (kind) {
        case SectionKind::StepsToReproduce: return "S2R";
        case SectionKind::Environment: return "ENV";
        case SectionKind::ObservedBehavior: return "OB";
        case SectionKind::ExpectedBehavior: return "EB";
    }
    return "?";
}

std::optional<SectionKind> parse_section_kind(std::string_view text) {
    text = text::trim(text);
    for (auto kind : kAllSections) {
        if (text::iequals(text, to_string(kind)) || text::iequals(text, short_name(kind))) return kind;
    }
    if (text::iequals(text, "Env")) return SectionKind::Environment;
    return std::nullopt;
}

std::string_view to_string(Provenance p) {
    switch (p) {
        case Provenance::LlmExtracted: return "LlmExtracted";
        case Provenance::HeaderMatched: return "HeaderMatched";
        case Provenance::HeuristicClassified: return "HeuristicClassified";
        case Provenance::MetadataEnriched: return "MetadataEnriched";
        case Provenance::Generated: return "Generated";
        case Provenance::Absent: return "Absent";
    }
    return "?";
}

std::optional<Provenance> parse_provenance(std::string_view text) {
    for (auto p : {Provenance::LlmExtracted, Provenance::HeaderMatched, Provenance::HeuristicClassified,
                   Provenance::MetadataEnriched, Provenance::Generated, Provenance::Absent}) {
        if (text == to_string(p)) return p;
    }
    return std::nullopt;
}

bool Section::empty() const { return text::trim(content).empty(); }

StructuredReport StructuredReport::blank(std::string key) {
    StructuredReport report;
    report.key = std::move(key);
    for (auto kind : kAllSections) report.sections[kind] = Section{};
    return report;
}

const Section& StructuredReport::section(SectionKind kind) const {
    static const Section kAbsent{};
    auto it = sections.find(kind);
    return it == sections.end() ? kAbsent : it->second;
}

void StructuredReport::set_section(SectionKind kind, std::string content, Provenance provenance) {
    auto& s = sections[kind];
    s.content = std::move(content);
    s.provenance = provenance;
    if (kind == SectionKind::StepsToReproduce) s2r_steps = parse_steps(s.content);
}

std::string format_sections(const StructuredReport& report) {
    std::string out;
    for (auto kind : kAllSections) {
        out += "<section name=\"";
        out += to_string(kind);
        out += "\">\n";
        const auto& content = report.section(kind).content;
        if (!content.empty()) {
            out += content;
            out += "\n";
        }
        out += "</section>\n";
    }
    return out;
}

std::vector<std::string> parse_steps(std::string_view content) {
    std::vector<std::string> steps;
    for (auto line : text::split_lines(content)) {
        auto step = text::strip_list_marker(line);
        if (!step.empty()) steps.push_back(std::move(step));
    }
    return steps;
}

std::string_view to_string(IssueClass c) {
    switch (c) {
        case IssueClass::Missing: return "Missing";
        case IssueClass::Incomplete: return "Incomplete";
        case IssueClass::Ambiguous: return "Ambiguous";
        case IssueClass::Enhance: return "Enhance";
    }
    return "?";
}

std::optional<IssueClass> parse_issue_class(std::string_view text) {
    text = text::trim(text);
    for (auto c : {IssueClass::Missing, IssueClass::Incomplete, IssueClass::Ambiguous, IssueClass::Enhance}) {
        if (text::iequals(text, to_string(c))) return c;
    }
    return std::nullopt;
}

int severity_rank(IssueClass c) { return static_cast<int>(c); }

std::string_view to_string(FlagSource s) {
    switch (s) {
        case FlagSource::Classifier: return "Classifier";
        case FlagSource::Heuristic: return "Heuristic";
        case FlagSource::LlmAnalyzer: return "LlmAnalyzer";
    }
    return "?";
}

bool merge_flag(std::vector<IssueFlag>& flags, IssueFlag flag) {
    auto same = [&](const IssueFlag& f) {
        return f.section == flag.section && f.issue_class == flag.issue_class && f.source == flag.source;
    };
    if (std::any_of(flags.begin(), flags.end(), same)) return false;
    flags.push_back(std::move(flag));
    return true;
}

std::vector<std::string> validate_structured_report(const StructuredReport& report, ReportOrigin origin) {
    std::vector<std::string> violations;
    if (report.key.empty()) violations.emplace_back("empty report key");
    for (auto kind : kAllSections) {
        auto it = report.sections.find(kind);
        if (it == report.sections.end()) {
            violations.push_back("missing section key: " + std::string(to_string(kind)));
            continue;
        }
        const auto& s = it->second;
        if (s.provenance == Provenance::Absent && !s.empty()) {
            violations.push_back("section " + std::string(to_string(kind)) +
                                 " has content but provenance Absent");
        }
        if (s.provenance != Provenance::Absent && s.empty()) {
            violations.push_back("section " + std::string(to_string(kind)) + " is empty but provenance " +
                                 std::string(to_string(s.provenance)));
        }
        if (origin == ReportOrigin::Preprocessor && s.provenance == Provenance::Generated) {
            violations.push_back("section " + std::string(to_string(kind)) +
                                 " has Generated provenance in preprocessor output");
        }
    }
    const bool s2r_empty = report.section(SectionKind::StepsToReproduce).empty();
    if (s2r_empty != report.s2r_steps.empty()) {
        violations.emplace_back("s2r_steps inconsistent with S2R content");
    }
    return violations;
}

}  // namespace brqual
